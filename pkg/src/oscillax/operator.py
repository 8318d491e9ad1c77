"""Grid functions, the unitary Fourier transform and three evaluators of ``F``.

* ``apply_fio_direct``: quadrature of ``int exp(i phi psi) a(x, theta) Fu(theta) dtheta``.
* ``apply_reduced``: after the change of variables, ``int u(g(x) z) prod FK(z_j) dz``.
* ``apply_to_box``: closed form ``(2 pi)^(-n/2) (int_{-N}^{N} FK)^n``, ``N = eps/g(x)``,
  valid for the box test function ``u_eps``.
"""
from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import ndimage

from ._dft import centred_nodes, unitary_dft
from ._parallel import ordered_map
from .errors import DomainError, ResolutionError
from .mollifier import RadialScale
from .symbol import CounterexampleSymbol, CutoffK, PhasePair

log = logging.getLogger(__name__)

_MAGIC = b"OSXG"
_HEADER = struct.Struct("<4sIId")


@dataclass(frozen=True)
class GridFunction:
    """Complex samples on the tensor grid ``((k - M/2) h)``, ``h = 2 L / M``, on every axis."""

    n: int
    extent: float
    points_per_axis: int
    values: np.ndarray

    def __post_init__(self):
        m = self.points_per_axis
        if m < 4 or m & (m - 1):
            raise DomainError(f"points_per_axis must be a power of two >= 4, got {m}")
        if self.values.shape != (m,) * self.n:
            raise DomainError(f"values shape {self.values.shape} does not match {(m,) * self.n}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / self.points_per_axis

    def nodes(self) -> np.ndarray:
        return centred_nodes(self.points_per_axis, self.spacing)

    def points(self) -> np.ndarray:
        """All grid points, shape ``(M,)*n + (n,)``."""
        axes = np.meshgrid(*([self.nodes()] * self.n), indexing="ij")
        return np.stack(axes, axis=-1)

    @classmethod
    def from_function(cls, f: Callable, n: int, extent: float, points_per_axis: int):
        """Sample ``f(points)`` with points of shape ``(..., n)``."""
        h = 2.0 * extent / points_per_axis
        axes = np.meshgrid(*([centred_nodes(points_per_axis, h)] * n), indexing="ij")
        vals = np.asarray(f(np.stack(axes, axis=-1)), dtype=complex)
        return cls(n, float(extent), points_per_axis, vals)

    def save(self, path) -> None:
        """Write ``<path>`` (header + row-major little-endian complex64) and ``<path>.json``."""
        path = Path(path)
        try:
            with open(path, "wb") as fh:
                fh.write(_HEADER.pack(_MAGIC, self.n, self.points_per_axis, self.extent))
                fh.write(np.ascontiguousarray(self.values, dtype="<c8").tobytes())
            sidecar = {"n": self.n, "points_per_axis": self.points_per_axis,
                       "extent": self.extent, "dtype": "complex64", "byte_order": "little",
                       "layout": "row-major", "header_bytes": _HEADER.size}
            path.with_name(path.name + ".json").write_text(json.dumps(sidecar, indent=2))
        except OSError as exc:
            raise OSError(f"cannot write grid function to {path}: {exc}") from exc

    @classmethod
    def load(cls, path) -> "GridFunction":
        raw = Path(path).read_bytes()
        magic, n, m, extent = _HEADER.unpack_from(raw)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a grid-function record")
        vals = np.frombuffer(raw, dtype="<c8", offset=_HEADER.size).reshape((m,) * n)
        return cls(n, extent, m, vals.astype(complex))


def l2_norm(u: GridFunction) -> float:
    """``sqrt(h^n sum |u|^2)``; numpy's pairwise summation keeps the order fixed."""
    return math.sqrt(u.spacing**u.n * float(np.sum(np.abs(u.values) ** 2)))


def fourier_transform(u: GridFunction) -> GridFunction:
    """``Fu(theta) = (2 pi)^(-n/2) int exp(-i y.theta) u(y) dy`` on the dual grid.

    The dual grid has spacing ``2 pi / (M h)`` and half-width ``pi / h``; the
    discrete map is exactly unitary.
    """
    vals = unitary_dft(u.values, u.spacing)
    return GridFunction(u.n, math.pi / u.spacing, u.points_per_axis, vals)


def inverse_fourier_transform(v: GridFunction) -> GridFunction:
    vals = unitary_dft(v.values, v.spacing, inverse=True)
    return GridFunction(v.n, math.pi / v.spacing, v.points_per_axis, vals)


@dataclass(frozen=True)
class BoxTestFunction:
    """``u_eps = (2 pi)^(-n/2)`` on ``[-eps, eps]^n`` and 0 elsewhere."""

    epsilon: float
    n: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def height(self) -> float:
        return (2 * math.pi) ** (-self.n / 2)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        inside = np.all(np.abs(y) <= self.epsilon, axis=-1)
        return np.where(inside, self.height, 0.0)

    def l2_norm(self) -> float:
        return self.height * (2 * self.epsilon) ** (self.n / 2)

    def to_grid(self, extent: float, points_per_axis: int) -> tuple[GridFunction, float]:
        """Grid samples with ``eps`` snapped to the nearest cell face ``(j + 1/2) h``.

        Returns the grid function and the snapped half-width it represents exactly.
        """
        h = 2.0 * extent / points_per_axis
        j = max(0, int(round(self.epsilon / h - 0.5)))
        eps_snapped = (j + 0.5) * h
        if eps_snapped >= extent:
            raise ResolutionError("box does not fit inside the grid")
        y = centred_nodes(points_per_axis, h)
        inside1 = np.abs(y) <= j * h * (1 + 1e-12)
        mask = inside1
        for _ in range(self.n - 1):
            mask = np.multiply.outer(mask, inside1)
        vals = np.where(mask, self.height, 0.0).astype(complex)
        return GridFunction(self.n, float(extent), points_per_axis, vals), eps_snapped


# --------------------------------------------------------------------------
# direct evaluator

def _boundary_max(v: np.ndarray) -> float:
    m = 0.0
    for ax in range(v.ndim):
        m = max(m, float(np.max(np.abs(np.take(v, [0, -1], axis=ax)))))
    return m


def _as_points(x, n) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1 and x.shape[0] == n
    return np.atleast_2d(x).reshape(-1, n), single


def apply_fio_direct(symbol: Callable, u: GridFunction, x, phase: PhasePair | None = None,
                     boundary_tol: float = 1e-12, chunk_elems: int = 2**22):
    """``(Fu)(x) = int exp(i phi(x) psi(theta)) a(x, theta) Fu(theta) dtheta`` by trapezoid.

    ``symbol(x, theta)`` must broadcast over leading axes.  ``x`` is a point, an array
    of points ``(k, n)`` or a ``GridFunction`` whose grid supplies the points (the
    result is then a ``GridFunction`` on that grid).  ``Fu`` must have decayed below
    ``boundary_tol`` (relative) at the edge of the dual grid.
    """
    if phase is None:
        phase = getattr(symbol, "phase", None)
        if phase is None:
            raise DomainError("a phase is required for a bare symbol callable")
    n = u.n
    fu = fourier_transform(u)
    peak = float(np.max(np.abs(fu.values)))
    edge = _boundary_max(fu.values)
    if peak > 0 and edge > boundary_tol * peak:
        raise ResolutionError(
            f"Fu has relative mass {edge / peak:.3e} at the theta-grid boundary "
            f"(|theta| = {fu.extent:.4g}); refine the y-grid")
    theta = fu.points().reshape(-1, n)
    fvals = fu.values.reshape(-1)
    w = fu.spacing**n
    psi = phase.psi(theta)

    grid_out = isinstance(x, GridFunction)
    pts, single = _as_points(x.points() if grid_out else x, n)

    step = max(1, chunk_elems // max(1, theta.shape[0]))
    chunks = [pts[i:i + step] for i in range(0, pts.shape[0], step)]

    def work(xs):
        phi = phase.phi(xs)[:, None]
        a = symbol(xs[:, None, :], theta[None, :, :])
        return w * np.sum(np.exp(1j * phi * psi[None, :]) * a * fvals[None, :], axis=1)

    out = np.concatenate(ordered_map(work, chunks)) if chunks else np.zeros(0, complex)
    if grid_out:
        return GridFunction(n, x.extent, x.points_per_axis, out.reshape(x.values.shape))
    return complex(out[0]) if single else out


# --------------------------------------------------------------------------
# reduced evaluator

def _z_nodes(cutoff: CutoffK, stride: int, z_extent: float | None):
    centre = cutoff.z.size // 2
    limit = cutoff.z_max if z_extent is None else min(z_extent, cutoff.z_max)
    jmax = int(math.floor(limit / (stride * cutoff.h_z) + 1e-9))
    idx = centre + stride * np.arange(-jmax, jmax + 1)
    z = cutoff.z[idx]
    fk = cutoff.ft_table[idx]
    w = np.full(z.size, stride * cutoff.h_z)
    w[[0, -1]] *= 0.5
    return z, fk * w


class _Interpolant:
    """Cubic-spline evaluation of a grid function at arbitrary points, zero outside."""

    def __init__(self, u: GridFunction):
        self.u = u
        self.h = u.spacing
        self.half = u.points_per_axis // 2
        self.re = ndimage.spline_filter(u.values.real, order=3, mode="mirror")
        self.im = ndimage.spline_filter(u.values.imag, order=3, mode="mirror")
        self.edge = _boundary_max(u.values)

    def __call__(self, pts):
        coords = (np.moveaxis(pts, -1, 0) / self.h + self.half).reshape(self.u.n, -1)
        kw = dict(order=3, mode="constant", cval=0.0, prefilter=False)
        vals = (ndimage.map_coordinates(self.re, coords, **kw)
                + 1j * ndimage.map_coordinates(self.im, coords, **kw))
        return vals.reshape(pts.shape[:-1])


def reduced_integral(u, g_value: float, cutoff: CutoffK, n: int, *, z_stride: int = 1,
                     z_extent: float | None = None) -> complex:
    """``int u(g z) prod_j FK(z_j) dz`` by tensor trapezoid on (a stride of) the FK table."""
    if not g_value > 0:
        raise DomainError("g(x) must be positive (x = 0 is excluded)")
    z, wfk = _z_nodes(cutoff, z_stride, z_extent)
    f = _Interpolant(u) if isinstance(u, GridFunction) else u
    if isinstance(u, GridFunction):
        outside = g_value * z.max() > u.extent
        if outside and f.edge > 0:
            log.debug("reduced: u sampled beyond its grid (|g z| up to %.3g > %.3g); "
                      "zero extension, boundary magnitude %.2e", g_value * z.max(), u.extent,
                      f.edge)
    if n == 1:
        vals = f(g_value * z[:, None])
        return complex(np.sum(vals * wfk))
    # accumulate over slabs of the first axis to bound memory
    rest = np.stack(np.meshgrid(*([z] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1)
    wrest = wfk
    for _ in range(n - 2):
        wrest = np.multiply.outer(wrest, wfk)
    wrest = wrest.reshape(-1)
    slab = max(1, 2**22 // rest.shape[0])
    total = 0.0 + 0.0j
    for i in range(0, z.size, slab):
        z1 = z[i:i + slab]
        pts = np.concatenate(
            [np.broadcast_to(z1[:, None, None], (z1.size, rest.shape[0], 1)),
             np.broadcast_to(rest[None, :, :], (z1.size, rest.shape[0], n - 1))], axis=-1)
        vals = f(g_value * pts)
        total += np.sum(wfk[i:i + slab, None] * wrest[None, :] * vals)
    return complex(total)


def apply_reduced(u, g: RadialScale, cutoff: CutoffK, x, spatial_cutoff: Callable | None = None,
                  *, z_stride: int = 1, z_extent: float | None = None):
    """``(Fu)(x) = prod_j chi(x_j) int u(g(x) z) prod_j FK(z_j) dz``.

    ``u`` is a ``GridFunction`` (cubic interpolation, zero outside its grid) or a
    callable on points ``(..., n)``.  ``x`` is one point or an array of points.
    """
    n = u.n if isinstance(u, (GridFunction, BoxTestFunction)) else np.asarray(x).shape[-1]
    pts, single = _as_points(x, n)
    gs = np.atleast_1d(g(pts))
    if np.any(gs <= 0):
        raise DomainError("apply_reduced needs g(x) > 0; x = 0 is outside the domain")
    if spatial_cutoff is None:
        spatial = np.ones(pts.shape[0])
    else:
        spatial = np.prod(spatial_cutoff(pts), axis=-1)
    out = np.array([spatial[i] * reduced_integral(u, float(gs[i]), cutoff, n, z_stride=z_stride,
                                                  z_extent=z_extent)
                    for i in range(pts.shape[0])])
    return complex(out[0]) if single else out


def apply_symbol_reduced(sym: CounterexampleSymbol, u, x, **kw):
    """``apply_reduced`` with the scale, cutoff and spatial cutoff taken from ``sym``."""
    return apply_reduced(u, sym.g, sym.cutoff, x, sym.spatial_cutoff, **kw)


# --------------------------------------------------------------------------
# closed form for boxes

def apply_to_box(eps: float, g_at_x, cutoff: CutoffK, n: int):
    """``(2 pi)^(-n/2) (int_{-N}^{N} FK)^n`` with ``N = eps / g(x)``.

    ``g_at_x`` may be an array; ``g = 0`` means ``N = inf`` and gives the
    inversion limit 1.  ``N > z_max`` is clamped to that limit (logged).
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    g_at_x = np.asarray(g_at_x, dtype=float)
    if np.any(g_at_x < 0):
        raise DomainError("g(x) must be nonnegative")
    with np.errstate(divide="ignore"):
        N = np.where(g_at_x > 0, eps / np.where(g_at_x > 0, g_at_x, 1.0), np.inf)
    if np.any(N > cutoff.z_max):
        log.debug("apply_to_box: inversion limit used for %d point(s) with eps/g > z_max",
                  int(np.count_nonzero(N > cutoff.z_max)))
    val = (np.asarray(cutoff.cumint(N)) / math.sqrt(2 * math.pi)) ** n
    return val if val.ndim else float(val)


def box_profile(cutoff: CutoffK, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tabulated ``N`` and ``|(2 pi)^(-n/2) (int_{-N}^{N} FK)^n|``."""
    return cutoff.n_grid, np.abs((cutoff.cumint_table / math.sqrt(2 * math.pi)) ** n)


def find_N0(cutoff: CutoffK, beta: float, n: int) -> float:
    """Smallest tabulated ``N`` such that the truncated inversion integral stays ``>= beta`` beyond it."""
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    N, P = box_profile(cutoff, n)
    bad = np.nonzero(P < beta)[0]
    if bad.size == 0:
        return float(N[0])
    last = int(bad[-1])
    # the truncated integral must settle at least a few units before the table ends
    if last + 1 >= N.size or N[last + 1] > 0.9 * cutoff.z_max:
        raise ResolutionError(
            f"truncated inversion integral has not settled above beta={beta} within z_max={cutoff.z_max}")
    return float(N[last + 1])
