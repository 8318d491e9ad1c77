"""Cutoff K, separable phases, the counterexample symbol and the symbol-class checker."""
from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicHermiteSpline

from ._dft import centred_nodes, unitary_dft
from ._parallel import ordered_map
from .errors import DomainError, ResolutionError
from .mollifier import MollifierB, RadialScale, WeightFunction, smooth_step

log = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2 * math.pi)


def plateau_cutoff(t, plateau: float) -> np.ndarray:
    """1 on ``[-plateau, plateau]``, 0 outside ``(-1, 1)``, C-infinity ramp in between."""
    t = np.asarray(t, dtype=float)
    return smooth_step((1.0 - np.abs(t)) / (1.0 - plateau))


# --------------------------------------------------------------------------
# cutoff K

@dataclass(frozen=True)
class CutoffK:
    """Plateau cutoff ``K`` with tables of its unitary Fourier transform ``FK``.

    ``z``/``ft_table`` hold ``FK`` on ``[-z_max, z_max]`` with spacing ``h_z``;
    ``n_grid``/``cumint_table`` hold ``N -> int_{-N}^{N} FK`` for the nonnegative nodes.
    """

    delta_plateau: float
    z_max: float
    h_z: float
    z: np.ndarray = field(repr=False)
    ft_table: np.ndarray = field(repr=False)
    n_grid: np.ndarray = field(repr=False)
    cumint_table: np.ndarray = field(repr=False)
    _spline: CubicHermiteSpline = field(repr=False, compare=False)

    def __call__(self, t):
        return plateau_cutoff(t, self.delta_plateau)

    def cumint(self, N):
        """``int_{-N}^{N} FK`` by Hermite interpolation of the table (slope ``2 FK(N)``).

        Beyond ``z_max`` (including ``N = inf``) the full-line value ``sqrt(2 pi) K(0)``
        is returned and the clamp is logged.
        """
        N = np.abs(np.asarray(N, dtype=float))
        out = np.empty_like(N)
        beyond = N > self.z_max
        if np.any(beyond):
            log.debug("cumint: %d argument(s) beyond z_max=%g clamped to the inversion limit",
                      int(np.count_nonzero(beyond)), self.z_max)
        out[beyond] = SQRT_2PI
        out[~beyond] = self._spline(N[~beyond])
        return out if out.ndim else float(out)

    def inversion_value(self) -> float:
        """``(2 pi)^(-1/2) int_{-z_max}^{z_max} FK``; equals ``K(0) = 1`` up to quadrature."""
        return float(self.cumint_table[-1] / SQRT_2PI)

    def config(self) -> dict:
        return {"delta_plateau": self.delta_plateau, "z_max": self.z_max, "h_z": self.h_z,
                "table_points": int(self.z.size)}


def make_cutoff(delta_plateau: float = 0.5, z_max: float = 128.0,
                grid_size: int = 2**17) -> CutoffK:
    """Build ``K`` and tabulate ``FK(z) = (2 pi)^(-1/2) int exp(-itz) K(t) dt``.

    ``K`` is sampled with Nyquist frequency ``2 z_max`` on ``grid_size`` points,
    so the zero padding sets ``h_z = 4 z_max / grid_size``.
    """
    if not 0.0 < delta_plateau < 1.0:
        raise DomainError(f"delta_plateau must lie in (0, 1), got {delta_plateau}")
    if grid_size < 2**12 or grid_size & (grid_size - 1):
        raise DomainError(f"grid_size must be a power of two >= 4096, got {grid_size}")
    h_t = math.pi / (2.0 * z_max)
    if grid_size * h_t / 2 <= 1.0:
        raise DomainError("grid too short to contain the support of K")
    t = centred_nodes(grid_size, h_t)
    fk = unitary_dft(plateau_cutoff(t, delta_plateau), h_t).real
    h_z = 2 * math.pi / (grid_size * h_t)
    z = centred_nodes(grid_size, h_z)
    keep = np.abs(z) <= z_max * (1 + 1e-12)
    z, fk = z[keep], fk[keep]
    pos = z >= 0
    n_grid, fk_pos = z[pos], fk[pos]
    # FK is even: int_{-N}^{N} = 2 int_0^N
    cum = 2.0 * cumulative_trapezoid(fk_pos, n_grid, initial=0.0)
    spline = CubicHermiteSpline(n_grid, cum, 2.0 * fk_pos)
    for arr in (z, fk, n_grid, cum):
        arr.flags.writeable = False
    return CutoffK(delta_plateau=float(delta_plateau), z_max=float(z_max), h_z=h_z, z=z,
                   ft_table=fk, n_grid=n_grid, cumint_table=cum, _spline=spline)


# --------------------------------------------------------------------------
# phases

@dataclass(frozen=True)
class PhasePair:
    """Separable phase ``S(x, theta) = phi(x) psi(theta)``; last axis is the coordinate."""

    phi: Callable[[np.ndarray], np.ndarray]
    psi: Callable[[np.ndarray], np.ndarray]
    lip_const: float
    n: int
    metadata: dict = field(default_factory=dict)

    def __call__(self, x, theta):
        return self.phi(np.asarray(x, dtype=float)) * self.psi(np.asarray(theta, dtype=float))


def default_phase(n: int) -> PhasePair:
    """``phi(x) = x_1 + ... + x_n`` and ``psi(theta) = |theta|``."""
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}")
    return PhasePair(
        phi=lambda x: np.sum(x, axis=-1),
        psi=lambda th: np.linalg.norm(th, axis=-1),
        lip_const=math.sqrt(n),
        n=n,
        metadata={"psi_smooth_at_origin": False,
                  "note": "psi = |theta| is smooth only away from theta = 0"},
    )


def certify_lip_const(phase: PhasePair, samples: int = 10_000, seed: int = 0) -> float:
    """Largest ``|phi(x)| / |x|`` over uniform samples of the unit ball."""
    rng = np.random.default_rng(seed)
    n = phase.n
    d = rng.standard_normal((samples, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = rng.random(samples) ** (1.0 / n)
    x = d * r[:, None]
    return float(np.max(np.abs(phase.phi(x)) / np.linalg.norm(x, axis=1)))


def check_phase(phase: PhasePair, samples: int = 2000, seed: int = 0) -> dict[str, bool]:
    """Sampled check of the phase hypotheses; returns one flag per property."""
    rng = np.random.default_rng(seed)
    n = phase.n
    x = rng.uniform(-1, 1, (samples, n))
    x = x[np.linalg.norm(x, axis=1) <= 1]
    h = 1e-6
    grad = np.stack([(phase.phi(x + h * e) - phase.phi(x - h * e)) / (2 * h)
                     for e in np.eye(n)], axis=-1)
    th = rng.standard_normal((samples, n))
    s = rng.uniform(0.01, 100.0, samples)
    return {
        "lip_bound": bool(np.all(np.abs(phase.phi(x))
                                 <= phase.lip_const * np.linalg.norm(x, axis=1) * (1 + 1e-12))),
        "gradient_nonzero": bool(np.all(np.linalg.norm(grad, axis=1) > 0)),
        "psi_homogeneous": bool(np.allclose(phase.psi(s[:, None] * th), s * phase.psi(th),
                                            rtol=1e-13, atol=0)),
        "psi_nonvanishing": bool(np.all(phase.psi(th) != 0)),
    }


# --------------------------------------------------------------------------
# the counterexample symbol

@dataclass(frozen=True)
class CounterexampleSymbol:
    """``a(x, theta) = exp(-i phi(x) psi(theta)) prod_j chi(x_j) K(b(|x|) |x| theta_j)``.

    ``chi`` (``spatial_cutoff``) equals 1 on ``[-beta, beta]`` and vanishes outside
    ``(-1, 1)``.  With ``use_spatial_cutoff=False`` the factor is dropped, which is
    the symbol ``q`` studied on ``[-1, 1]^n``.
    """

    phase: PhasePair
    cutoff: CutoffK
    b: MollifierB
    beta: float = 0.9
    use_spatial_cutoff: bool = True

    @property
    def n(self) -> int:
        return self.phase.n

    @property
    def g(self) -> RadialScale:
        return RadialScale(self.b)

    def spatial_cutoff(self, s):
        if not self.use_spatial_cutoff:
            return np.ones_like(np.asarray(s, dtype=float))
        return plateau_cutoff(s, self.beta)

    def amplitude(self, x, theta):
        """``|a|``-part: the real product of spatial cutoffs and ``K`` factors."""
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        g = self.g(x)[..., None]
        return np.prod(self.spatial_cutoff(x) * self.cutoff(g * theta), axis=-1)

    def __call__(self, x, theta):
        return symbol_eval(self, x, theta)

    def describe(self) -> dict:
        return {
            "n": self.n,
            "beta": self.beta,
            "use_spatial_cutoff": self.use_spatial_cutoff,
            "cutoff": self.cutoff.config(),
            "mollifier": self.b.to_record(),
            "phase": {"phi": "sum(x)", "psi": "|theta|", "lip_const": self.phase.lip_const,
                      **self.phase.metadata},
        }


def build_counterexample_symbol(b: MollifierB, n: int = 1, *, beta: float = 0.9,
                                cutoff: CutoffK | None = None,
                                phase: PhasePair | None = None,
                                use_spatial_cutoff: bool = True) -> CounterexampleSymbol:
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    return CounterexampleSymbol(
        phase=phase or default_phase(n),
        cutoff=cutoff or make_cutoff(),
        b=b,
        beta=beta,
        use_spatial_cutoff=use_spatial_cutoff,
    )


def symbol_eval(sym: CounterexampleSymbol, x, theta) -> np.ndarray:
    """Evaluate ``a(x, theta)``; ``x`` and ``theta`` broadcast over leading axes."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return np.exp(-1j * sym.phase(x, theta)) * sym.amplitude(x, theta)


# --------------------------------------------------------------------------
# symbol-class checking

@dataclass(frozen=True)
class SymbolClassSpec:
    """``|d_x^alpha d_theta^gamma a| <= C lambda^(m - rho|gamma| + delta|alpha|)``.

    With ``weight`` set the bound becomes
    ``lambda^(m + delta|alpha| - |gamma|) * weight(lambda)^|gamma|`` and ``rho`` is unused.
    """

    m: float = 0.0
    rho: float = 1.0
    delta_class: float = 1.0
    weight: WeightFunction | None = None

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if self.delta_class < 0:
            raise DomainError(f"delta must be nonnegative, got {self.delta_class}")

    def bound(self, lam, alpha_order: int, gamma_order: int):
        lam = np.asarray(lam, dtype=float)
        if self.weight is None:
            return lam ** (self.m - self.rho * gamma_order + self.delta_class * alpha_order)
        return (lam ** (self.m + self.delta_class * alpha_order - gamma_order)
                * self.weight(lam) ** gamma_order)

    def describe(self) -> dict:
        return {"m": self.m, "rho": self.rho, "delta_class": self.delta_class,
                "weight": None if self.weight is None else self.weight.label}


@dataclass
class CheckReport:
    entries: list[dict]
    passed: bool
    config: dict
    notes: list[str]

    def entry(self, alpha, gamma) -> dict:
        for e in self.entries:
            if tuple(e["alpha"]) == tuple(alpha) and tuple(e["gamma"]) == tuple(gamma):
                return e
        raise KeyError((alpha, gamma))

    def to_dict(self) -> dict:
        return {"passed": self.passed, "entries": self.entries, "config": self.config,
                "notes": self.notes}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


#: slope of log(sup) against log|theta| above which a ratio counts as growing
TREND_SLOPE_LIMIT = 0.1
#: ratios below this are treated as exact zeros (finite-difference round-off)
NOISE_FLOOR = 1e-8
_MAX_X_RATIO = 1.25


def default_x_grid(n: int = 1, per_octave: int = 16, octaves: int = 23,
                   directions: int | None = None) -> np.ndarray:
    """Origin plus log-spaced radii ``2^-octaves .. 1`` along fixed directions."""
    radii = 2.0 ** (-np.arange(octaves * per_octave + 1) / per_octave)
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        dirs = _sphere_directions(n, directions or 6, offset=0.5)
    pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    pts = pts[np.all(np.abs(pts) <= 1.0, axis=1)]
    return np.vstack([np.zeros((1, n)), pts])


def default_theta_grid(n: int = 1, per_octave: int = 4, max_exp: int = 16,
                       directions: int | None = None) -> np.ndarray:
    """Magnitudes ``2^0 .. 2^max_exp`` times fixed quasi-uniform directions."""
    mags = 2.0 ** (np.arange(max_exp * per_octave + 1) / per_octave)
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        dirs = _sphere_directions(n, directions or 6, offset=0.0)
    return (mags[:, None, None] * dirs[None, :, :]).reshape(-1, n)


def _sphere_directions(n: int, count: int, offset: float) -> np.ndarray:
    if n == 2:
        ang = (np.arange(count) + offset) * 2 * np.pi / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    # Fibonacci-style lattice lifted to n dims via a fixed seed keeps determinism
    rng = np.random.default_rng(12345 + count)
    d = rng.standard_normal((count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _multi_indices(n: int, max_order: int):
    return [a for a in itertools.product(range(max_order + 1), repeat=n) if sum(a) <= max_order]


_STENCILS = {0: ((0.0, 1.0),), 1: ((-1.0, -0.5), (1.0, 0.5)), 2: ((-1.0, 1.0), (0.0, -2.0), (1.0, 1.0))}


def _mixed_derivative(a, x, theta, hx, ht, alpha, gamma):
    """Tensor-product central differences; ``hx``/``ht`` broadcast against the pair grid."""
    n = x.shape[-1]
    orders = list(alpha) + list(gamma)
    total = 0.0
    for combo in itertools.product(*(_STENCILS[o] for o in orders)):
        shift_x = np.stack([combo[j][0] * hx for j in range(n)], axis=-1)
        shift_t = np.stack([combo[n + j][0] * ht for j in range(n)], axis=-1)
        w = float(np.prod([c[1] for c in combo]))
        total = total + w * a(x + shift_x, theta + shift_t)
    denom = hx ** sum(alpha) * ht ** sum(gamma)
    return total / denom


def symbol_class_check(a: Callable, spec: SymbolClassSpec, max_order: int = 2,
                       x_grid=None, theta_grid=None, *, n: int | None = None,
                       theta_rel_step: float = 1e-3, x_scale: float = 1e-3,
                       x_step_max: float = 1e-4, extra_config: dict | None = None) -> CheckReport:
    """Sampled supremum of ``|d_x^alpha d_theta^gamma a| / bound`` for ``|alpha|, |gamma| <= max_order``.

    Steps are ``theta_rel_step * (1 + |theta|)`` in each theta coordinate and
    ``min(x_step_max, x_scale / (1 + |theta|))`` in each x coordinate.  An entry
    passes when its supremum is finite and the least-squares slope of log(sup)
    against log|theta| over the top two decades of |theta| stays below 0.1.
    Points with ``|theta| < 1`` are dropped: ``psi = |theta|`` has a kink at 0.
    """
    if max_order > 2 or max_order < 0:
        raise DomainError("max_order must be 0, 1 or 2")
    if x_grid is None or theta_grid is None:
        if n is None:
            n = getattr(a, "n", 1)
    x_grid = default_x_grid(n) if x_grid is None else np.atleast_2d(np.asarray(x_grid, float))
    theta_grid = (default_theta_grid(n) if theta_grid is None
                  else np.atleast_2d(np.asarray(theta_grid, float)))
    n = x_grid.shape[1]
    if theta_grid.shape[1] != n:
        raise DomainError("x_grid and theta_grid dimensions differ")
    if np.any(np.abs(x_grid) > 1.0):
        raise DomainError("x_grid must lie in [-1, 1]^n")

    mags = np.linalg.norm(theta_grid, axis=1)
    kept = mags >= 1.0
    notes = ["theta points with |theta| < 1 are excluded (psi = |theta| is not smooth at 0)"]
    if not np.all(kept):
        notes.append(f"dropped {int(np.count_nonzero(~kept))} theta point(s) inside the unit ball")
    theta_grid, mags = theta_grid[kept], mags[kept]
    if theta_grid.size == 0:
        raise DomainError("theta_grid has no point with |theta| >= 1")
    lam = 1.0 + mags

    hx = np.minimum(x_step_max, x_scale / lam)
    ht = theta_rel_step * lam
    if np.max(hx * lam) > 0.05 or theta_rel_step > 0.05:
        raise ResolutionError("finite-difference step exceeds 5% of the oscillation scale 1/lambda")
    radii = np.unique(np.linalg.norm(x_grid, axis=1))
    radii = radii[radii > 0]
    lam_max = float(lam.max())
    if radii.size == 0 or radii[0] > 1.0 / lam_max:
        raise ResolutionError(
            f"x_grid does not reach the transition layer |x| ~ 1/lambda = {1 / lam_max:.3g}")
    band = radii[radii >= 1.0 / lam_max]
    if band.size > 1 and np.max(band[1:] / band[:-1]) > _MAX_X_RATIO:
        raise ResolutionError(
            f"x_grid radii too sparse: consecutive ratio {np.max(band[1:] / band[:-1]):.3g} "
            f"> {_MAX_X_RATIO} cannot resolve the plateau transition")

    X = x_grid[:, None, :]
    T = theta_grid[None, :, :]
    HX = hx[None, :]
    HT = ht[None, :]

    mag_keys = np.round(np.log2(mags), 9)
    uniq = np.unique(mag_keys)
    top = uniq[uniq >= uniq.max() - math.log2(100.0)]

    pairs = [(al, ga) for al in _multi_indices(n, max_order) for ga in _multi_indices(n, max_order)]

    def work(pair):
        al, ga = pair
        with np.errstate(all="ignore"):
            d = _mixed_derivative(a, X, T, HX, HT, al, ga)
        ratio = np.abs(d) / spec.bound(lam, sum(al), sum(ga))[None, :]
        finite = bool(np.all(np.isfinite(ratio)))
        flat = np.where(np.isfinite(ratio), ratio, np.inf)
        idx = int(np.argmax(flat))
        ix, it = np.unravel_index(idx, ratio.shape)
        per_col = np.max(flat, axis=0)
        per_mag = np.array([np.max(per_col[mag_keys == k]) for k in top])
        if len(top) >= 2 and finite:
            y = np.log(np.maximum(per_mag, NOISE_FLOOR))
            slope = float(np.polyfit(top * math.log(2.0), y, 1)[0])
        else:
            slope = 0.0 if finite else math.inf
        return {
            "alpha": list(al), "gamma": list(ga),
            "sup": float(flat.max()),
            "argmax_x": x_grid[ix].tolist(), "argmax_theta": theta_grid[it].tolist(),
            "trend_slope": slope,
            "passed": bool(finite and slope < TREND_SLOPE_LIMIT),
        }

    entries = ordered_map(work, pairs)
    config = {
        "spec": spec.describe(), "max_order": max_order, "n": n,
        "x_points": int(x_grid.shape[0]), "theta_points": int(theta_grid.shape[0]),
        "theta_magnitude_range": [float(mags.min()), float(mags.max())],
        "x_radius_range": [float(radii[0]), float(radii[-1])],
        "theta_rel_step": theta_rel_step, "x_scale": x_scale, "x_step_max": x_step_max,
        "trend_slope_limit": TREND_SLOPE_LIMIT, "trend_window_decades": 2,
        **(extra_config or {}),
    }
    return CheckReport(entries=entries, passed=all(e["passed"] for e in entries),
                       config=config, notes=notes)


def check_symbol(sym: CounterexampleSymbol, spec: SymbolClassSpec, max_order: int = 2,
                 x_grid=None, theta_grid=None, **kw) -> CheckReport:
    """``symbol_class_check`` with the symbol's own configuration echoed in the report."""
    extra = {"delta_plateau": sym.cutoff.delta_plateau, "beta": sym.beta,
             "mollifier": sym.b.label, "use_spatial_cutoff": sym.use_spatial_cutoff}
    return symbol_class_check(sym, spec, max_order, x_grid, theta_grid, n=sym.n,
                              extra_config=extra, **kw)


def mollifier_weight(b: MollifierB) -> WeightFunction:
    """``lambda -> 1 / b(1/lambda)``: the weight under which ``q`` obeys its own estimate."""
    return WeightFunction(eval=lambda lam: 1.0 / b(1.0 / np.asarray(lam, float)),
                          label=f"1/b(1/lambda)[{b.label}]")
