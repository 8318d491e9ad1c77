"""Agreement between the three evaluators of ``F`` on Gaussians, boxes and zero."""
from __future__ import annotations

import math

import numpy as np

from .operator import (BoxTestFunction, GridFunction, apply_fio_direct, apply_symbol_reduced,
                       apply_to_box)
from .symbol import CounterexampleSymbol

DIRECT_VS_REDUCED_TOL = 1e-3
REDUCED_VS_BOX_TOL = 1e-4

#: (centre, width) of the Gaussian inputs
GAUSSIANS = ((0.0, 1.0), (0.5, 1.0), (-1.0, 0.7), (0.3, 2.0), (1.2, 1.5))
#: target box/scale ratios N = eps / g(x) for the box comparison
BOX_N = (1.0, 2.5, 5.0, 10.0)


def probe_points(n: int, beta: float) -> np.ndarray:
    """A fixed coarse probe set inside ``(0, beta)^n``."""
    if n == 1:
        return beta * np.array([[0.05], [0.1], [0.25], [0.45], [0.7], [0.95]])
    rng = np.random.default_rng(7)
    return beta * rng.uniform(0.05, 0.95, (4, n))


def gaussian(n: int, centre: float, width: float, extent: float, points: int) -> GridFunction:
    c = np.full(n, centre)
    return GridFunction.from_function(
        lambda y: np.exp(-np.sum((y - c) ** 2, axis=-1) / (2 * width**2)), n, extent, points)


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    den = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / den) if den > 0 else float(np.linalg.norm(a - b))


def _z_stride(n: int) -> int:
    return 1 if n == 1 else 8


def direct_vs_reduced(sym: CounterexampleSymbol, extent: float, points: int) -> list[dict]:
    """Relative L2 discrepancy over the probe set, one entry per Gaussian input."""
    n = sym.n
    xs = probe_points(n, sym.beta)
    out = []
    for centre, width in GAUSSIANS:
        u = gaussian(n, centre, width, extent, points)
        d = apply_fio_direct(sym, u, xs)
        gmin = float(np.min(sym.g(xs)))
        # u(g z) is below 1e-16 once |g z - c| > 9 width
        z_ext = min(sym.cutoff.z_max, (9 * width + abs(centre) * math.sqrt(n)) / gmin)
        r = apply_symbol_reduced(sym, u, xs, z_stride=_z_stride(n), z_extent=z_ext)
        out.append({"centre": centre, "width": width, "rel_l2": _rel(d, r),
                    "direct": [complex(v).real for v in d], "max_imag": float(np.max(np.abs(d.imag)))})
    return out


def reduced_vs_box(sym: CounterexampleSymbol) -> list[dict]:
    """Box test functions with ``eps`` snapped so that ``eps/g(x)`` sits on a quadrature cell face."""
    n = sym.n
    stride = 1 if n == 1 else 4
    h = stride * sym.cutoff.h_z
    out = []
    for x in probe_points(n, sym.beta):
        gx = float(sym.g(x))
        for target in BOX_N:
            N = (round(target / h - 0.5) + 0.5) * h
            eps = gx * N
            box = BoxTestFunction(eps, n)
            r = apply_symbol_reduced(sym, box, x, z_stride=stride, z_extent=N + 1.0)
            c = apply_to_box(eps, gx, sym.cutoff, n) * float(np.prod(sym.spatial_cutoff(x)))
            out.append({"x": x.tolist(), "N": N, "reduced": r.real, "closed_form": c,
                        "rel": abs(r - c) / abs(c)})
    return out


def zero_input(sym: CounterexampleSymbol, extent: float, points: int) -> dict:
    n = sym.n
    xs = probe_points(n, sym.beta)
    zero = GridFunction(n, extent, points, np.zeros((points,) * n, dtype=complex))
    d = apply_fio_direct(sym, zero, xs, boundary_tol=math.inf)
    r = apply_symbol_reduced(sym, zero, xs, z_stride=_z_stride(n), z_extent=10.0)
    return {"direct_max": float(np.max(np.abs(d))), "reduced_max": float(np.max(np.abs(r)))}


def run_crosscheck(sym: CounterexampleSymbol, extent: float, points: int) -> dict:
    dr = direct_vs_reduced(sym, extent, points)
    rb = reduced_vs_box(sym)
    zr = zero_input(sym, extent, points)
    passed = (all(e["rel_l2"] <= DIRECT_VS_REDUCED_TOL for e in dr)
              and all(e["rel"] <= REDUCED_VS_BOX_TOL for e in rb)
              and max(zr.values()) == 0.0)
    return {"direct_vs_reduced": dr, "reduced_vs_box": rb, "zero_input": zr,
            "tolerances": {"direct_vs_reduced": DIRECT_VS_REDUCED_TOL,
                           "reduced_vs_box": REDUCED_VS_BOX_TOL},
            "passed": passed}
