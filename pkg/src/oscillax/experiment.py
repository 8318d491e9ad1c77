"""Blow-up experiment: ``||F u_eps|| / ||u_eps||`` along a sequence ``eps_p``.

For each ``p`` the box half-width ``eps_p`` is the largest value with
``eps_p / g(p eps_p, ..., p eps_p) >= N0`` and ``p eps_p <= beta``.  On
``(0, p eps_p]^n`` the closed-form image of ``u_eps`` then has modulus at least
``beta``, which forces

    ||F u||^2 >= beta^2 (p eps)^n,   ||u||^2 = (2 pi)^-n (2 eps)^n,
    ratio >= beta (2 pi)^(n/2) (p/2)^(n/2).
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from ._parallel import ordered_map
from .errors import DomainError, InfeasibleError
from .mollifier import MollifierB, RadialScale
from .operator import BoxTestFunction, apply_to_box, find_N0
from .symbol import CutoffK, plateau_cutoff

#: relative slack on the lower bound absorbing quadrature and N0 discretisation
BOUND_TOL = 0.05
FEASIBILITY_TOL = 1e-10
CSV_COLUMNS = ("p", "epsilon_p", "ratio_computed", "ratio_lower_bound", "margin")
DERIVATION = ("||u_eps||^2 = (2pi)^-n (2 eps)^n and ||F u_eps||^2 >= beta^2 (p eps_p)^n on "
              "(0, p eps_p]^n give ||F u||/||u|| >= beta (2pi)^(n/2) (p/2)^(n/2)")


def lower_bound(p: float, beta: float, n: int) -> float:
    return beta * (2 * math.pi) ** (n / 2) * (p / 2) ** (n / 2)


def choose_epsilon(p: int, N0: float, beta: float, g: RadialScale, n: int) -> float:
    """Largest ``eps`` in ``(0, beta/p]`` with ``eps / g(p eps 1) >= N0``, by bisection.

    ``eps / g(p eps 1) = 1 / (p sqrt(n) b(p eps sqrt(n)))`` decreases in ``eps``, so the
    feasible set is an interval ``(0, eps*]``.  The bisection runs on ``log eps`` and
    always keeps its lower end feasible.
    """
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if not N0 > 0:
        raise DomainError(f"N0 must be positive, got {N0}")

    def ratio(eps: float) -> float:
        gv = float(g(np.full(n, p * eps)))
        return math.inf if gv == 0 else eps / gv

    cap = beta / p
    if ratio(cap) >= N0:
        return cap
    hi, lo = cap, cap / 2
    tiny = np.finfo(float).tiny
    while ratio(lo) < N0:
        hi, lo = lo, lo / 2
        if lo < tiny:
            raise InfeasibleError(
                f"p={p}: no eps in (0, {cap:.3g}] gives eps/g >= N0={N0:.4g} in double precision;"
                " the mollifier b does not vanish fast enough, pick a slower one")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        if ratio(mid) >= N0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class BlowupConfig:
    n: int
    beta: float
    p_list: list[int]
    mollifier: MollifierB
    cutoff: CutoffK
    quad_points: int | None = None
    full_domain: bool = False
    full_domain_points: int = 4096

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta}")
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if not self.p_list or any(p < 1 for p in self.p_list):
            raise DomainError("p_list must hold positive integers")
        if any(b <= a for a, b in zip(self.p_list, self.p_list[1:])):
            raise DomainError("p_list must be strictly increasing")
        if self.quad_points is None:
            self.quad_points = {1: 4097, 2: 1025}.get(self.n, 65)

    def describe(self) -> dict:
        return {"n": self.n, "beta": self.beta, "p_list": list(self.p_list),
                "mollifier": self.mollifier.label, "cutoff": self.cutoff.config(),
                "quad_points": self.quad_points, "full_domain": self.full_domain}


@dataclass
class BlowupRow:
    p: int
    epsilon_p: float
    ratio_computed: float
    ratio_lower_bound: float
    margin: float
    feasibility: float
    norm_Au_sq: float
    norm_u: float
    ratio_full: float | None = None


@dataclass
class BlowupReport:
    rows: list[BlowupRow]
    N0_used: float
    config: dict
    wall_time_s: float = 0.0
    derivation: str = DERIVATION
    invariants: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.invariants.values())

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "N0_used": self.N0_used,
                "config": self.config, "wall_time_s": self.wall_time_s,
                "derivation": self.derivation, "invariants": self.invariants,
                "passed": self.passed}


def _restricted_norm_sq(eps: float, p: int, g: RadialScale, cutoff: CutoffK, n: int,
                        m: int) -> float:
    """``int_{[0, p eps]^n} |A u_eps|^2`` by tensor trapezoid on ``x = p eps s``."""
    s = np.linspace(0.0, 1.0, m)
    pts = np.stack(np.meshgrid(*([s] * n), indexing="ij"), axis=-1) * (p * eps)
    vals = np.abs(apply_to_box(eps, g(pts), cutoff, n)) ** 2
    for _ in range(n):
        vals = trapezoid(vals, s, axis=0)
    return float(vals) * (p * eps) ** n


def _full_norm_sq(eps: float, p: int, g: RadialScale, cutoff: CutoffK, n: int, beta: float,
                  m: int) -> float:
    """``int |chi(x) A u_eps(x)|^2 dx`` over ``[-1, 1]^n`` (n <= 2), log-radial quadrature."""
    x_lo = p * eps * 1e-4
    u = np.linspace(math.log(x_lo), math.log(math.sqrt(n)), m)
    r = np.exp(u)
    if n == 1:
        f = (plateau_cutoff(r, beta) * np.abs(apply_to_box(eps, g(r[:, None]), cutoff, 1))) ** 2
        return 2.0 * (x_lo + trapezoid(f * r, u))
    if n == 2:
        ang = np.arange(256) * (2 * np.pi / 256)
        pts = r[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)[None, :, :]
        chi = np.prod(plateau_cutoff(pts, beta), axis=-1)
        a = np.abs(apply_to_box(eps, g(pts), cutoff, 2)) ** 2
        radial = np.mean(chi**2 * a, axis=1) * 2 * np.pi
        return math.pi * x_lo**2 + trapezoid(radial * r * r, u)
    raise DomainError("full-domain norm is implemented for n <= 2")


def run_blowup(config: BlowupConfig) -> BlowupReport:
    """Compute one report row per ``p``; rows run in parallel, assembly is ordered."""
    t0 = time.perf_counter()
    n, beta = config.n, config.beta
    g = RadialScale(config.mollifier)
    N0 = find_N0(config.cutoff, beta, n)
    # choose all eps first so that an infeasible p aborts before any quadrature
    eps_list = [choose_epsilon(p, N0, beta, g, n) for p in config.p_list]

    def row(item) -> BlowupRow:
        p, eps = item
        norm_sq = _restricted_norm_sq(eps, p, g, config.cutoff, n, config.quad_points)
        norm_u = BoxTestFunction(eps, n).l2_norm()
        ratio = math.sqrt(norm_sq) / norm_u
        bound = lower_bound(p, beta, n)
        full = None
        if config.full_domain:
            full = math.sqrt(_full_norm_sq(eps, p, g, config.cutoff, n, beta,
                                           config.full_domain_points)) / norm_u
        feas = eps / float(g(np.full(n, p * eps)))
        return BlowupRow(p=p, epsilon_p=eps, ratio_computed=ratio, ratio_lower_bound=bound,
                         margin=ratio / bound - 1.0, feasibility=feas, norm_Au_sq=norm_sq,
                         norm_u=norm_u, ratio_full=full)

    rows = ordered_map(row, list(zip(config.p_list, eps_list)))
    report = BlowupReport(rows=rows, N0_used=N0, config=config.describe())
    report.invariants = check_invariants(report, N0, beta)
    report.wall_time_s = time.perf_counter() - t0
    return report


def check_invariants(report: BlowupReport, N0: float, beta: float) -> dict[str, bool]:
    rows = report.rows
    ratios = [r.ratio_computed for r in rows]
    eps = [r.epsilon_p for r in rows]
    out = {
        "lower_bound": all(r.ratio_computed >= r.ratio_lower_bound * (1 - BOUND_TOL) for r in rows),
        "ratio_increasing": all(b > a for a, b in zip(ratios, ratios[1:])),
        "epsilon_nonincreasing": all(b <= a for a, b in zip(eps, eps[1:])),
        "box_inside_beta": all(r.p * r.epsilon_p <= beta * (1 + 1e-15) for r in rows),
        "feasibility": all(r.feasibility >= N0 * (1 - FEASIBILITY_TOL) for r in rows),
    }
    if any(r.ratio_full is not None for r in rows):
        out["restricted_le_full"] = all(r.ratio_full is None or
                                        r.ratio_computed <= r.ratio_full * (1 + 1e-9)
                                        for r in rows)
    return out


def _fmt(v) -> str:
    return str(v) if isinstance(v, (int, np.integer)) else f"{v:.12g}"


def emit_report(report: BlowupReport, fmt: str, path) -> None:
    """Write ``report`` as ``csv`` (fixed columns, 12 significant digits) or ``json``."""
    path = Path(path)
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CSV_COLUMNS)
                for r in report.rows:
                    w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        elif fmt == "json":
            path.write_text(json.dumps(report.to_dict(), indent=2))
        else:
            raise DomainError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def slope_per_doubling(report: BlowupReport) -> float:
    """Least-squares slope of ``log2 ratio`` against ``log2 p``."""
    p = np.log2([r.p for r in report.rows])
    y = np.log2([r.ratio_computed for r in report.rows])
    return float(np.polyfit(p, y, 1)[0])
