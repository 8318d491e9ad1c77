"""Slowly vanishing functions b(t) on [0, 1] and the weights they come from.

The pipeline is

    weights b_l(t) --diagonal_envelope--> b0(t) --weight_to_mollifier--> f0(t)
                   --kumano_go_smooth--> MollifierB

``b0`` grows to infinity, ``f0 = 1/b0(1/t)`` decays to zero as slowly as ``b0``
grows, and the smoothing step returns a strictly increasing ``b >= f0`` with
scale-invariant derivative bounds ``|b^(n)(t)| t^n <= C_n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, PreconditionError

ArrayFn = Callable[[np.ndarray], np.ndarray]

#: relative step of the central differences used for derivative bounds
FD_REL_STEP = 1e-4
#: derivative orders whose bound constants are tracked
N_MAX = 2
#: deepest dyadic band of the generic smoothing (2**-1000 ~ 1e-301)
_KMAX = 1000
_BAND_SAMPLES = 33


@dataclass(frozen=True)
class WeightFunction:
    """Positive weight on ``[1, inf)`` that tends to infinity."""

    eval: ArrayFn
    label: str
    smooth: bool = False

    def __call__(self, t):
        return self.eval(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class Profile:
    """Continuous ``f0`` on ``[0, 1]`` with ``f0(0) = 0`` and ``f0 > 0`` elsewhere."""

    eval: ArrayFn
    label: str
    smooth: bool = False

    def __call__(self, t):
        return self.eval(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class MollifierB:
    """Strictly increasing ``b`` on ``[0, 1]`` with ``b(0) = 0``.

    ``derivative_bound_constants[n-1]`` is ``C_n`` in ``|b^(n)(t)| <= C_n t^-n``.
    ``eval`` also accepts ``t > 1`` (radial arguments up to ``sqrt(n)``), where
    the construction simply continues.
    """

    eval: ArrayFn
    derivative_bound_constants: tuple[float, ...]
    source_f0: str
    label: str
    f0: Profile | None = field(default=None, compare=False, repr=False)

    def __call__(self, t):
        return self.eval(np.asarray(t, dtype=float))

    def to_record(self, t_grid=None) -> dict:
        """JSON-ready description with samples on ``t_grid`` (log-spaced by default)."""
        if t_grid is None:
            t_grid = np.concatenate([[0.0], np.logspace(-6, 0, 25)])
        t_grid = np.asarray(t_grid, dtype=float)
        return {
            "label": self.label,
            "source_f0": self.source_f0,
            "derivative_bound_constants": [float(c) for c in self.derivative_bound_constants],
            "t": t_grid.tolist(),
            "b": np.asarray(self(t_grid), dtype=float).tolist(),
        }

    def check(self, t=None) -> dict[str, bool]:
        """Sampled check of the four mollifier conditions on ``t`` (log grid on [1e-6, 1]).

        Returns one boolean per condition: ``dominates_f0``, ``vanishes_at_zero``
        (``b(0) = 0``, ``b > 0`` and ``b -> 0`` along the grid), ``strictly_increasing``
        and ``derivative_bounds`` for orders 1..N_MAX.
        """
        if t is None:
            t = np.logspace(-6, 0, 2001)
        t = np.asarray(t, dtype=float)
        b = self(t)
        out = {}
        out["dominates_f0"] = bool(self.f0 is None or np.all(self.f0(t) <= b))
        small = self(np.array([0.0, 1e-12, 1e-9, 1e-6]))
        out["vanishes_at_zero"] = bool(
            small[0] == 0.0 and np.all(b > 0) and np.all(np.diff(small) > 0)
        )
        out["strictly_increasing"] = bool(np.all(np.diff(b) > 0))
        ok = True
        for n, c_n in enumerate(self.derivative_bound_constants, start=1):
            scaled = np.abs(scaled_derivative(self, t, n))
            ok &= bool(np.all(np.isfinite(scaled)) and np.all(scaled <= c_n))
        out["derivative_bounds"] = ok
        return out


def scaled_derivative(func, t, order: int) -> np.ndarray:
    """``t**order * func^(order)(t)`` by central differences with step ``t * 1e-4``."""
    t = np.asarray(t, dtype=float)
    h = FD_REL_STEP * t
    if order == 1:
        d = (func(t + h) - func(t - h)) / (2 * h)
    elif order == 2:
        d = (func(t + h) - 2 * func(t) + func(t - h)) / h**2
    else:
        raise DomainError(f"derivative order {order} not supported (max {N_MAX})")
    return d * t**order


# --------------------------------------------------------------------------
# weights

def _tower(l: int) -> float:
    c = 1.0
    try:
        for _ in range(l):
            c = math.exp(c)
    except OverflowError:
        raise DomainError(f"tower constant C_{l} overflows double precision") from None
    return c


def iterated_log(l: int, t):
    """``log`` applied ``l`` times to ``C_l + t`` with ``C_l`` the ``l``-fold tower of e.

    The tower makes ``iterated_log(l, 0) == 1``.  Only ``l <= 3`` is representable
    in double precision (``C_4 = exp(exp(exp(e)))`` overflows).
    """
    if not isinstance(l, (int, np.integer)) or l < 1:
        raise DomainError(f"iterated_log needs a positive integer depth, got {l!r}")
    c = _tower(int(l))
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("iterated_log is defined for t >= 0")
    out = c + t
    for _ in range(l):
        out = np.log(out)
    return out if out.ndim else float(out)


def iterated_log_weight(l: int) -> WeightFunction:
    _tower(l)  # fail early on overflow
    return WeightFunction(
        eval=lambda t, l=l: iterated_log(l, t),
        label=f"iterated_log(l={l})",
        smooth=True,
    )


def iterated_log_family(l_max: int = 3) -> list[WeightFunction]:
    return [iterated_log_weight(l) for l in range(1, l_max + 1)]


def diagonal_envelope(family: Sequence[WeightFunction]) -> WeightFunction:
    """``b0(t) = min_l max(b_l(t), l)`` with ``l`` the 1-based position in ``family``.

    ``b0`` is continuous and unbounded, and ``b0 <= b_l`` wherever ``b_l >= l``.
    """
    family = list(family)
    if not family:
        raise DomainError("diagonal_envelope needs a non-empty family")

    def b0(t):
        terms = [np.maximum(w(t), float(l)) for l, w in enumerate(family, start=1)]
        return np.min(np.stack(terms), axis=0)

    labels = ",".join(w.label for w in family)
    return WeightFunction(eval=b0, label=f"diagonal_envelope[{labels}]", smooth=False)


def weight_to_mollifier(b0: WeightFunction) -> Profile:
    """``f0(t) = 1 / b0(1/t)`` on ``(0, 1]`` and ``f0(0) = 0``."""

    def f0(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        with np.errstate(divide="ignore", over="ignore"):
            out[pos] = 1.0 / b0(1.0 / t[pos])
        return out if out.ndim else float(out)

    return Profile(eval=f0, label=f"1/{b0.label}(1/t)", smooth=b0.smooth)


# --------------------------------------------------------------------------
# smoothing

def smooth_step(s):
    """C-infinity ramp: 0 for ``s <= 0``, 1 for ``s >= 1``, built from ``exp(-1/s)``."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        c = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + c)


def _check_profile(f0) -> None:
    if float(f0(np.array([0.0]))[0]) != 0.0:
        raise PreconditionError("f0(0) must be 0")
    t = np.concatenate([np.logspace(-12, 0, 1201), np.linspace(0.0, 1.0, 1001)[1:]])
    vals = f0(t)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise PreconditionError("f0 must be finite and strictly positive on (0, 1]")


def _sampled_constants(func, n_max: int = N_MAX, margin: float = 1.05) -> tuple[float, ...]:
    # t^2 h^-2 stays representable down to 1e-100
    t = np.logspace(-100, 0, 64 * 333)
    return tuple(
        margin * float(np.max(np.abs(scaled_derivative(func, t, n)))) for n in range(1, n_max + 1)
    )


def _ramp_derivative_sups() -> tuple[float, float]:
    # sup over r in [1, 2] of |R'(r) r| and |R''(r) r^2 + 2 R'(r) r|, R(r) = smooth_step(r - 1)
    r = np.linspace(1.0, 2.0, 200001)
    h = 1e-5
    d1 = (smooth_step(r + h - 1) - smooth_step(r - h - 1)) / (2 * h)
    d2 = (smooth_step(r + h - 1) - 2 * smooth_step(r - 1) + smooth_step(r - h - 1)) / h**2
    return float(np.max(np.abs(d1 * r))), float(np.max(np.abs(d2 * r**2 + 2 * d1 * r)))


def kumano_go_smooth(f0: Profile | Callable, *, assume_smooth: bool | None = None) -> MollifierB:
    """Smooth, strictly increasing majorant ``b`` of ``f0`` with ``b(0) = 0``.

    Generic path: the dyadic step envelope ``s = M_k`` on ``[2^-k-1, 2^-k)``
    (``M_k`` the sup of ``f0`` over ``[0, 2^-k+1]``) is averaged against a unit-mass
    bump ``chi`` on ``[1, 2]``, ``b~(t) = int s(t tau) chi(tau) dtau``, then
    ``b = b~ + eta t`` with ``eta = sup f0``.  Only one dyadic jump falls inside
    ``[t, 2t]``, so ``b~`` has the closed form used below.

    Fast path (``assume_smooth`` or a profile flagged smooth): ``b = f0 + eta t``.
    The caller vouches that ``f0`` is smooth, nondecreasing and already obeys the
    derivative bounds.

    Below ``2**-1000`` the generic envelope is frozen at its last band value;
    double precision cannot resolve ``1/t`` there anyway.
    """
    if not isinstance(f0, Profile):
        f0 = Profile(eval=f0, label=getattr(f0, "__name__", "f0"))
    _check_profile(f0)
    smooth = f0.smooth if assume_smooth is None else assume_smooth

    grid = np.concatenate([[1.0], np.logspace(-12, 0, 1201)])
    eta = float(np.max(f0(grid)))

    if smooth:
        def b(t):
            t = np.asarray(t, dtype=float)
            return f0(t) + eta * t

        consts = _sampled_constants(b)
        return MollifierB(
            eval=b, derivative_bound_constants=consts, source_f0=f0.label,
            label=f"fast_path[{f0.label}]", f0=f0,
        )

    # M[k] = sup f0 over (0, 2^(-k+1)] ∩ (0, 1], k = 0.._KMAX + 1
    frac = np.linspace(0.0, 1.0, _BAND_SAMPLES)
    band_sup = np.empty(_KMAX + 2)
    band_sup[0] = float(f0(np.array([1.0]))[0])
    for k in range(1, _KMAX + 2):
        pts = 2.0 ** (-k + frac)
        band_sup[k] = float(np.max(f0(pts)))
    M = np.maximum.accumulate(band_sup[::-1])[::-1]
    jumps = M[:-1] - M[1:]

    def b(t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        m, e = np.frexp(t)
        k0 = np.clip(-e, 0, _KMAX + 1)
        out = M[k0].astype(float)
        partial = (k0 >= 1) & (k0 <= _KMAX)
        if np.any(partial):
            kp = k0[partial]
            r = 1.0 / m[partial]
            out[partial] += jumps[kp - 1] * (1.0 - smooth_step(r - 1.0))
        out = np.where(t > 0, out + eta * t, 0.0)
        return float(out[0]) if scalar else out

    s1, s2 = _ramp_derivative_sups()
    dmax = float(np.max(jumps))
    consts = (1.01 * (dmax * s1 + eta), 1.01 * dmax * s2)
    return MollifierB(
        eval=b, derivative_bound_constants=consts, source_f0=f0.label,
        label=f"dyadic_smoothing[{f0.label}]", f0=f0,
    )


# --------------------------------------------------------------------------
# ready-made mollifiers

def fast_path_log_mollifier() -> MollifierB:
    """``b(t) = 1/log(e + 1/t) + t/log(e + 1)``: the l = 1 member via the fast path."""
    return kumano_go_smooth(weight_to_mollifier(iterated_log_weight(1)))


def diagonal_envelope_mollifier(l_max: int = 3) -> MollifierB:
    """Generic smoothing of ``f0 = 1/b0(1/t)``, ``b0`` the envelope of ``b_1..b_{l_max}``."""
    return kumano_go_smooth(weight_to_mollifier(diagonal_envelope(iterated_log_family(l_max))))


def linear_mollifier() -> MollifierB:
    """``b(t) = t``. Satisfies the mollifier conditions but vanishes too fast to blow up."""

    def b(t):
        return np.asarray(t, dtype=float) * 1.0

    f0 = Profile(eval=b, label="t", smooth=True)
    # C_2 absorbs finite-difference round-off on an exactly linear function
    return MollifierB(eval=b, derivative_bound_constants=(1.0, 1e-6), source_f0="t",
                      label="linear", f0=f0)


def constant_mollifier(c: float = 1.0) -> MollifierB:
    """``b(t) = c``: inadmissible (does not vanish), used for degenerate cases and controls."""

    def b(t):
        return np.full_like(np.asarray(t, dtype=float), float(c))

    return MollifierB(eval=b, derivative_bound_constants=(0.0, 0.0), source_f0="none",
                      label=f"constant({c})")


MOLLIFIERS = {
    "fast-path-log": fast_path_log_mollifier,
    "diagonal-envelope": diagonal_envelope_mollifier,
    "linear": linear_mollifier,
}


@dataclass(frozen=True)
class RadialScale:
    """``g(x) = b(|x|) |x|`` for ``x`` in ``(0, beta)^n``; last axis of ``x`` is the coordinate."""

    b: MollifierB

    def __call__(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        # scale before squaring so that |x| ~ 1e-200 does not underflow
        m = np.max(x, axis=-1)
        safe = np.where(m > 0, m, 1.0)
        r = m * np.linalg.norm(x / safe[..., None], axis=-1)
        return self.b(r) * r

    def eval_g(self, x):
        return self(x)
