"""Intensity functions lambda(x) and their reciprocal integrals.

An :class:`IntensityModel` bundles a nonnegative speed function lambda with
its *declared* asymptotic data (a_plus, a_minus, a regime tag and an
exponent).  The declared values are experiment inputs, never estimated from
the function itself.  Built-in families carry closed-form antiderivatives of
1/lambda; custom models fall back to adaptive quadrature.
"""
from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import NonIntegrableSingularity

# Regime tags for the declared asymptotics of 1/lambda.
POINTWISE = "pointwise"                 # lambda(x) -> a_pm as x -> +-inf
CESARO = "cesaro-delta"                 # x^{-(1+delta)} int_0^x 1/lambda -> 1/a_pm
REGULARLY_VARYING = "regularly-varying" # x^{1-gamma} int_0^x 1/lambda -> 1/a_pm

_REGIMES = (POINTWISE, CESARO, REGULARLY_VARYING)

# Quadrature results above this value signal a non-integrable singularity.
DIVERGENCE_CUTOFF = 1e12
_QUAD_TOL = 1e-10


@dataclass(frozen=True)
class IntensityModel:
    """A lambda(x) specification with declared asymptotic parameters.

    Immutable after construction; safe for concurrent read access.
    """

    kind: str
    a_plus: float
    a_minus: float
    regime: str
    exponent: float
    zero_set: tuple = ()
    params: tuple = ()
    fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    antideriv: Optional[Callable[[np.ndarray], np.ndarray]] = None
    split_points: tuple = ()

    def __post_init__(self):
        if self.a_plus <= 0 or self.a_minus <= 0:
            raise ValueError("a_plus and a_minus must be positive")
        if self.regime not in _REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime == CESARO and self.exponent <= -1:
            raise ValueError("cesaro exponent (delta) must be > -1")
        if self.regime == REGULARLY_VARYING and self.exponent <= 1:
            raise ValueError("regularly-varying exponent (gamma) must be > 1")


def evaluate(model: IntensityModel, x) -> np.ndarray:
    """Evaluate lambda(x); vectorized, returns exact 0 on zero_set points."""
    x = np.asarray(x, dtype=float)
    out = np.asarray(model.fn(x), dtype=float)
    return out


def reciprocal_antiderivative(model: IntensityModel, x) -> np.ndarray:
    """R(x) = int_0^x ds / lambda(s); vectorized, signed for x < 0."""
    x = np.asarray(x, dtype=float)
    if model.antideriv is not None:
        return np.asarray(model.antideriv(x), dtype=float)
    scalar = np.vectorize(lambda v: _quad_reciprocal(model, 0.0, float(v)))
    return scalar(x) if x.shape else float(scalar(x))


def reciprocal_integral(model: IntensityModel, a: float, b: float) -> float:
    """int_a^b ds / lambda(s) for finite a <= b.

    Uses the closed form where available, otherwise adaptive quadrature with
    singularity splitting at declared zero/split points.  Raises
    :class:`NonIntegrableSingularity` if the quadrature diverges.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("bounds must be finite")
    if a > b:
        raise ValueError("require a <= b")
    if a == b:
        return 0.0
    if model.antideriv is not None:
        ra, rb = model.antideriv(np.array([a, b], dtype=float))
        return float(rb - ra)
    return _quad_reciprocal(model, a, b)


def _quad_reciprocal(model: IntensityModel, a: float, b: float) -> float:
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0

    def integrand(s):
        lam = float(model.fn(np.asarray(s, dtype=float)))
        # 0/0 convention: single points carry no Lebesgue mass.
        return 1.0 / lam if lam > 0.0 else 0.0

    pts = sorted(p for p in set(model.zero_set) | set(model.split_points)
                 if a < p < b)
    out = integrate.quad(integrand, a, b, points=pts or None, limit=400,
                         epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, full_output=1)
    value, abserr = out[0], out[1]
    flagged = len(out) > 3
    if not np.isfinite(value) or abs(value) > DIVERGENCE_CUTOFF:
        raise NonIntegrableSingularity(
            f"reciprocal integral on [{a}, {b}] diverges")
    if flagged and abserr > max(1e-7, 1e-6 * abs(value)):
        raise NonIntegrableSingularity(
            f"quadrature failed on [{a}, {b}]: error estimate {abserr:g}")
    return sign * value


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------

def asymptotic_constant(a_plus: float, a_minus: float) -> IntensityModel:
    """lambda(x) = a_minus + (a_plus - a_minus) * (1 + tanh x) / 2.

    Smooth, bounded between min(a-, a+) and max(a-, a+), with pointwise
    limits a_plus / a_minus at +-infinity.
    """
    ap, am = float(a_plus), float(a_minus)
    if ap <= 0 or am <= 0:
        raise ValueError("a_plus and a_minus must be positive")
    diff = ap - am

    def lam(x):
        x = np.asarray(x, dtype=float)
        return am + diff * 0.5 * (1.0 + np.tanh(x))

    if diff == 0.0:
        def antideriv(x):
            return np.asarray(x, dtype=float) / ap
    else:
        # 1/lambda = (1 + e^{2x}) / (a- + a+ e^{2x}); antiderivative
        # x/a- + k * ln(a- + a+ e^{2x}), normalized to vanish at 0.
        k = 0.5 / ap - 0.5 / am
        log_am, log_ap = math.log(am), math.log(ap)
        norm = math.log(am + ap)

        def antideriv(x):
            x = np.asarray(x, dtype=float)
            return x / am + k * (np.logaddexp(log_am, log_ap + 2.0 * x) - norm)

    return IntensityModel(kind="asymptotic-constant", a_plus=ap, a_minus=am,
                          regime=POINTWISE, exponent=0.0,
                          params=(ap, am), fn=lam, antideriv=antideriv)


def constant(c: float) -> IntensityModel:
    """lambda identically equal to c > 0."""
    return asymptotic_constant(c, c)


def power_tail(delta: float, a_plus: float, a_minus: float | None = None,
               x0: float = 1.0) -> IntensityModel:
    """lambda(x) = a_pm * |x|^{-delta} / (1 + delta) outside [-x0, x0].

    On [-x0, x0] lambda is capped at the constant value lambda(x0+), glued
    continuously on the right branch.  int_0^x 1/lambda behaves like
    x^{1+delta}/a_plus, the cesaro-delta regime.
    """
    if delta <= -1:
        raise ValueError("delta must be > -1")
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    ap = float(a_plus)
    am = ap if a_minus is None else float(a_minus)
    d = float(delta)
    cap = ap * x0 ** (-d) / (1.0 + d)

    def lam(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        tail = np.where(x > 0, ap, am) * np.where(ax > x0, ax, 1.0) ** (-d) / (1.0 + d)
        return np.where(ax > x0, tail, cap)

    def antideriv(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        core = np.minimum(ax, x0) / cap
        excess = np.maximum(ax, x0) ** (1.0 + d) - x0 ** (1.0 + d)
        tail = excess / np.where(x >= 0, ap, am)
        return np.sign(x) * (core + tail)

    return IntensityModel(kind="power-tail", a_plus=ap, a_minus=am,
                          regime=CESARO, exponent=d,
                          params=(d, ap, am, x0), fn=lam, antideriv=antideriv,
                          split_points=(-x0, x0))


def periodic(fn: Optional[Callable] = None, period: float = 1.0) -> IntensityModel:
    """Positive periodic intensity; defaults to lambda(x) = 2 + sin(2 pi x).

    The effective constants a_plus = a_minus = period / int_0^period 1/lambda
    are computed once by quadrature at construction.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    if fn is None:
        def fn(x):
            x = np.asarray(x, dtype=float)
            return 2.0 + np.sin(2.0 * np.pi * x)

    one_period = integrate.quad(
        lambda s: 1.0 / float(fn(np.asarray(s, dtype=float))),
        0.0, period, limit=400, epsabs=1e-12, epsrel=1e-12)[0]
    if not np.isfinite(one_period) or one_period <= 0:
        raise NonIntegrableSingularity("1/lambda not integrable over a period")
    a = period / one_period

    def antideriv_scalar(x: float) -> float:
        k = math.floor(x / period)
        rem = x - k * period
        tail = integrate.quad(
            lambda s: 1.0 / float(fn(np.asarray(s, dtype=float))),
            0.0, rem, limit=400, epsabs=1e-12, epsrel=1e-12)[0] if rem else 0.0
        return k * one_period + tail

    def antideriv(x):
        x = np.asarray(x, dtype=float)
        return np.vectorize(antideriv_scalar, otypes=[float])(x)

    return IntensityModel(kind="periodic", a_plus=a, a_minus=a,
                          regime=CESARO, exponent=0.0,
                          params=(period,), fn=fn, antideriv=antideriv)


def custom(fn: Callable, a_plus: float, a_minus: float,
           regime: str = POINTWISE, exponent: float = 0.0,
           zero_set: Sequence[float] = (),
           antideriv: Optional[Callable] = None,
           split_points: Sequence[float] = ()) -> IntensityModel:
    """User-supplied vectorized lambda with user-declared asymptotics."""
    return IntensityModel(kind="custom", a_plus=float(a_plus),
                          a_minus=float(a_minus), regime=regime,
                          exponent=float(exponent),
                          zero_set=tuple(zero_set), fn=fn,
                          antideriv=antideriv,
                          split_points=tuple(split_points))


def sqrt_degenerate(a_plus: float, a_minus: float) -> IntensityModel:
    """lambda(x) = min(1, sqrt|x|) * envelope(x), vanishing at 0.

    The envelope is the asymptotic-constant family, so lambda keeps the
    pointwise limits a_pm while touching zero; 1/lambda has an integrable
    |x|^{-1/2} singularity at the origin.
    """
    env = asymptotic_constant(a_plus, a_minus)

    def lam(x):
        x = np.asarray(x, dtype=float)
        return np.minimum(1.0, np.sqrt(np.abs(x))) * env.fn(x)

    return IntensityModel(kind="custom", a_plus=float(a_plus),
                          a_minus=float(a_minus), regime=POINTWISE,
                          exponent=0.0, zero_set=(0.0,), fn=lam,
                          split_points=(-1.0, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

AsymptoticSummary = namedtuple(
    "AsymptoticSummary", "a_plus a_minus regime exponent measured")


def asymptotic_summary(model: IntensityModel,
                       probes=(1e2, 1e3)) -> AsymptoticSummary:
    """Echo the declared asymptotics plus measured normalized integrals.

    For each probe x the measured pair is the suitably weighted value of
    int_0^x 1/lambda (resp. int_{-x}^0), to be compared against 1/a_plus
    (resp. 1/a_minus).  Diagnostic only; nothing is asserted.
    """
    measured = {}
    for x in probes:
        x = float(x)
        if model.regime == REGULARLY_VARYING:
            w = x ** (1.0 - model.exponent)
        elif model.regime == CESARO:
            w = x ** (-(1.0 + model.exponent))
        else:
            w = 1.0 / x
        rp = float(reciprocal_antiderivative(model, x))
        rm = float(reciprocal_antiderivative(model, -x))
        measured[x] = (w * rp, w * (-rm))
    return AsymptoticSummary(model.a_plus, model.a_minus, model.regime,
                             model.exponent, measured)


def with_regime(model: IntensityModel, regime: str,
                exponent: float) -> IntensityModel:
    """Copy of a model with a different declared regime tag."""
    return replace(model, regime=regime, exponent=float(exponent))
