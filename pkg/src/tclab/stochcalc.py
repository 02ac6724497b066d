"""Numerical stochastic-calculus checks: Ito residuals and integral limits.

`ito_residual` measures the defect of the pathwise Ito identity for F with an
a.e.-defined second derivative; `integral_convergence_check` tracks the
convergence of int phi_n(W) dW to its closed-form limit along an n-ladder.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import intensity as intens
from .errors import KindMismatch, LengthMismatch
from .limitproc import LimitSpec, nu
from .pathsim import BROWNIAN, DERIVED, Path, RngStream, sample_brownian

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class C1aeFunction:
    """F with continuous F' and a.e.-defined, locally integrable F''.

    All three callables must be vectorized.  F'' is evaluated as 0 at the
    finitely many singular points (they carry no occupation weight).
    """

    f: Callable[[np.ndarray], np.ndarray]
    f1: Callable[[np.ndarray], np.ndarray]
    f2: Callable[[np.ndarray], np.ndarray]
    singular_points: tuple = ()


def ito_sum(path: Path, integrand: np.ndarray) -> float:
    """Left-point Riemann-Ito sum sum_k integrand[k] * (W_{k+1} - W_k)."""
    integrand = np.asarray(integrand, dtype=float)
    if integrand.size != path.values.size:
        raise LengthMismatch(
            f"integrand length {integrand.size} != grid length "
            f"{path.values.size}")
    return float(np.dot(integrand[:-1], np.diff(path.values)))


def _second_derivative_on_path(fn: C1aeFunction,
                               values: np.ndarray) -> np.ndarray:
    out = np.asarray(fn.f2(values), dtype=float)
    out = np.where(np.isfinite(out), out, 0.0)
    for p in fn.singular_points:
        out = np.where(values == p, 0.0, out)
    return out


def ito_residual(path: Path, fn: C1aeFunction) -> float:
    """F(W_T) - F(W_0) - Ito sum of F'(W) - (1/2) trapezoid of F''(W)."""
    if path.kind not in (BROWNIAN, DERIVED):
        raise KindMismatch("ito_residual needs a Brownian path")
    v = path.values
    drift = _second_derivative_on_path(fn, v)
    trap = float(np.trapezoid(drift, dx=path.dt))
    stoch = ito_sum(path, np.asarray(fn.f1(v), dtype=float))
    return float(fn.f(v[-1]) - fn.f(v[0])) - stoch - 0.5 * trap


def residual_rms(fn: C1aeFunction, dt: float, horizon: float,
                 replicates: int, master_seed: int,
                 replicate_offset: int = 0) -> float:
    """RMS of the Ito residual over seeded replicates."""
    acc = 0.0
    for r in range(replicates):
        stream = RngStream(master_seed, replicate_offset + r)
        path = sample_brownian(stream, horizon, dt)
        acc += ito_residual(path, fn) ** 2
    return math.sqrt(acc / replicates)


def _model_delta(model) -> float:
    if model.regime == intens.CESARO:
        return model.exponent
    if model.regime == intens.POINTWISE:
        return 0.0
    raise ValueError("integral convergence check needs a cesaro-delta "
                     "(or pointwise, delta = 0) model")


def phi_n(model, u, n: float) -> np.ndarray:
    """phi_n(u) = n^{-(1+d)/(2+d)} int_0^{u n^{1/(2+d)}} dv/lambda(v)."""
    d = _model_delta(model)
    u = np.asarray(u, dtype=float)
    scale = n ** (1.0 / (2.0 + d))
    return n ** (-(1.0 + d) / (2.0 + d)) * np.asarray(
        intens.reciprocal_antiderivative(model, u * scale), dtype=float)


def phi_limit(model, u) -> np.ndarray:
    """Limit integrand |u|^{1+d} sgn(u) nu(u)."""
    d = _model_delta(model)
    u = np.asarray(u, dtype=float)
    spec = LimitSpec(a_plus=model.a_plus, a_minus=model.a_minus)
    return np.abs(u) ** (1.0 + d) * np.sign(u) * np.asarray(nu(u, spec))


def check_integrand_bound(model, u: np.ndarray, values: np.ndarray) -> None:
    """Warn if |phi_n| exceeds the dominating bound A (1 + |u|^{1+d})."""
    if model.kind == "custom":
        log.warning("integrand bound check skipped for custom model")
        return
    d = _model_delta(model)
    bound_const = 2.0 * (1.0 / model.a_plus + 1.0 / model.a_minus)
    bound = bound_const * (1.0 + np.abs(u) ** (1.0 + d))
    excess = np.abs(values) - bound
    if np.any(excess > 1e-9):
        log.warning("phi_n exceeds the dominating bound by up to %g",
                    float(excess.max()))


def integral_convergence_check(model, n_ladder: Sequence[float], t: float,
                               replicates: int, master_seed: int = 0,
                               dt: float = 1e-3) -> np.ndarray:
    """Median |int phi_n(W) dW - int phi_inf(W) dW| for each n in the ladder.

    Medians (not means) are reported: the convergence being tracked holds in
    probability, and medians resist heavy-tail replicate noise.
    """
    ladder = [float(n) for n in n_ladder]
    gaps = np.empty((len(ladder), replicates))
    for r in range(replicates):
        stream = RngStream(master_seed, r)
        path = sample_brownian(stream, t, dt)
        lim = ito_sum(path, phi_limit(model, path.values))
        for i, n in enumerate(ladder):
            vals = phi_n(model, path.values, n)
            check_integrand_bound(model, path.values, vals)
            gaps[i, r] = abs(ito_sum(path, vals) - lim)
    return np.median(gaps, axis=1)
