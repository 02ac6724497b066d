"""Samplers for the limit processes, via time change and via the skew SDE.

Both routes target the same law: W(eta^{-1}(t)) built from the clock
eta(t) = prefactor * int_0^t |W|^p nu(W) ds, and the Euler scheme for the
SDE with piecewise-constant diffusion sqrt(a_plus)/sqrt(a_minus).  Their
agreement is the cross-validation used throughout the experiments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HorizonExceeded, KindMismatch
from .pathsim import BROWNIAN, DERIVED, LIMIT, Path, RngStream
from .timechange import MAX_TOTAL_STEPS, MonotoneFunction, _grid_path

ETA = "eta"              # nu(W) integrand, prefactor 1
ETA_DELTA = "eta-delta"  # (1+delta) |W|^delta nu(W)
ETA_GAMMA = "eta-gamma"  # (gamma-1) |W|^{gamma-2} nu(W)

_FAMILIES = (ETA, ETA_DELTA, ETA_GAMMA)


@dataclass(frozen=True)
class LimitSpec:
    """Limit-process family with its asymmetry constants.

    The three families coincide at their overlap:
    eta == eta-delta(0) == eta-gamma(2).
    """

    a_plus: float
    a_minus: float
    family: str = ETA
    exponent: float = 0.0

    def __post_init__(self):
        if self.a_plus <= 0 or self.a_minus <= 0:
            raise ValueError("a_plus and a_minus must be positive")
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == ETA_DELTA and self.exponent <= -1:
            raise ValueError("eta-delta exponent must be > -1")
        if self.family == ETA_GAMMA and self.exponent <= 1:
            raise ValueError("eta-gamma exponent must be > 1")


def nu(x, spec: LimitSpec):
    """1/a_plus for x > 0, 1/a_minus for x < 0, and 0 at x = 0.

    The value at 0 is a convention: occupation of a single point carries no
    Lebesgue time.
    """
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, 1.0 / spec.a_plus,
                   np.where(x < 0, 1.0 / spec.a_minus, 0.0))
    return out if x.shape else float(out)


def _clock_integrand(values: np.ndarray, spec: LimitSpec) -> np.ndarray:
    dens = np.asarray(nu(values, spec))
    if spec.family == ETA:
        return dens
    if spec.family == ETA_DELTA:
        power, pref = spec.exponent, 1.0 + spec.exponent
    else:
        power, pref = spec.exponent - 2.0, spec.exponent - 1.0
    if power == 0.0:
        return pref * dens
    # |W|^power is singular at 0 for power < 0; nu is 0 there already, so
    # evaluate the power only where nu > 0.
    out = np.zeros_like(dens)
    mask = dens > 0
    out[mask] = pref * np.abs(values[mask]) ** power * dens[mask]
    return out


def eta(wpath: Path, spec: LimitSpec) -> MonotoneFunction:
    """The clock eta on the path grid (trapezoid of the family integrand)."""
    if wpath.kind not in (BROWNIAN, DERIVED):
        raise KindMismatch("eta needs a Wiener (or injected test) path")
    g = _clock_integrand(wpath.values, spec)
    vals = np.empty(wpath.values.size)
    vals[0] = 0.0
    np.cumsum(wpath.dt * 0.5 * (g[:-1] + g[1:]), out=vals[1:])
    return MonotoneFunction(wpath.times, vals)


def eta_inverse(clock: MonotoneFunction, t):
    """Continuous inverse of the clock; raises DegenerateFunctional if flat."""
    return clock.inverse(t)


def _simulate_clocked(stream: RngStream, spec: LimitSpec, target: float,
                      dt: float, max_steps: int):
    """Simulate W with its clock eta until eta exceeds target."""
    sqrt_dt = math.sqrt(dt)
    a_max = max(spec.a_plus, spec.a_minus)
    block = max(1000, int(1.5 * target * a_max / dt) + 1)
    vals = [np.array([0.0])]
    etas = [np.array([0.0])]
    last_v, last_e, last_g = 0.0, 0.0, 0.0
    total = 0
    while last_e <= target:
        block = min(block, max_steps - total)
        if block <= 0:
            raise HorizonExceeded(
                f"step cap {max_steps} reached at eta = {last_e:g}")
        v = last_v + np.cumsum(stream.normals(block) * sqrt_dt)
        g = _clock_integrand(v, spec)
        incr = dt * 0.5 * (np.concatenate(([last_g], g[:-1])) + g)
        e = last_e + np.cumsum(incr)
        vals.append(v)
        etas.append(e)
        last_v, last_e, last_g = float(v[-1]), float(e[-1]), float(g[-1])
        total += block
        block = max(block, total)
    return np.concatenate(vals), np.concatenate(etas)


def limit_timechange_values(stream: RngStream, spec: LimitSpec, out_times,
                            dt: float,
                            max_steps: int = MAX_TOTAL_STEPS) -> np.ndarray:
    """W(eta^{-1}(t)) at arbitrary increasing out_times (one replicate)."""
    out_times = np.asarray(out_times, dtype=float)
    values, clock = _simulate_clocked(stream, spec, float(out_times[-1]),
                                      dt, max_steps)
    grid = np.arange(values.size) * dt
    zeta = np.interp(out_times, clock, grid)
    return np.interp(zeta, grid, values)


def sample_limit_timechange(stream: RngStream, spec: LimitSpec, out_times,
                            dt: float,
                            max_steps: int = MAX_TOTAL_STEPS) -> Path:
    """Limit-process path at uniform out_times via the time-change route."""
    out_times = np.asarray(out_times, dtype=float)
    vals = limit_timechange_values(stream, spec, out_times, dt, max_steps)
    return _grid_path(out_times, vals, LIMIT)


def euler_skew_batch(normals: np.ndarray, dt: float, a_plus: float,
                     a_minus: float) -> np.ndarray:
    """Euler-Maruyama for the skew SDE, vectorized over replicates.

    ``normals`` has shape (replicates, steps); returns states of shape
    (replicates, steps + 1) started at 0.  sigma(0) = sqrt(a_plus) is the
    deterministic tie-break; the state's occupation of {0} is null anyway.
    """
    sp, sm = math.sqrt(a_plus), math.sqrt(a_minus)
    reps, steps = normals.shape
    out = np.zeros((reps, steps + 1))
    x = np.zeros(reps)
    sqrt_dt = math.sqrt(dt)
    for k in range(steps):
        sigma = np.where(x < 0, sm, sp)
        x = x + sigma * sqrt_dt * normals[:, k]
        out[:, k + 1] = x
    return out


def sample_limit_sde(stream: RngStream, a_plus: float, a_minus: float,
                     out_times, dt: float) -> Path:
    """Limit-process path at out_times via Euler on the skew SDE (eta family)."""
    out_times = np.asarray(out_times, dtype=float)
    steps = int(math.ceil(float(out_times[-1]) / dt - 1e-9))
    z = stream.normals(steps).reshape(1, -1)
    states = euler_skew_batch(z, dt, a_plus, a_minus)[0]
    grid = np.arange(steps + 1) * dt
    vals = np.interp(out_times, grid, states)
    return _grid_path(out_times, vals, LIMIT)


def zero_occupation_fraction(path: Path) -> float:
    """Fraction of grid points where the state is exactly 0 (excluding t=0)."""
    return float(np.mean(path.values[1:] == 0.0))
