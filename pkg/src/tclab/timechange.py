"""Additive functional S_B, its inverse clock tau, and derived processes.

S_B(x) = int_0^x ds / lambda(B_s) is computed by composite trapezoid on the
path grid; tau_t inverts it by piecewise-linear interpolation (S_B is
continuous and strictly increasing for a.e.-positive lambda, so the
generalized right-inverse coincides with the continuous inverse).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import intensity as intens
from .errors import DegenerateFunctional, HorizonExceeded, KindMismatch
from .pathsim import BROWNIAN, DERIVED, TIME_CHANGED, Path, RngStream

#: Hard cap on total simulated steps in adaptive extension loops.
MAX_TOTAL_STEPS = 10 ** 8


@dataclass(frozen=True)
class MonotoneFunction:
    """A sampled nondecreasing function supporting interpolation and inversion."""

    arguments: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        args = np.asarray(self.arguments, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "arguments", args)
        object.__setattr__(self, "values", vals)
        if args.size != vals.size:
            raise ValueError("arguments and values must have equal length")
        if np.any(np.diff(args) <= 0):
            raise ValueError("arguments must be strictly increasing")
        if np.any(np.diff(vals) < 0):
            raise ValueError("values must be nondecreasing")

    @property
    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.values) > 0))

    def __call__(self, x):
        return np.interp(x, self.arguments, self.values)

    def inverse(self, y):
        """Continuous inverse by interpolation; requires strict monotonicity."""
        if not self.strictly_increasing:
            raise DegenerateFunctional("function is not strictly increasing")
        y = np.asarray(y, dtype=float)
        if np.any(y > self.values[-1] * (1 + 1e-12) + 1e-300):
            raise HorizonExceeded(
                f"query {float(np.max(y)):g} beyond range {self.values[-1]:g}")
        return np.interp(y, self.values, self.arguments)


@dataclass(frozen=True)
class TimeChangedPath:
    """Driving path, its clock tau, and the observed process Y = B_{tau}."""

    base: Path
    tau: MonotoneFunction
    observed: Path


def _reciprocal_on_path(model, values: np.ndarray) -> np.ndarray:
    """1/lambda along the path with the 0/0 convention at singular hits.

    Grid points where lambda vanishes get the average of their finite
    neighbours (zero if none): a single point carries no occupation mass.
    """
    lam = intens.evaluate(model, values)
    with np.errstate(divide="ignore"):
        g = 1.0 / lam
    bad = ~np.isfinite(g)
    if bad.any():
        g[bad] = 0.0
        finite = ~bad
        for i in np.flatnonzero(bad):
            lo, hi = max(i - 1, 0), min(i + 1, g.size - 1)
            neigh = [g[j] for j in (lo, hi) if j != i and finite[j]]
            g[i] = float(np.mean(neigh)) if neigh else 0.0
    return g


def _grid_path(out_times: np.ndarray, values: np.ndarray, kind: str) -> Path:
    """Wrap marginals at out_times as a Path; single points are duplicated."""
    if out_times.size >= 2:
        steps = np.diff(out_times)
        return Path(t0=float(out_times[0]), dt=float(steps[0]),
                    values=values, kind=kind)
    return Path(t0=float(out_times[0]), dt=1.0,
                values=np.repeat(values, 2), kind=kind)


def additive_functional(path: Path, model) -> MonotoneFunction:
    """S_B on the path grid, by composite trapezoid of 1/lambda(B)."""
    if path.kind not in (BROWNIAN, DERIVED):
        raise KindMismatch("additive functional needs a Brownian path")
    g = _reciprocal_on_path(model, path.values)
    s = np.empty(path.values.size)
    s[0] = 0.0
    np.cumsum(path.dt * 0.5 * (g[:-1] + g[1:]), out=s[1:])
    fn = MonotoneFunction(path.times, s)
    if not fn.strictly_increasing:
        raise DegenerateFunctional(
            "S_B is not strictly increasing on this grid; lambda vanishes "
            "on a set the grid cannot resolve")
    return fn


def inverse_time_change(s: MonotoneFunction, t):
    """tau_t = continuous inverse of S_B at t (scalar or array)."""
    return s.inverse(t)


def time_changed_path(path: Path, model, out_times) -> TimeChangedPath:
    """Observed process Y_t = B_{tau_t} on a uniform output grid."""
    out_times = np.asarray(out_times, dtype=float)
    s = additive_functional(path, model)
    tau = inverse_time_change(s, out_times)
    observed = np.interp(tau, path.times, path.values)
    if out_times.size >= 2:
        steps = np.diff(out_times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ValueError("out_times must form a uniform grid")
        tau_fn = MonotoneFunction(out_times, tau)
    else:
        # degenerate single-point query; pad so the clock stays invertible
        tau_fn = MonotoneFunction(
            np.array([float(out_times[0]), float(out_times[0]) + 1.0]),
            np.array([float(tau[0]), float(tau[0]) + 1.0]))
    obs = _grid_path(out_times, observed, TIME_CHANGED)
    return TimeChangedPath(base=path, tau=tau_fn, observed=obs)


def normalization_factor(model, n: float) -> float:
    """phi(n) selected by the model's declared regime tag."""
    if model.regime == intens.POINTWISE:
        return math.sqrt(n)
    if model.regime == intens.CESARO:
        return n ** (1.0 / (2.0 + model.exponent))
    if model.regime == intens.REGULARLY_VARYING:
        return n ** (1.0 / model.exponent)
    raise ValueError(f"unknown regime {model.regime!r}")


def normalized_process(path: Path, model, n: float, out_times) -> Path:
    """X_n(t) = B_{tau_{n t}} / phi(n) computed from an already long enough path."""
    out_times = np.asarray(out_times, dtype=float)
    s = additive_functional(path, model)
    if n * float(out_times[-1]) > s.values[-1]:
        raise HorizonExceeded(
            "base path too short: S_B horizon "
            f"{s.values[-1]:g} < n*T = {n * float(out_times[-1]):g}")
    tau = s.inverse(n * out_times)
    phi = normalization_factor(model, n)
    vals = np.interp(tau, path.times, path.values) / phi
    return _grid_path(out_times, vals, DERIVED)


def _estimated_horizon(model, target: float) -> float:
    """Mean-field guess of the x with S_B(x) ~ target, used for block sizing."""
    a_max = max(model.a_plus, model.a_minus)
    if model.regime == intens.CESARO:
        p = 2.0 + model.exponent
        return (0.5 * p * target * a_max) ** (2.0 / p)
    if model.regime == intens.REGULARLY_VARYING:
        g = model.exponent
        return (0.5 * g * target * a_max) ** (2.0 / g)
    return target * a_max


def simulate_additive(model, target: float, stream: RngStream, dt: float,
                      start: float = 0.0,
                      max_steps: int = MAX_TOTAL_STEPS):
    """Simulate B and S_B on the dt grid until S_B exceeds `target`.

    Extends the path in blocks (doubling on shortfall, as S_B(inf) = inf a.s.
    by recurrence); raises :class:`HorizonExceeded` past the step cap.
    Returns (values, s) arrays sharing the grid k*dt.
    """
    if target < 0:
        raise ValueError("target must be nonnegative")
    sqrt_dt = math.sqrt(dt)
    est = _estimated_horizon(model, max(target, dt))
    block = max(1000, int(1.25 * est / dt) + 1)
    chunks_v = [np.array([start])]
    chunks_s = [np.array([0.0])]
    last_v, last_s = start, 0.0
    last_g = float(_reciprocal_on_path(model, np.array([start]))[0])
    total = 0
    while last_s <= target:
        block = min(block, max_steps - total)
        if block <= 0:
            raise HorizonExceeded(
                f"step cap {max_steps} reached at S_B = {last_s:g} "
                f"(target {target:g})")
        v = last_v + np.cumsum(stream.normals(block) * sqrt_dt)
        g = _reciprocal_on_path(model, v)
        incr = dt * 0.5 * (np.concatenate(([last_g], g[:-1])) + g)
        s = last_s + np.cumsum(incr)
        chunks_v.append(v)
        chunks_s.append(s)
        last_v, last_s, last_g = float(v[-1]), float(s[-1]), float(g[-1])
        total += block
        block = max(block, total)  # double the span on each extension
    return np.concatenate(chunks_v), np.concatenate(chunks_s)


def simulate_normalized(model, n: float, out_times, stream: RngStream,
                        dt: float, start: float = 0.0,
                        max_steps: int = MAX_TOTAL_STEPS) -> Path:
    """Simulate X_n(t) = B_{tau_{n t}} / phi(n) at out_times (adaptive horizon)."""
    out_times = np.asarray(out_times, dtype=float)
    target = n * float(out_times[-1])
    values, s = simulate_additive(model, target, stream, dt, start=start,
                                  max_steps=max_steps)
    if np.any(np.diff(s) <= 0):
        raise DegenerateFunctional("S_B not strictly increasing on this grid")
    tau = np.interp(n * out_times, s, np.arange(s.size) * dt)
    phi = normalization_factor(model, n)
    vals = np.interp(tau, np.arange(values.size) * dt, values) / phi
    return _grid_path(out_times, vals, DERIVED)


def sample_tau(model, t: float, stream: RngStream, dt: float,
               start: float = 0.0, max_steps: int = MAX_TOTAL_STEPS) -> float:
    """One replicate of tau_t (adaptive horizon)."""
    values, s = simulate_additive(model, t, stream, dt, start=start,
                                  max_steps=max_steps)
    return float(np.interp(t, s, np.arange(s.size) * dt))


def cauchy_estimate(model, f: Callable[[float], float], t: float, x: float,
                    replicates: int, stream: RngStream,
                    dt: float = 1e-3) -> tuple[float, float]:
    """Monte Carlo estimate of u(t, x) = E^x[f(B_{tau_t})] with standard error."""
    if replicates < 2:
        raise ValueError("need at least two replicates")
    vals = np.empty(replicates)
    for r in range(replicates):
        sub = stream.spawn(stream.replicate + r)
        values, s = simulate_additive(model, t, sub, dt, start=x)
        tau = np.interp(t, s, np.arange(s.size) * dt)
        y = np.interp(tau, np.arange(values.size) * dt, values)
        vals[r] = f(float(y))
    est = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(replicates))
    return est, se
