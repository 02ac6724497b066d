"""Brownian path generation on uniform grids with replicate-indexed RNG.

Randomness is counter-based: a :class:`RngStream` keys an independent Philox
sequence by (master_seed, replicate), so replicate-parallel runs are
deterministic regardless of scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HorizonExceeded, KindMismatch

BROWNIAN = "brownian"
TIME_CHANGED = "time-changed"
LIMIT = "limit"
DERIVED = "derived"

_MASK64 = (1 << 64) - 1


class RngStream:
    """Deterministic normal-increment stream keyed by (master_seed, replicate).

    Distinct replicates give statistically independent Philox streams; the
    sequence of draws is a pure function of the key and the running counter.
    """

    def __init__(self, master_seed: int, replicate: int = 0):
        self.master_seed = int(master_seed)
        self.replicate = int(replicate)
        self.counter = 0
        key = [self.master_seed & _MASK64, self.replicate & _MASK64]
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def normals(self, n: int) -> np.ndarray:
        """Draw n standard normals, advancing the counter."""
        self.counter += int(n)
        return self._gen.standard_normal(int(n))

    def spawn(self, replicate: int) -> "RngStream":
        """Fresh stream with the same master seed and a new replicate index."""
        return RngStream(self.master_seed, replicate)

    def __repr__(self):
        return (f"RngStream(master_seed={self.master_seed}, "
                f"replicate={self.replicate}, counter={self.counter})")


@dataclass(frozen=True)
class Path:
    """A process sampled on the uniform grid t0 + k*dt, k = 0..K."""

    t0: float
    dt: float
    values: np.ndarray
    kind: str = BROWNIAN

    def __post_init__(self):
        object.__setattr__(self, "values",
                           np.asarray(self.values, dtype=float))
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("a path needs at least two grid values")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    @property
    def horizon(self) -> float:
        return self.t0 + self.dt * (self.values.size - 1)

    def value_at(self, t) -> np.ndarray:
        """Linear interpolation on the grid; t must lie within the horizon."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t0 - 1e-12) or np.any(t > self.horizon + 1e-12):
            raise HorizonExceeded(
                f"time outside [{self.t0}, {self.horizon}]")
        return np.interp(t, self.times, self.values)


def sample_brownian(stream: RngStream, horizon: float, dt: float,
                    start: float = 0.0) -> Path:
    """Wiener path on [0, horizon] with step dt, started at `start`."""
    if horizon < dt:
        raise ValueError("horizon must be at least dt")
    steps = math.ceil(horizon / dt - 1e-9)
    increments = stream.normals(steps) * math.sqrt(dt)
    values = np.empty(steps + 1)
    values[0] = start
    np.cumsum(increments, out=values[1:])
    values[1:] += start
    return Path(t0=0.0, dt=dt, values=values, kind=BROWNIAN)


def extend(path: Path, stream: RngStream, steps: int) -> Path:
    """Continue a Brownian path by `steps` further increments."""
    if path.kind != BROWNIAN:
        raise KindMismatch("can only extend Brownian paths")
    increments = stream.normals(steps) * math.sqrt(path.dt)
    tail = path.values[-1] + np.cumsum(increments)
    return Path(t0=path.t0, dt=path.dt,
                values=np.concatenate([path.values, tail]), kind=BROWNIAN)


def refine(path: Path, stream: RngStream, factor: int) -> Path:
    """Brownian-bridge refinement to step dt/factor.

    Original grid values are preserved bit-exactly; interior points are
    conditionally correct bridge samples.
    """
    if path.kind != BROWNIAN:
        raise KindMismatch("refine requires a Brownian path")
    factor = int(factor)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if factor == 1:
        return path
    n_int = path.values.size - 1
    h = path.dt / factor
    out = np.empty(n_int * factor + 1)
    out[::factor] = path.values
    left = path.values[:-1].copy()
    right = path.values[1:]
    # Sample interior points sequentially, conditioning on the running left
    # value and the fixed right endpoint of each coarse interval.
    for j in range(1, factor):
        gap = path.dt - (j - 1) * h
        mean = left + (h / gap) * (right - left)
        var = h * (gap - h) / gap
        left = mean + math.sqrt(var) * stream.normals(n_int)
        out[j::factor][:n_int] = left
    return Path(t0=path.t0, dt=h, values=out, kind=BROWNIAN)


def rescale_diffusive(path: Path, n: float, horizon: float | None = None) -> Path:
    """Diffusive rescaling W_n(t) = path(n t) / sqrt(n), grid step dt/n."""
    if n <= 0:
        raise ValueError("n must be positive")
    if horizon is not None and n * horizon > path.horizon * (1 + 1e-12):
        raise HorizonExceeded(
            f"need base horizon {n * horizon:g}, have {path.horizon:g}")
    if n == 1:
        return path
    return Path(t0=path.t0 / n, dt=path.dt / n,
                values=path.values / math.sqrt(n), kind=path.kind)
