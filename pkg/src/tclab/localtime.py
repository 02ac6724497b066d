"""Bin-based occupation-density (local time) estimation.

The estimator attributes each grid step to the bin of its midpoint value, so
the occupation identity sum(masses) * bin_width = t holds exactly up to float
summation -- the property the limit-theorem checks rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import intensity as intens
from .errors import HorizonExceeded
from .pathsim import Path


@dataclass(frozen=True)
class LocalTimeProfile:
    """Binned occupation density {L^a_t} at bin centers bin_left + (j+1/2)*w."""

    bin_left: float
    bin_width: float
    masses: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "masses",
                           np.asarray(self.masses, dtype=float))
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        if np.any(self.masses < 0):
            raise ValueError("masses must be nonnegative")

    @property
    def centers(self) -> np.ndarray:
        return (self.bin_left
                + self.bin_width * (0.5 + np.arange(self.masses.size)))

    def mass_at(self, a: float) -> float:
        """Estimated local time at level a (value of the bin containing a)."""
        j = int(np.floor((a - self.bin_left) / self.bin_width))
        if j < 0 or j >= self.masses.size:
            return 0.0
        return float(self.masses[j])


def occupation_density(path: Path, upto: float,
                       bin_width: float) -> LocalTimeProfile:
    """Occupation density of the path on [0, upto], step-midpoint binning.

    Bins are aligned so that 0 is a bin center.  A fractional final step gets
    proportional weight, keeping sum(masses)*bin_width == upto exactly.
    """
    if upto < 0:
        raise ValueError("upto must be nonnegative")
    if upto > path.horizon + 1e-12:
        raise HorizonExceeded(f"upto={upto:g} beyond horizon {path.horizon:g}")
    w = float(bin_width)
    full = int(math.floor(upto / path.dt + 1e-9))
    full = min(full, path.values.size - 1)
    frac = upto - full * path.dt
    mids = 0.5 * (path.values[:full] + path.values[1:full + 1])
    weights = np.full(full, path.dt)
    if frac > 1e-15 and full < path.values.size - 1:
        # partial last step, midpoint of the traversed part
        v0 = path.values[full]
        v1 = v0 + (path.values[full + 1] - v0) * (frac / path.dt)
        mids = np.append(mids, 0.5 * (v0 + v1))
        weights = np.append(weights, frac)
    if mids.size == 0:
        return LocalTimeProfile(bin_left=-0.5 * w, bin_width=w,
                                masses=np.zeros(1), t=float(upto))
    # bin j covers ((j-1/2)w, (j+1/2)w]; center j*w, with 0 a bin center
    idx = np.rint(mids / w).astype(np.int64)
    jmin, jmax = int(idx.min()), int(idx.max())
    counts = np.bincount(idx - jmin, weights=weights,
                         minlength=jmax - jmin + 1)
    return LocalTimeProfile(bin_left=(jmin - 0.5) * w, bin_width=w,
                            masses=counts / w, t=float(upto))


def functional_via_localtime(profile: LocalTimeProfile, model) -> float:
    """sum_j masses[j] * bin_width / lambda(a_j), 0/0 convention at zeros."""
    centers = profile.centers
    lam = intens.evaluate(model, centers)
    with np.errstate(divide="ignore"):
        contrib = profile.masses * profile.bin_width / lam
    contrib[~np.isfinite(contrib)] = 0.0
    return float(math.fsum(contrib))


def scaled_localtime_limit(profile: LocalTimeProfile, model,
                           n: float) -> float:
    """int L^a / lambda(sqrt(n) a) da, or its n = inf limit.

    For n = inf (pass ``numpy.inf``) returns the signed split
    (1/a_minus) * int_{a<0} L da + (1/a_plus) * int_{a>0} L da, with the bin
    centered at 0 shared half-half between the two sides.
    """
    centers = profile.centers
    mass = profile.masses * profile.bin_width
    if math.isinf(n):
        at_zero = np.isclose(centers, 0.0, atol=1e-12 * profile.bin_width + 1e-300)
        pos = float(math.fsum(mass[(centers > 0) & ~at_zero]))
        neg = float(math.fsum(mass[(centers < 0) & ~at_zero]))
        zero = float(math.fsum(mass[at_zero]))
        return ((pos + 0.5 * zero) / model.a_plus
                + (neg + 0.5 * zero) / model.a_minus)
    lam = intens.evaluate(model, math.sqrt(n) * centers)
    with np.errstate(divide="ignore"):
        contrib = mass / lam
    contrib[~np.isfinite(contrib)] = 0.0
    return float(math.fsum(contrib))
