"""tclab: simulation lab for time-changed Wiener processes.

Builds the additive functional S_B(x) = int_0^x ds/lambda(B_s), its inverse
clock tau, and the time-changed process B_{tau_t}; samples the corresponding
scaling limits (including skew-Brownian-type laws) two independent ways; and
turns the limit statements into seeded, DKW-gated convergence experiments.
"""

from .errors import (ConfigInvalid, DegenerateFunctional, HorizonExceeded,
                     KindMismatch, LengthMismatch, NonIntegrableSingularity,
                     TclabError)
from .intensity import (IntensityModel, asymptotic_constant, constant, custom,
                        periodic, power_tail, sqrt_degenerate)
from .limitproc import LimitSpec, sample_limit_sde, sample_limit_timechange
from .localtime import LocalTimeProfile, occupation_density
from .pathsim import Path, RngStream, refine, rescale_diffusive, sample_brownian
from .stats import ConvergenceReport, convergence_report, dkw_threshold, ks_two_sample
from .timechange import (MonotoneFunction, TimeChangedPath,
                         additive_functional, cauchy_estimate,
                         inverse_time_change, simulate_normalized,
                         time_changed_path)

__version__ = "0.1.0"

__all__ = [
    "ConfigInvalid", "ConvergenceReport", "DegenerateFunctional",
    "HorizonExceeded", "IntensityModel", "KindMismatch", "LengthMismatch",
    "LimitSpec", "LocalTimeProfile", "MonotoneFunction",
    "NonIntegrableSingularity", "Path", "RngStream", "TclabError",
    "TimeChangedPath", "additive_functional", "asymptotic_constant",
    "cauchy_estimate", "constant", "convergence_report", "custom",
    "dkw_threshold", "inverse_time_change", "ks_two_sample",
    "occupation_density", "periodic", "power_tail", "refine",
    "rescale_diffusive", "sample_brownian", "sample_limit_sde",
    "sample_limit_timechange", "simulate_normalized", "sqrt_degenerate",
    "time_changed_path",
]
