"""Tests for the binned occupation-density estimator."""
import math

import numpy as np
import pytest

from tclab import intensity as intens
from tclab import localtime, pathsim, timechange
from tclab.errors import HorizonExceeded
from tclab.pathsim import Path, RngStream


def linear_path(horizon=1.0, dt=1e-4):
    """Deterministic test path W(s) = s injected with the derived kind."""
    grid = np.arange(0.0, horizon + dt / 2, dt)
    return Path(t0=0.0, dt=dt, values=grid, kind=pathsim.DERIVED)


class TestOccupationIdentity:
    @pytest.mark.parametrize("upto", [0.25, 0.5, 0.777, 1.0])
    def test_identity_exact(self, upto):
        p = pathsim.sample_brownian(RngStream(0, 3), 1.0, 1e-3)
        prof = localtime.occupation_density(p, upto, 1e-2)
        assert math.fsum(prof.masses) * prof.bin_width == pytest.approx(
            upto, abs=1e-9)

    def test_identity_many_replicates(self):
        for r in range(50):
            p = pathsim.sample_brownian(RngStream(1, r), 1.0, 1e-3)
            prof = localtime.occupation_density(p, 1.0, 1e-2)
            total = math.fsum(prof.masses) * prof.bin_width
            assert abs(total - 1.0) <= 1e-9

    def test_upto_beyond_horizon(self):
        p = pathsim.sample_brownian(RngStream(0, 0), 1.0, 1e-2)
        with pytest.raises(HorizonExceeded):
            localtime.occupation_density(p, 2.0, 1e-2)

    def test_zero_window(self):
        p = pathsim.sample_brownian(RngStream(0, 0), 1.0, 1e-2)
        prof = localtime.occupation_density(p, 0.0, 1e-2)
        assert math.fsum(prof.masses) == 0.0


class TestProfileGeometry:
    def test_zero_is_a_bin_center(self):
        p = pathsim.sample_brownian(RngStream(0, 1), 1.0, 1e-3)
        prof = localtime.occupation_density(p, 1.0, 1e-2)
        assert np.min(np.abs(prof.centers)) == pytest.approx(0.0, abs=1e-12)

    def test_mass_at_outside_support(self):
        p = pathsim.sample_brownian(RngStream(0, 1), 1.0, 1e-3)
        prof = localtime.occupation_density(p, 1.0, 1e-2)
        assert prof.mass_at(1e6) == 0.0

    def test_linear_path_has_unit_density(self):
        # W(s) = s occupies each level in [0, 1] for dt per dt of level
        prof = localtime.occupation_density(linear_path(), 1.0, 1e-2)
        assert prof.mass_at(0.5) == pytest.approx(1.0, rel=1e-6)
        assert prof.mass_at(0.905) == pytest.approx(1.0, rel=1e-6)

    def test_invalid_bin_width(self):
        with pytest.raises(ValueError):
            localtime.LocalTimeProfile(0.0, 0.0, np.zeros(1), 1.0)


class TestLocalTimeAtZero:
    def test_mean_matches_brownian_oracle(self):
        # E L^0_1 = sqrt(2/pi) ~ 0.7979
        reps = 3000
        acc = 0.0
        for r in range(reps):
            p = pathsim.sample_brownian(RngStream(2, r), 1.0, 1e-3)
            prof = localtime.occupation_density(p, 1.0, 1e-2)
            acc += prof.mass_at(0.0)
        mean = acc / reps
        assert mean == pytest.approx(math.sqrt(2.0 / math.pi), rel=0.15)


class TestFunctionalViaLocaltime:
    def test_matches_time_domain_functional(self):
        # int L^a / lambda(a) da vs S_B(1), periodic lambda
        m = intens.periodic()
        within = 0
        for r in range(20):
            p = pathsim.sample_brownian(RngStream(3, r), 1.0, 1e-4)
            s = timechange.additive_functional(p, m)
            prof = localtime.occupation_density(p, 1.0, 1e-2)
            via_lt = localtime.functional_via_localtime(prof, m)
            direct = float(s.values[-1])
            if abs(via_lt - direct) <= 0.02 * abs(direct):
                within += 1
        assert within >= 19

    def test_zero_convention(self):
        # bins where lambda vanishes contribute nothing
        m = intens.sqrt_degenerate(1.0, 1.0)
        prof = localtime.LocalTimeProfile(-0.005, 0.01, np.array([5.0]), 0.05)
        assert prof.centers[0] == pytest.approx(0.0, abs=1e-12)
        assert localtime.functional_via_localtime(prof, m) == 0.0


class TestScaledLocaltimeLimit:
    def test_monotone_convergence_to_signed_split(self):
        m = intens.asymptotic_constant(1.5, 0.5)
        p = pathsim.sample_brownian(RngStream(4, 0), 1.0, 1e-4)
        prof = localtime.occupation_density(p, 1.0, 1e-2)
        limit = localtime.scaled_localtime_limit(prof, m, np.inf)
        errors = [abs(localtime.scaled_localtime_limit(prof, m, n) - limit)
                  for n in (1.0, 1e2, 1e4)]
        assert errors[1] < errors[0]
        assert errors[2] < errors[1]
        assert errors[-1] <= 0.05 * abs(limit)

    def test_infinite_limit_signed_split(self):
        prof = localtime.LocalTimeProfile(
            bin_left=-0.015, bin_width=0.01,
            masses=np.array([30.0, 20.0, 10.0]), t=0.6)
        # centers -0.01, 0.0, 0.01; zero-center mass split half/half
        m = intens.asymptotic_constant(2.0, 1.0)
        got = localtime.scaled_localtime_limit(prof, m, np.inf)
        want = ((0.1 + 0.5 * 0.2) / 2.0 + (0.3 + 0.5 * 0.2) / 1.0)
        assert got == pytest.approx(want, rel=1e-12)
