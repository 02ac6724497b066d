"""Tests for Brownian path generation and the replicate-keyed RNG."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tclab import pathsim
from tclab.errors import HorizonExceeded, KindMismatch
from tclab.pathsim import Path, RngStream


class TestRngStream:
    def test_same_key_same_draws(self):
        a = RngStream(42, 7).normals(100)
        b = RngStream(42, 7).normals(100)
        np.testing.assert_array_equal(a, b)

    def test_distinct_replicates_differ(self):
        a = RngStream(42, 0).normals(100)
        b = RngStream(42, 1).normals(100)
        assert not np.array_equal(a, b)

    def test_counter_advances(self):
        s = RngStream(0, 0)
        s.normals(10)
        s.normals(5)
        assert s.counter == 15

    def test_spawn_is_fresh(self):
        s = RngStream(3, 1)
        s.normals(50)
        child = s.spawn(1)
        np.testing.assert_array_equal(child.normals(50),
                                      RngStream(3, 1).normals(50))

    def test_draws_split_invariance(self):
        # drawing 100 at once equals drawing 60 then 40
        s = RngStream(9, 2)
        once = s.normals(100)
        t = RngStream(9, 2)
        twice = np.concatenate([t.normals(60), t.normals(40)])
        np.testing.assert_array_equal(once, twice)

    def test_replicate_independence_proxy(self):
        terminals = np.array([
            [RngStream(seed, 0).normals(1)[0], RngStream(seed, 1).normals(1)[0]]
            for seed in range(10_000)])
        corr = np.corrcoef(terminals.T)[0, 1]
        assert -0.05 < corr < 0.05


class TestPath:
    def test_times_and_horizon(self):
        p = Path(t0=0.0, dt=0.5, values=np.zeros(5))
        np.testing.assert_allclose(p.times, [0, 0.5, 1.0, 1.5, 2.0])
        assert p.horizon == 2.0

    def test_value_at_interpolates(self):
        p = Path(t0=0.0, dt=1.0, values=np.array([0.0, 2.0, 4.0]))
        assert p.value_at(0.5) == pytest.approx(1.0)

    def test_value_at_outside_horizon(self):
        p = Path(t0=0.0, dt=1.0, values=np.array([0.0, 1.0]))
        with pytest.raises(HorizonExceeded):
            p.value_at(1.5)

    def test_needs_two_values(self):
        with pytest.raises(ValueError):
            Path(t0=0.0, dt=1.0, values=np.array([1.0]))

    def test_positive_dt(self):
        with pytest.raises(ValueError):
            Path(t0=0.0, dt=0.0, values=np.zeros(3))


class TestSampleBrownian:
    def test_terminal_moments(self):
        horizon, dt, reps = 2.0, 0.25, 10_000
        term = np.array([
            pathsim.sample_brownian(RngStream(0, r), horizon, dt).values[-1]
            for r in range(reps)])
        # MC oracles: Var B_T = T, E B_T = 0
        assert abs(term.mean()) <= 3.0 * math.sqrt(horizon / reps)
        assert abs(term.var() - horizon) <= 3.0 * math.sqrt(2.0 / reps) * horizon

    def test_starts_at_start(self):
        p = pathsim.sample_brownian(RngStream(0, 0), 1.0, 0.1, start=3.0)
        assert p.values[0] == 3.0

    def test_grid_shape(self):
        p = pathsim.sample_brownian(RngStream(0, 0), 1.0, 0.1)
        assert p.values.size == 11
        assert p.kind == pathsim.BROWNIAN

    def test_horizon_shorter_than_dt(self):
        with pytest.raises(ValueError):
            pathsim.sample_brownian(RngStream(0, 0), 0.05, 0.1)


class TestExtend:
    def test_prefix_preserved(self):
        s = RngStream(1, 0)
        p = pathsim.sample_brownian(s, 1.0, 0.1)
        q = pathsim.extend(p, s, 5)
        np.testing.assert_array_equal(q.values[:p.values.size], p.values)
        assert q.values.size == p.values.size + 5

    def test_only_brownian(self):
        p = Path(t0=0.0, dt=0.1, values=np.zeros(3), kind=pathsim.DERIVED)
        with pytest.raises(KindMismatch):
            pathsim.extend(p, RngStream(0, 0), 5)


class TestRefine:
    def test_originals_bit_exact(self):
        s = RngStream(5, 0)
        p = pathsim.sample_brownian(s, 1.0, 0.1)
        q = pathsim.refine(p, s, 4)
        np.testing.assert_array_equal(q.values[::4], p.values)
        assert q.dt == pytest.approx(p.dt / 4)

    def test_factor_one_is_identity(self):
        p = pathsim.sample_brownian(RngStream(5, 0), 1.0, 0.1)
        assert pathsim.refine(p, RngStream(5, 1), 1) is p

    def test_bridge_increment_variance(self):
        # pooled fine-grid increment variance ~ dt / factor [bridge oracle]
        dt, factor = 0.1, 4
        incs = []
        for r in range(200):
            s = RngStream(11, r)
            p = pathsim.sample_brownian(s, 5.0, dt)
            q = pathsim.refine(p, s, factor)
            incs.append(np.diff(q.values))
        incs = np.concatenate(incs)
        assert incs.var() == pytest.approx(dt / factor, rel=0.05)

    def test_invalid_factor(self):
        p = pathsim.sample_brownian(RngStream(0, 0), 1.0, 0.1)
        with pytest.raises(ValueError):
            pathsim.refine(p, RngStream(0, 0), 0)

    def test_only_brownian(self):
        p = Path(t0=0.0, dt=0.1, values=np.zeros(3), kind=pathsim.LIMIT)
        with pytest.raises(KindMismatch):
            pathsim.refine(p, RngStream(0, 0), 2)


class TestRescaleDiffusive:
    def test_scaling_invariance_variance(self):
        n, reps = 4.0, 10_000
        term = np.empty(reps)
        for r in range(reps):
            p = pathsim.sample_brownian(RngStream(2, r), 4.0, 0.5)
            term[r] = pathsim.rescale_diffusive(p, n).value_at(1.0)
        assert term.var() == pytest.approx(1.0, abs=3.0 * math.sqrt(2.0 / reps))

    def test_grid_rescaled(self):
        p = pathsim.sample_brownian(RngStream(0, 0), 2.0, 0.1)
        q = pathsim.rescale_diffusive(p, 4.0)
        assert q.dt == pytest.approx(0.025)
        assert q.horizon == pytest.approx(0.5)

    def test_horizon_check(self):
        p = pathsim.sample_brownian(RngStream(0, 0), 2.0, 0.1)
        with pytest.raises(HorizonExceeded):
            pathsim.rescale_diffusive(p, 4.0, horizon=1.0)

    @given(st.floats(0.5, 16.0))
    @settings(max_examples=20, deadline=None)
    def test_values_scale_exactly(self, n):
        p = Path(t0=0.0, dt=0.1, values=np.array([0.0, 1.0, -2.0]))
        q = pathsim.rescale_diffusive(p, n)
        np.testing.assert_allclose(q.values, p.values / math.sqrt(n))
