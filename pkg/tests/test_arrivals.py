import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isomod.arrivals import (
    ChannelParams,
    GaussianStat,
    current_symbol_stat,
    gaussian_tail,
    previous_symbol_stat,
    q_function,
    tail_prob,
)


class TestChannelParams:
    def test_invariants(self):
        with pytest.raises(ValueError):
            ChannelParams(n=-1, p1=0.5, p2=0.6, noise_std=1.0)
        with pytest.raises(ValueError):
            ChannelParams(n=1, p1=0.7, p2=0.6, noise_std=1.0)
        with pytest.raises(ValueError):
            ChannelParams(n=1, p1=0.5, p2=1.2, noise_std=1.0)
        with pytest.raises(ValueError):
            ChannelParams(n=1, p1=0.5, p2=0.6, noise_std=-1.0)

    def test_variance_nonnegative(self):
        with pytest.raises(ValueError):
            GaussianStat(0.0, -1.0)


class TestSymbolStats:
    def test_current_zero_molecules(self):
        s = current_symbol_stat(ChannelParams(0.0, 0.6097, 0.7208, 10.0))
        assert (s.mean, s.variance) == (0.0, 0.0)

    def test_current_reference(self, reference_link):
        s = current_symbol_stat(reference_link)
        assert s.mean == pytest.approx(609.7, abs=1e-9)
        assert s.variance == pytest.approx(237.96591, abs=0.1)

    def test_current_certain_hit(self):
        s = current_symbol_stat(ChannelParams(1000.0, 1.0, 1.0, 10.0))
        assert s.variance == 0.0

    def test_previous_no_overflow(self):
        s = previous_symbol_stat(ChannelParams(1000.0, 0.6, 0.6, 10.0))
        assert s.mean == 0.0

    def test_previous_reference(self, reference_link):
        s = previous_symbol_stat(reference_link)
        assert s.mean == pytest.approx(111.1, abs=1e-9)
        assert s.variance == pytest.approx(439.21, abs=0.5)

    def test_previous_variance_dominates(self, reference_link):
        assert (
            previous_symbol_stat(reference_link).variance
            >= current_symbol_stat(reference_link).variance
        )


class TestQFunction:
    def test_half_at_zero(self):
        assert q_function(0.0) == 0.5

    def test_reference_point(self):
        # pdf-quadrature oracle value
        assert q_function(1.96) == pytest.approx(0.024997895148220466, abs=1e-4)

    def test_limits(self):
        assert q_function(np.inf) == 0.0
        assert q_function(-np.inf) == 1.0

    @given(st.floats(-8.0, 8.0))
    @settings(max_examples=200, deadline=None)
    def test_symmetry(self, x):
        assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-12)

    def test_array_input(self):
        out = q_function(np.array([0.0, 1.96]))
        assert out.shape == (2,)
        assert out[0] == 0.5


class TestTailProb:
    def test_threshold_at_mean(self):
        assert tail_prob(GaussianStat(10.0, 4.0), 0.0, 10.0) == 0.5

    def test_threshold_at_infinity(self):
        assert tail_prob(GaussianStat(10.0, 4.0), 0.0, np.inf) == 0.0

    def test_reference_point(self):
        # (mean 609.7, shot variance 237.97, sigma 50, tau 500):
        # z = -2.09649, upper tail by pdf quadrature = 0.98198
        p = tail_prob(GaussianStat(609.7, 237.96591), 2500.0, 500.0)
        assert p == pytest.approx(0.9819805871970689, abs=1e-9)

    def test_degenerate_step(self):
        assert tail_prob(GaussianStat(5.0, 0.0), 0.0, 4.0) == 1.0
        assert tail_prob(GaussianStat(5.0, 0.0), 0.0, 5.0) == 1.0
        assert tail_prob(GaussianStat(5.0, 0.0), 0.0, 6.0) == 0.0

    def test_negative_extra_variance(self):
        with pytest.raises(ValueError):
            tail_prob(GaussianStat(0.0, 1.0), -1.0, 0.0)

    @given(
        st.floats(-100.0, 100.0),
        st.floats(0.1, 1e4),
        st.floats(-500.0, 500.0),
        st.floats(-500.0, 500.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_threshold(self, mean, var, t1, t2):
        lo, hi = sorted((t1, t2))
        p_lo = tail_prob(GaussianStat(mean, var), 0.0, lo)
        p_hi = tail_prob(GaussianStat(mean, var), 0.0, hi)
        assert 0.0 <= p_hi <= p_lo <= 1.0

    def test_binomial_consistency(self, rng):
        # Large-n check: Gaussian tails track a binomial hit-count MC within
        # 0.01 absolute for thresholds within +-3 sigma of the mean.
        n, p1 = 20000, 0.6097
        ch = ChannelParams(n, p1, 0.7208, 0.0)
        stat = current_symbol_stat(ch)
        hits = rng.binomial(n, p1, size=200_000)
        std = math.sqrt(stat.variance)
        for k in (-3, -1, 0, 1, 3):
            tau = stat.mean + k * std
            assert tail_prob(stat, 0.0, tau) == pytest.approx(
                float((hits >= tau).mean()), abs=0.01
            )


class TestGaussianTailBroadcasting:
    def test_shapes(self):
        out = gaussian_tail(np.zeros((2, 3)), np.ones((2, 3)), np.full((4, 1, 1), 0.5))
        assert out.shape == (4, 2, 3)
