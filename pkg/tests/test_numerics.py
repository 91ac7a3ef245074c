import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclowork.errors import ConfigError, SubdivisionExhausted, TooFewSamples
from cyclowork.numerics import (
    QuadratureConfig,
    RngStream,
    gaussian_samples,
    integrate_1d,
    integrate_2d_triangular,
    summarize,
)


class TestIntegrate1d:
    def test_sine(self):
        assert integrate_1d(np.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-9)

    def test_zero_integrand(self):
        assert integrate_1d(lambda x: 0.0 * x, 0.0, 1.0) == 0.0

    def test_spectral_normalisation(self):
        wd = 30.0
        assert integrate_1d(lambda w: 3 * w**2 / wd**3, 0.0, wd) == pytest.approx(1.0, abs=1e-10)

    def test_narrow_lorentzian(self):
        g = 1e-3
        val = integrate_1d(lambda w: g / (g**2 + (w - 1.0) ** 2), 0.0, 30.0, points=[1.0])
        exact = math.atan(29.0 / g) + math.atan(1.0 / g)
        assert val == pytest.approx(exact, rel=1e-9)

    def test_complex_integrand(self):
        val = integrate_1d(lambda x: np.exp(1j * x), 0.0, math.pi)
        assert val == pytest.approx(2j, abs=1e-12)

    def test_vector_valued(self):
        val = integrate_1d(lambda x: np.stack([x, x**2]), 0.0, 1.0)
        np.testing.assert_allclose(val, [0.5, 1 / 3], rtol=1e-12)

    def test_reversed_bounds_rejected(self):
        with pytest.raises(ConfigError):
            integrate_1d(np.sin, 1.0, 0.0)

    def test_subdivision_exhausted(self):
        cfg = QuadratureConfig(rel_tol=1e-14, abs_tol=1e-300, max_subdivisions=2)
        with pytest.raises(SubdivisionExhausted):
            integrate_1d(lambda x: np.sin(1.0 / (x + 1e-4)), 0.0, 1.0, cfg)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 5))
    def test_linearity(self, a, b, k):
        cfg = QuadratureConfig()
        f = lambda x: np.exp(-k * x) * np.cos(3 * x)
        g = lambda x: 1.0 / (1.0 + x**2)
        lhs = integrate_1d(lambda x: a * f(x) + b * g(x), 0.0, 4.0, cfg)
        rhs = a * integrate_1d(f, 0.0, 4.0, cfg) + b * integrate_1d(g, 0.0, 4.0, cfg)
        tol = 2 * max(cfg.abs_tol, cfg.rel_tol * max(abs(lhs), abs(a) * 2, abs(b) * 2))
        assert abs(lhs - rhs) <= tol


class TestIntegrate2d:
    def test_unit_triangle_area(self):
        assert integrate_2d_triangular(lambda t1, t2: np.ones_like(t1 * t2), 2.0) == pytest.approx(2.0, rel=1e-12)

    def test_product(self):
        assert integrate_2d_triangular(lambda t1, t2: t1 * t2, 1.0) == pytest.approx(0.125, rel=1e-12)

    def test_exponential_growth_rate(self):
        f = lambda t1, t2: np.exp(-(t1 - t2))
        ts = np.array([40.0, 60.0, 80.0])
        vals = np.array([integrate_2d_triangular(f, t) for t in ts])
        # closed form t - 1 + exp(-t)
        np.testing.assert_allclose(vals, ts - 1 + np.exp(-ts), rtol=1e-9)
        assert np.diff(vals) / np.diff(ts) == pytest.approx([1.0, 1.0], rel=1e-9)

    def test_zero_time(self):
        assert integrate_2d_triangular(lambda t1, t2: t1 + t2, 0.0) == 0.0


class TestRng:
    def test_zero_stddev(self):
        assert np.all(gaussian_samples(RngStream(1), 100, mean=3.0, stddev=0.0) == 3.0)

    def test_clt(self):
        s = summarize(gaussian_samples(RngStream(2), 10**6))
        assert abs(s.mean) < 5e-3

    def test_deterministic(self):
        a = gaussian_samples(RngStream(7, 3), 1000)
        b = gaussian_samples(RngStream(7, 3), 1000)
        assert np.array_equal(a, b)

    def test_child_equals_explicit_stream(self):
        assert np.array_equal(gaussian_samples(RngStream(7).child(5), 10), gaussian_samples(RngStream(7, 5), 10))

    def test_streams_uncorrelated(self):
        n = 100_000
        xs = [gaussian_samples(RngStream(11, k), n) for k in range(5)]
        for i in range(5):
            for j in range(i + 1, 5):
                assert abs(np.corrcoef(xs[i], xs[j])[0, 1]) < 5 / math.sqrt(n)

    def test_seed32_deterministic_and_distinct(self):
        assert RngStream(1, 2).seed32() == RngStream(1, 2).seed32()
        assert len({RngStream(1, k).seed32() for k in range(100)}) == 100

    def test_invalid_seed(self):
        with pytest.raises(ConfigError):
            RngStream(-1)


class TestSummarize:
    def test_constant(self):
        s = summarize(np.full(100, 2.5))
        assert s.variance == 0.0 and s.skewness == 0.0 and s.excess_kurtosis == 0.0

    def test_alternating(self):
        n = 100
        s = summarize(np.tile([1.0, -1.0], n // 2))
        assert s.mean == pytest.approx(0.0, abs=1e-15)
        assert s.variance == pytest.approx(n / (n - 1), rel=1e-14)

    def test_normal_kurtosis(self):
        n = 10**6
        s = summarize(gaussian_samples(RngStream(3), n))
        assert abs(s.excess_kurtosis) < 5 * math.sqrt(24 / n)

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            summarize(np.zeros(15))

    def test_standard_error_of_mean(self):
        # jackknife SE of the mean for iid data is close to sigma / sqrt(n)
        s = summarize(gaussian_samples(RngStream(4), 64_000, stddev=2.0))
        assert s.se_mean == pytest.approx(2.0 / math.sqrt(64_000), rel=0.3)

    def test_order_independent_to_1e12(self):
        x = gaussian_samples(RngStream(5), 10_000, mean=1.0)
        a, b = summarize(x), summarize(x[::-1].copy())
        assert a.mean == pytest.approx(b.mean, rel=1e-12)
        assert a.variance == pytest.approx(b.variance, rel=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-10, 10), st.floats(0.1, 10), st.integers(0, 2**32))
    def test_recovers_parameters(self, mean, sd, seed):
        s = summarize(gaussian_samples(RngStream(seed), 4096, mean=mean, stddev=sd))
        assert abs(s.mean - mean) < 5 * s.se_mean
        assert abs(s.variance - sd**2) < 5 * s.se_variance
