import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochwave.besov import (
    BesovParams,
    ball_indicator,
    besov_norm,
    holder_norm,
    indicator_regularity_check,
    interpolation_check,
    interpolation_ratio,
    leibniz_ratio,
    lp_norm,
    lq_aggregate,
    weight,
)
from stochwave.spectral import TorusGrid


def _harmonic(m=4):
    # |k| = m on the 2*pi torus: block j = log2(m) carries it with symbol one
    g = TorusGrid(2, 2 * np.pi, 32)
    x, y = g.coords
    return g, np.cos(m * x) + 0 * y


class TestNorms:
    def test_single_harmonic_sup_norm(self):
        g, f = _harmonic()
        for s in (-1.0, 0.0, 0.5, 2.0):
            assert holder_norm(f, s, g) == pytest.approx(2.0 ** (2 * s), rel=1e-12)

    def test_single_harmonic_l2_norm(self):
        g, f = _harmonic()
        rep = besov_norm(f, BesovParams(1.0, 2, 2), g)
        assert rep.norm == pytest.approx(4.0 * np.sqrt((2 * np.pi) ** 2 / 2), rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
    def test_homogeneous(self, seed, lam):
        g = TorusGrid(2, 8.0, 16)
        f = np.random.default_rng(seed).standard_normal(g.shape)
        p = BesovParams(0.3, 2, np.inf)
        assert besov_norm(lam * f, p, g).norm == pytest.approx(lam * besov_norm(f, p, g).norm, rel=1e-12)

    def test_monotone_in_s(self, rng):
        g = TorusGrid(2, 8.0, 32)
        f = rng.standard_normal(g.shape)
        norms = [holder_norm(f, s, g) for s in (-1.0, -0.5, 0.0, 0.5)]
        assert norms == sorted(norms)

    def test_aggregation(self):
        assert lq_aggregate([3.0, 4.0], 2) == pytest.approx(5.0)
        assert lq_aggregate([3.0, 4.0], np.inf) == 4.0
        assert lq_aggregate([], np.inf) == 0.0

    def test_lp_norm_of_constant(self):
        g = TorusGrid(2, 4.0, 8)
        assert lp_norm(np.full(g.shape, 2.0), 2, g) == pytest.approx(2.0 * 4.0)
        assert lp_norm(np.full(g.shape, -2.0), np.inf, g) == 2.0

    def test_weight(self):
        g = TorusGrid(2, 8.0, 16)
        w = weight(g, 2.0)
        assert w[8, 8] == pytest.approx(1.0)
        assert np.all(weight(g, 0.0) == 1.0)

    def test_rejects_small_exponents(self):
        with pytest.raises(ValueError):
            BesovParams(0.0, 0.5)


class TestInterpolation:
    @pytest.mark.parametrize("theta", [0.0, 1.0])
    def test_endpoints_are_exact(self, rng, theta):
        g = TorusGrid(2, 8.0, 32)
        f = rng.standard_normal(g.shape)
        assert interpolation_ratio(f, 0.0, 1.0, theta, 2, g) == pytest.approx(1.0, rel=1e-12)

    def test_random_fields_obey_bound(self, rng):
        g = TorusGrid(2, 8.0, 32)
        fields = [rng.standard_normal(g.shape) for _ in range(5)]
        assert interpolation_check(fields, 0.0, 1.0, 0.5, 2, g).passed

    @pytest.mark.parametrize("s1, s2, theta", [(1.0, 0.0, 0.5), (0.0, 1.0, 1.5)])
    def test_rejects_bad_arguments(self, s1, s2, theta):
        g = TorusGrid(2, 8.0, 16)
        with pytest.raises(ValueError):
            interpolation_ratio(np.ones(g.shape), s1, s2, theta, 2, g)


class TestLeibniz:
    def test_ratio_below_constant(self, rng):
        g = TorusGrid(2, 8.0, 32)
        for _ in range(5):
            f, h = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
            assert leibniz_ratio(f, h, 0.5, g) <= 8.0


class TestIndicator:
    def test_indicator_values(self):
        g = TorusGrid(2, 8.0, 16)
        chi = ball_indicator(g, 1.0)
        assert chi[8, 8] == 1.0 and chi[0, 0] == 0.0

    def test_critical_norm_is_stable_and_supercritical_grows(self):
        rep = indicator_regularity_check(1.0, 2, 8.0, [32, 64, 128], ps=(2.0,))
        assert rep.stability_ratio(2.0) < 1.5
        assert all(gf > 1.0 for gf in rep.growth_factors(2.0))
        assert len(rep.records()) == 3

    def test_ball_must_fit(self):
        with pytest.raises(ValueError):
            indicator_regularity_check(4.0, 2, 8.0, [16])
