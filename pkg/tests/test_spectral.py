import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochwave.spectral import (
    LAPLACIAN,
    TorusGrid,
    dealias,
    divergence,
    filter_field,
    forward_transform,
    gradient,
    helmholtz,
    helmholtz_inverse,
    inner,
    integrate,
    inverse_transform,
    laplacian,
    lp_blocks,
    lp_cutoff,
    lp_symbol,
    parseval_sum,
    pointwise,
    resample,
)


class TestTorusGrid:
    @pytest.mark.parametrize("d, M, n", [(1, 8.0, 16), (4, 8.0, 16), (2, 0.0, 16), (2, 8.0, 15), (2, 8.0, 6)])
    def test_rejects_bad_parameters(self, d, M, n):
        with pytest.raises(ValueError):
            TorusGrid(d, M, n)

    def test_geometry(self):
        g = TorusGrid(3, 6.0, 12)
        assert g.h == 0.5
        assert g.shape == (12, 12, 12)
        assert g.volume == pytest.approx(216.0)
        assert g.cell_volume == pytest.approx(0.125)

    def test_torus_distance_uses_minimal_image(self):
        g = TorusGrid(2, 10.0, 10)
        r = g.distance((0.0, 0.0))
        assert r[9, 0] == pytest.approx(1.0)
        assert r.max() == pytest.approx(np.sqrt(50.0))

    def test_derivative_wavenumbers_drop_nyquist(self):
        g = TorusGrid(2, 8.0, 16)
        assert np.all(g.kderiv[0][8, :] == 0)
        assert np.all(g.kvec[0][8, :] != 0)


class TestTransforms:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
    def test_parseval(self, seed, d):
        g = TorusGrid(d, 5.0, 8)
        f = np.random.default_rng(seed).standard_normal(g.shape)
        assert parseval_sum(forward_transform(f), g) == pytest.approx(integrate(f**2, g), rel=1e-12)

    def test_round_trip(self, rng):
        g = TorusGrid(2, 8.0, 16)
        f = rng.standard_normal(g.shape)
        np.testing.assert_allclose(inverse_transform(forward_transform(f)), f, atol=1e-13)

    def test_rejects_non_finite(self):
        f = np.zeros((8, 8))
        f[1, 2] = np.nan
        with pytest.raises(ValueError):
            forward_transform(f)

    def test_constant_has_unit_mean_coefficient(self):
        c = forward_transform(np.full((8, 8), 3.0))
        assert c[0, 0] == pytest.approx(3.0)
        assert np.abs(c).sum() == pytest.approx(3.0)


class TestCalculus:
    def test_derivatives_of_a_harmonic(self):
        g = TorusGrid(2, 2 * np.pi, 32)
        x, y = g.coords
        f = np.sin(3 * x) * np.cos(2 * y)
        gx, gy = gradient(f, g)
        np.testing.assert_allclose(gx, 3 * np.cos(3 * x) * np.cos(2 * y), atol=1e-12)
        np.testing.assert_allclose(gy, -2 * np.sin(3 * x) * np.sin(2 * y), atol=1e-12)
        np.testing.assert_allclose(laplacian(f, g), -13 * f, atol=1e-11)
        np.testing.assert_allclose(filter_field(f, LAPLACIAN, g), -13 * f, atol=1e-11)

    def test_divergence_is_minus_adjoint_of_gradient(self, rng):
        g = TorusGrid(3, 4.0, 8)
        f = rng.standard_normal(g.shape)
        v = [rng.standard_normal(g.shape) for _ in range(3)]
        lhs = sum(inner(a, b, g) for a, b in zip(gradient(f, g), v))
        assert lhs == pytest.approx(-inner(f, divergence(v, g), g), rel=1e-11)

    def test_helmholtz_round_trip(self, rng):
        g = TorusGrid(2, 8.0, 16)
        f = rng.standard_normal(g.shape)
        np.testing.assert_allclose(helmholtz(helmholtz_inverse(f, g), g), f, atol=1e-12)

    def test_dealias_keeps_low_modes_only(self, rng):
        g = TorusGrid(2, 2 * np.pi, 24)
        c = forward_transform(dealias(rng.standard_normal(g.shape), g))
        m = np.abs(np.fft.fftfreq(24, 1 / 24))
        high = (m[:, None] >= 8) | (m[None, :] >= 8)
        assert np.abs(c[high]).max() < 1e-14

    def test_exp_refuses_overflow(self):
        with pytest.raises(OverflowError):
            pointwise(np.array([701.0]), op="exp")
        assert pointwise(np.array([1.0]), op="exp")[0] == pytest.approx(np.e)


class TestResample:
    def test_band_limited_fields_survive_refinement(self):
        coarse, fine = TorusGrid(2, 8.0, 16), TorusGrid(2, 8.0, 64)
        x, y = coarse.coords
        f = np.cos(2 * np.pi * 3 * x / 8) + np.sin(2 * np.pi * 2 * y / 8)
        back = resample(resample(f, coarse, fine), fine, coarse)
        np.testing.assert_allclose(back, f, atol=1e-12)

    def test_rejects_different_tori(self):
        with pytest.raises(ValueError):
            resample(np.zeros((8, 8)), TorusGrid(2, 8.0, 8), TorusGrid(2, 4.0, 8))


class TestLittlewoodPaley:
    def test_cutoff_profile(self):
        assert lp_cutoff(np.array([0.0, 1.0, 1.5, 2.0, 3.0])).tolist() == pytest.approx([1, 1, 0.5, 0, 0])

    def test_blocks_sum_to_identity(self, rng):
        g = TorusGrid(2, 8.0, 32)
        f = rng.standard_normal(g.shape)
        np.testing.assert_allclose(sum(lp_blocks(f, g)), f, atol=1e-12)

    @pytest.mark.parametrize("j", [0, 1, 2, 3])
    def test_block_support(self, j):
        k = np.linspace(0, 40, 4001)
        sym = lp_symbol(k, j)
        assert np.all(sym[(k < 2.0 ** (j - 1)) | (k > 2.0 ** (j + 1))] == 0)
        assert np.all((sym >= 0) & (sym <= 1))

    def test_negative_block_index_rejected(self):
        with pytest.raises(ValueError):
            lp_symbol(np.zeros(3), -2)
