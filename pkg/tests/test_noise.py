import numpy as np
import pytest

from stochwave.noise import (
    Mollifier,
    build_lift,
    bump_profile,
    convergence_study,
    gaussian_bump,
    renorm_constant_a,
    renorm_constant_b,
    sample_white_noise,
    zero_noise,
)
from stochwave.spectral import TorusGrid, forward_transform, grad_dot, gradient, helmholtz, integrate


class TestWhiteNoise:
    def test_pointwise_variance(self):
        g = TorusGrid(2, 8.0, 64)
        xi = sample_white_noise(3, g).xi
        assert xi.var() * g.cell_volume == pytest.approx(1.0, rel=0.05)

    def test_coefficient_variance(self):
        g = TorusGrid(2, 8.0, 64)
        c = np.concatenate([forward_transform(sample_white_noise(s, g).xi).ravel() for s in range(4)])
        assert np.mean(np.abs(c) ** 2) * g.volume == pytest.approx(1.0, rel=0.02)

    def test_pairing_covariance(self):
        # E <xi, phi> <xi, psi> = <phi, psi>
        g = TorusGrid(2, 8.0, 32)
        phi = gaussian_bump(g, 1.0)
        psi = gaussian_bump(g, 1.5, center=(4.5, 4.0))
        pairs = np.array([[integrate(nz.xi * phi, g), integrate(nz.xi * psi, g)]
                          for nz in (sample_white_noise(s, g) for s in range(2000))])
        cov = np.mean(pairs[:, 0] * pairs[:, 1])
        assert cov == pytest.approx(integrate(phi * psi, g), rel=0.1)

    def test_seed_determinism(self):
        g = TorusGrid(3, 4.0, 8)
        assert np.array_equal(sample_white_noise(11, g).xi, sample_white_noise(11, g).xi)
        assert not np.array_equal(sample_white_noise(11, g).xi, sample_white_noise(12, g).xi)


class TestMollifier:
    def test_profile(self):
        r = np.array([0.0, 0.5, 0.999, 1.0, 2.0])
        out = bump_profile(r)
        assert out[0] == 1.0
        assert out[1] == pytest.approx(np.exp(1 - 1 / 0.75))
        assert out[3] == out[4] == 0.0

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            Mollifier(0.0)

    def test_symbol_support(self):
        g = TorusGrid(2, 8.0, 32)
        s = Mollifier(0.5).symbol(g)
        assert np.all(s[g.kabs >= 2.0] == 0)


class TestRenormConstants:
    def test_a_matches_monte_carlo(self):
        # independent estimate: spatial means of |grad X|^2 over seeds
        g = TorusGrid(2, 8.0, 32)
        mol = Mollifier(0.25)
        a = renorm_constant_a(mol, g)
        means = []
        for s in range(200):
            lift = build_lift(sample_white_noise(s, g), mol)
            gX = gradient(lift.X, g)
            means.append(integrate(grad_dot(gX, gX, g), g) / g.volume)
        se = np.std(means, ddof=1) / np.sqrt(len(means))
        assert abs(np.mean(means) - a) <= 3 * se

    def test_a_grows_as_eps_shrinks(self):
        g = TorusGrid(2, 16.0, 128)
        a = [renorm_constant_a(Mollifier(e), g) for e in (0.25, 0.125, 0.0625)]
        assert a[0] < a[1] < a[2]

    def test_b_monte_carlo(self):
        g = TorusGrid(3, 8.0, 16)
        b, se = renorm_constant_b(Mollifier(0.25), g, n_samples=60, max_rel_se=0.1)
        assert b > 0 and se / b < 0.1

    def test_b_noisy_estimate_is_refused(self):
        with pytest.raises(RuntimeError):
            renorm_constant_b(Mollifier(0.5), TorusGrid(3, 4.0, 16), n_samples=40)
        with pytest.raises(ValueError):
            renorm_constant_b(Mollifier(0.5), TorusGrid(2, 4.0, 16))


class TestLift:
    def test_zero_noise_gives_zero_lift(self):
        for g in (TorusGrid(2, 8.0, 16), TorusGrid(3, 4.0, 8)):
            lift = build_lift(zero_noise(g), Mollifier(0.5))
            assert lift.a == 0.0
            for name, f in lift.named_fields().items():
                assert not np.any(f), name

    def test_X_solves_helmholtz(self):
        g = TorusGrid(2, 8.0, 32)
        lift = build_lift(sample_white_noise(4, g), Mollifier(0.25))
        np.testing.assert_allclose(helmholtz(lift.X, g), lift.xi_eps, atol=1e-10)
        assert np.array_equal(lift.W, lift.X)

    def test_three_dimensional_objects(self):
        g = TorusGrid(3, 4.0, 16)
        lift = build_lift(sample_white_noise(4, g), Mollifier(0.5), b=1.0)
        np.testing.assert_allclose(lift.W, lift.X + lift.X2 + lift.X3)
        np.testing.assert_allclose(helmholtz(lift.X2, g), lift.wick_grad_X_sq, atol=1e-10)

    def test_snapshot_fields(self):
        g = TorusGrid(2, 8.0, 16)
        snap = build_lift(sample_white_noise(1, g), Mollifier(0.25)).to_snapshot()
        assert {"xi_eps", "X", "wick_grad_X_sq", "W"} <= set(snap.fields)


class TestConvergenceStudy:
    def test_rejects_non_decreasing_eps(self):
        g = TorusGrid(2, 8.0, 16)
        with pytest.raises(ValueError):
            convergence_study([0], [0.1, 0.2], gaussian_bump(g, 1.0), g)

    def test_raw_minus_wick_is_a_times_mass(self):
        g = TorusGrid(2, 8.0, 32)
        phi = gaussian_bump(g, 1.0)
        rep = convergence_study(range(5), [0.5, 0.25], phi, g)
        for raw, wick, a in zip(rep.raw_mean, rep.wick_mean, rep.a):
            assert raw - wick == pytest.approx(a * integrate(phi, g), rel=1e-10)
        assert len(rep.coupled_rms_differences) == 1
