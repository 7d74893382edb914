import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochwave.dynamics import WaveState
from stochwave.hamiltonian import TruncationConfig, build_Z
from stochwave.localization import LocalizationSchedule
from stochwave.noise import Mollifier, build_lift, zero_noise
from stochwave.propagation import (
    Cone,
    admissible_cones,
    bump_derivative_identity_check,
    bump_field,
    calibrate_local_constant,
    classical_speed_run,
    compact_bump,
    cone_agreement,
    gronwall_local_check,
    local_energy,
    outside_mass_fraction,
    psi,
)
from stochwave.spectral import TorusGrid, integrate


@pytest.fixture(scope="module")
def free16():
    g = TorusGrid(2, 8.0, 16)
    op = build_Z(build_lift(zero_noise(g), Mollifier(0.5)), LocalizationSchedule(g))
    return op, TruncationConfig(g, 2.0, C_gg=1.0)


def _data(grid, L):
    u0 = compact_bump(grid, grid.center, L)
    return u0, np.zeros(grid.shape)


class TestBump:
    @settings(max_examples=50, deadline=None)
    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_psi_is_monotone_and_lipschitz(self, a, b):
        pa, pb = psi(a), psi(b)
        assert 0 <= pa <= 1 and 0 <= pb <= 1
        assert abs(pa - pb) <= abs(a - b) + 1e-12
        if a <= b:
            assert pa >= pb

    def test_field_values(self):
        g = TorusGrid(2, 8.0, 64)
        cone = Cone(1.0, g.center)
        phi = bump_field(cone, 0.0, g)
        r = g.distance(g.center)
        assert np.all(phi[r <= 2.0] == 1.0)
        assert np.all(phi[r >= 3.0] == 0.0)
        with pytest.raises(ValueError):
            bump_field(cone, 1.5, g)

    def test_derivative_identity_on_fine_grid(self):
        g = TorusGrid(2, 8.0, 256)
        rep = bump_derivative_identity_check(Cone(1.0, g.center), 0.3, g)
        assert rep.passed
        assert rep.mid_annulus_gradient == pytest.approx(1.0, abs=0.05)

    def test_mismatch_shrinks_with_h(self):
        fr = [bump_derivative_identity_check(Cone(1.0, (4.0, 4.0)), 0.3, TorusGrid(2, 8.0, n)).mismatch_fraction
              for n in (64, 128, 256)]
        assert fr[0] > fr[1] > fr[2]


class TestCone:
    @pytest.mark.parametrize("t, c", [(-0.1, 2.0), (1.0, 0.0)])
    def test_rejects_bad_apex(self, t, c):
        with pytest.raises(ValueError):
            Cone(t, (0.0, 0.0), c)

    def test_validate(self):
        g = TorusGrid(2, 8.0, 16)
        with pytest.raises(ValueError):
            Cone(0.5, (4.0,)).validate(g)
        with pytest.raises(ValueError):
            Cone(1.6, (4.0, 4.0)).validate(g)
        Cone(1.5, (4.0, 4.0)).validate(g)

    def test_fits_in(self):
        g = TorusGrid(2, 8.0, 16)
        assert Cone(0.5, g.center).fits_in(g, 1.0)
        assert not Cone(0.6, g.center).fits_in(g, 1.0)
        assert not Cone(0.25, (4.6, 4.0)).fits_in(g, 1.0)

    def test_admissible_cones_fit(self):
        g = TorusGrid(3, 8.0, 16)
        cones = admissible_cones(g, 2.0, 20, seed=1)
        assert len(cones) == 20 and all(c.fits_in(g, 2.0) for c in cones)


class TestLocalEnergy:
    def test_zero_state(self, free16):
        op, _ = free16
        z = np.zeros(op.grid.shape)
        assert local_energy(WaveState(z, z), op, Cone(0.5, op.grid.center), 0.0, 1.0) == 0.0

    def test_constant_velocity(self, free16):
        op, _ = free16
        g = op.grid
        cone = Cone(0.5, g.center)
        s = WaveState(np.zeros(g.shape), np.full(g.shape, 2.0))
        expected = 0.5 * 4.0 * integrate(bump_field(cone, 0.0, g), g)
        assert local_energy(s, op, cone, 0.0, 1.0) == pytest.approx(expected)

    def test_constant_field_uses_C(self, free16):
        op, _ = free16
        g = op.grid
        cone = Cone(0.5, g.center)
        s = WaveState(np.ones(g.shape), np.zeros(g.shape))
        assert local_energy(s, op, cone, 0.0, 3.0) == pytest.approx(1.5 * integrate(bump_field(cone, 0.0, g), g))

    def test_free_local_constant_is_one(self, free16):
        op, _ = free16
        assert calibrate_local_constant(op, [Cone(0.5, op.grid.center)], n_samples=10) == 1.0

    def test_gronwall_check_needs_states_in_range(self, free16):
        op, cfg = free16
        z = np.zeros(op.grid.shape)
        with pytest.raises(ValueError):
            gronwall_local_check([WaveState(z, z, 1.0)], op, Cone(0.5, op.grid.center), 1.0, cfg)


class TestConeAgreement:
    def test_equal_radii_give_identical_runs(self, noisy_op, noisy_config):
        g = noisy_op.grid
        data = _data(g, 1.0)
        cones = [Cone(0.25, g.center)]
        rep = cone_agreement(data, data, noisy_op, noisy_config, 2.0, 2.0, cones, cfl=0.2)
        assert rep.sup_difference == 0.0 and rep.passed

    def test_free_case_radii_do_not_matter(self, free16):
        op, cfg = free16
        g = op.grid
        data = _data(g, 1.0)
        rep = cone_agreement(data, data, op, cfg, 3.0, 1.0, [Cone(0.25, g.center)], cfl=0.2)
        assert rep.sup_difference == 0.0 and rep.outside_difference == 0.0

    def test_preconditions(self, free16):
        op, cfg = free16
        g = op.grid
        data = _data(g, 1.0)
        cone = Cone(0.25, g.center)
        with pytest.raises(ValueError, match="R >= L"):
            cone_agreement(data, data, op, cfg, 1.0, 2.0, [cone])
        other = (data[0] + 1.0, data[1])
        with pytest.raises(ValueError, match="differ"):
            cone_agreement(other, data, op, cfg, 2.0, 1.0, [cone])
        with pytest.raises(ValueError, match="leaves"):
            cone_agreement(data, data, op, cfg, 2.0, 1.0, [Cone(0.5, (4.5, 4.0))])


class TestClassicalSpeed:
    def test_outside_mass_fraction(self):
        g = TorusGrid(2, 8.0, 32)
        u = (g.distance(g.center) <= 1.0).astype(float)
        assert outside_mass_fraction(u, g, g.center, 1.0) == 0.0
        assert outside_mass_fraction(np.zeros(g.shape), g, g.center, 1.0) == 0.0

    def test_compact_bump_support(self):
        g = TorusGrid(2, 8.0, 64)
        b = compact_bump(g, g.center, 1.0)
        assert np.all(b[g.distance(g.center) >= 1.0] == 0.0) and b.max() == 1.0

    def test_free_wave_stays_in_light_cone(self):
        g = TorusGrid(2, 16.0, 128)
        op = build_Z(build_lift(zero_noise(g), Mollifier(0.5)), LocalizationSchedule(g))
        cfg = TruncationConfig(g, 2.0, C_gg=1.0)
        u0 = compact_bump(g, g.center, 1.0)
        _, fr = classical_speed_run(g, op, cfg, u0, g.center, 1.0, 2.0, stride=20)
        assert max(fr) < 1e-6
