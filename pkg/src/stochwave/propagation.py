"""Finite speed of propagation: Tartar's bump, local energies and cone tests.

For an apex ``(t, x)`` the bump ``phi(y, s) = psi(|y - x| - c (t - s))``
shrinks at speed ``c = 2``; the local energy

    e(s) = int phi 1/2 e^{2W_>} (p^2 + |grad v|^2 + C v^2 - v^2 Z_>)

obeys a Gronwall bound, which is what makes solutions with different
truncation radii agree inside backward cones.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import EvolveConfig, Run, WaveState, evolve
from .hamiltonian import TransformedOperator, TruncationConfig, random_test_fields
from .spectral import TorusGrid, gradient, integrate

SPEED = 2.0


def psi(r):
    """1 for ``r <= 0``, ``1 - r`` on ``[0, 1]``, 0 beyond."""
    return np.clip(1.0 - np.asarray(r, dtype=float), 0.0, 1.0)


@dataclass(frozen=True)
class Cone:
    """Backward cone ``{(s, y): 0 <= s <= t, |y - x| <= c (t - s)}``."""

    t: float
    x: tuple
    c: float = SPEED

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError(f"apex time must be nonnegative, got {self.t}")
        if not self.c > 0:
            raise ValueError("speed must be positive")

    def radius(self, s: float) -> float:
        return self.c * (self.t - s)

    def validate(self, grid: TorusGrid) -> None:
        if len(self.x) != grid.d:
            raise ValueError(f"apex point has {len(self.x)} coordinates, grid has d = {grid.d}")
        if self.c * self.t + 1.0 > grid.M / 2:
            raise ValueError(f"cone of radius {self.c * self.t:g} plus its collar exceeds half the torus")

    def inside(self, grid: TorusGrid, s: float) -> np.ndarray:
        """Grid points ``y`` with ``(s, y)`` in the cone."""
        if s > self.t:
            return np.zeros(grid.shape, dtype=bool)
        return grid.distance(self.x) <= self.radius(s)

    def fits_in(self, grid: TorusGrid, L: float) -> bool:
        """Whether the cone lies inside ``[0, L/2] x B(L)`` around the torus center."""
        off = np.linalg.norm(_offset(grid, self.x))
        return self.t <= L / 2 + 1e-12 and off + self.c * self.t <= L + 1e-12


def _offset(grid: TorusGrid, x) -> np.ndarray:
    d = np.asarray(x, dtype=float) - np.asarray(grid.center, dtype=float)
    return d - grid.M * np.round(d / grid.M)


def bump_field(cone: Cone, s: float, grid: TorusGrid) -> np.ndarray:
    if not 0 <= s <= cone.t + 1e-12:
        raise ValueError(f"bump time {s} outside [0, {cone.t}]")
    cone.validate(grid)
    return psi(grid.distance(cone.x) - cone.radius(s))


@dataclass
class BumpIdentityReport:
    max_mismatch: float
    mismatch_fraction: float
    mid_annulus_gradient: float
    band: float

    @property
    def passed(self) -> bool:
        return abs(self.mid_annulus_gradient - 1.0) <= 0.05 and self.max_mismatch <= 0.05


def bump_derivative_identity_check(cone: Cone, s: float, grid: TorusGrid, ds: float | None = None) -> BumpIdentityReport:
    """Compare ``|grad phi|``, ``|d phi/ds| / c`` and the annulus indicator.

    Both derivatives are centered finite differences (the bump is only
    Lipschitz). Points within ``2h`` of the two kink circles are excluded from
    the maximum; ``mismatch_fraction`` is the volume share where the
    derivatives disagree by more than 0.05.
    """
    h = grid.h
    ds = h / 4 if ds is None else ds
    phi = bump_field(cone, s, grid)
    diffs = [(np.roll(phi, -1, axis=j) - np.roll(phi, 1, axis=j)) / (2 * h) for j in range(grid.d)]
    grad = np.sqrt(sum(g**2 for g in diffs))
    r = grid.distance(cone.x) - cone.radius(s)
    lo, hi = max(s - ds, 0.0), min(s + ds, cone.t)
    dphi = (psi(grid.distance(cone.x) - cone.radius(hi)) - psi(grid.distance(cone.x) - cone.radius(lo))) / (hi - lo)
    time_rate = np.abs(dphi) / cone.c
    band = 2 * h + cone.c * ds
    away = (np.abs(r) > band) & (np.abs(r - 1.0) > band)
    indicator = ((r >= 0) & (r <= 1)).astype(float)
    mismatch = np.maximum(np.abs(grad - time_rate), np.abs(grad - indicator))
    mid = np.abs(r - 0.5) < h
    return BumpIdentityReport(
        max_mismatch=float(mismatch[away].max()) if away.any() else 0.0,
        mismatch_fraction=float(np.mean(mismatch > 0.05)),
        mid_annulus_gradient=float(grad[mid].mean()) if mid.any() else float("nan"),
        band=band,
    )


def _z_pairing(v, op, phi) -> float:
    return integrate(phi * op.exp2W * op.Z_gt * v**2, op.grid)


def local_energy(state: WaveState, op: TransformedOperator, cone: Cone, s: float, C: float) -> float:
    phi = bump_field(cone, s, op.grid)
    g = gradient(state.v, op.grid)
    dens = state.p**2 + sum(gj**2 for gj in g) + C * state.v**2
    return 0.5 * (integrate(phi * op.exp2W * dens, op.grid) - _z_pairing(state.v, op, phi))


def calibrate_local_constant(op: TransformedOperator, cones, n_samples: int = 200, seed: int = 0) -> float:
    """``C`` with ``int phi e^{2W}(|grad v|^2/4 + C v^2) >= |<phi e^{2W} Z_>, v^2>|``.

    The inequality is linear in ``C`` for each ``v``, so the smallest working
    value over the sample is an explicit maximum of ratios. It is doubled for
    margin and floored at 1.
    """
    grid = op.grid
    vs = random_test_fields(grid, n_samples, seed=seed, localized=True)
    need = 0.0
    for cone in cones:
        for s in (0.0, 0.5 * cone.t):
            phi = bump_field(cone, s, grid)
            for v in vs:
                m = integrate(phi * op.exp2W * v**2, grid)
                if m <= 1e-300:
                    continue
                g = gradient(v, grid)
                quarter = 0.25 * integrate(phi * op.exp2W * sum(gj**2 for gj in g), grid)
                need = max(need, (abs(_z_pairing(v, op, phi)) - quarter) / m)
    return max(1.0, 2.0 * need)


@dataclass
class LocalEnergyTrace:
    cone: Cone
    s: list[float]
    e: list[float]
    K: float
    scale: float
    atol: float = 0.0

    @property
    def nonnegative(self) -> bool:
        return min(self.e) >= -self.atol if self.e else True

    @property
    def bound_holds(self) -> bool:
        e0 = self.e[0]
        return all(e <= np.exp(self.K * s) * e0 * (1 + 1e-6) + self.atol for s, e in zip(self.s, self.e))

    @property
    def passed(self) -> bool:
        return self.nonnegative and self.bound_holds and np.isfinite(self.K)

    def record(self) -> str:
        return (f"apex t={self.cone.t:.6g} x=({', '.join(f'{c:.6g}' for c in self.cone.x)}) "
                f"speed={self.cone.c:g} e0={self.e[0]:.6e} max_e={max(self.e):.6e} "
                f"K={self.K:.6g} scale={self.scale:.6g}")


def gronwall_local_check(states, op: TransformedOperator, cone: Cone, C: float,
                         config: TruncationConfig, atol: float = 0.0) -> LocalEnergyTrace:
    """Local energies along recorded states with ``s <= t`` and their fitted growth ``K``."""
    cone.validate(op.grid)
    s_vals, e_vals = [], []
    for st in states:
        if st.t <= cone.t + 1e-12:
            s_vals.append(min(st.t, cone.t))
            e_vals.append(local_energy(st, op, cone, s_vals[-1], C))
    if not s_vals:
        raise ValueError("no recorded state inside the cone's time range")
    e0 = e_vals[0]
    K = 0.0
    for s, e in zip(s_vals, e_vals):
        if s > 0 and e0 > atol and e > 0:
            K = max(K, (np.log(e) - np.log(e0)) / s)
    scale = float(np.max(np.abs(config.chi * op.Z_le)) + C)
    return LocalEnergyTrace(cone, s_vals, e_vals, K, scale, atol)


# ---------------------------------------------------------------- cone agreement

@dataclass
class ConeReport:
    R: float
    L: float
    tol: float
    sup_difference: float
    outside_difference: float
    max_u_L: float
    traces: list[LocalEnergyTrace] = field(default_factory=list)

    @property
    def agrees(self) -> bool:
        return self.sup_difference <= self.tol

    @property
    def has_power(self) -> bool:
        return self.R == self.L or self.outside_difference > 10 * self.tol

    @property
    def passed(self) -> bool:
        return self.agrees and self.has_power

    def records(self) -> list[str]:
        head = (f"cone R={self.R:g} L={self.L:g} sup_diff={self.sup_difference:.6e} "
                f"tol={self.tol:.6e} outside_diff={self.outside_difference:.6e} "
                f"max_u_L={self.max_u_L:.6e}")
        return [head] + [tr.record() for tr in self.traces]


def cone_agreement(data_R, data_L, op: TransformedOperator, config: TruncationConfig, R: float,
                   L: float, cones, cubic: bool = True, cfl: float = 0.1, rtol: float = 1e-6,
                   C_local: float | None = None, stride: int = 5) -> ConeReport:
    """Evolve the ``R`` and ``L`` truncations on one lift and compare inside cones.

    ``data_R``/``data_L`` are physical ``(u0, u1)`` pairs that must coincide
    on ``B(2L + 1)``; every cone must lie inside ``[0, L/2] x B(L)``.
    """
    grid = op.grid
    if R < L:
        raise ValueError(f"need R >= L, got R = {R}, L = {L}")
    ball = grid.distance() <= 2 * L + 1
    for a, b in zip(data_R, data_L):
        if not np.array_equal(a[ball], b[ball]):
            raise ValueError("initial data differ on B(2L+1)")
    cones = list(cones)
    for cone in cones:
        cone.validate(grid)
        if not cone.fits_in(grid, L):
            raise ValueError(f"cone with apex t={cone.t}, x={cone.x} leaves [0, L/2] x B(L)")
    T = L / 2
    ecfg = EvolveConfig.from_cfl(grid, cfl, T, cubic=cubic, stride=stride, record_states=True)
    cfg_R, cfg_L = config.with_radius(R), config.with_radius(L)
    run_R = evolve(WaveState.from_physical(*data_R, op), op, cfg_R, ecfg)
    run_L = evolve(WaveState.from_physical(*data_L, op), op, cfg_L, ecfg)
    max_u = max(float(np.max(np.abs(op.expW * st.v))) for st in run_L.states)
    tol = rtol * max_u
    sup = 0.0
    for sR, sL in zip(run_R.states, run_L.states):
        diff = np.abs(op.expW * (sR.v - sL.v))
        for cone in cones:
            mask = cone.inside(grid, sR.t)
            if mask.any():
                sup = max(sup, float(diff[mask].max()))
    final = np.abs(op.expW * (run_R.state.v - run_L.state.v))
    outside = grid.distance() > L
    outside_diff = float(final[outside].max()) if outside.any() else 0.0
    C = C_local if C_local is not None else config.C_local
    diffs = [WaveState(a.v - b.v, a.p - b.p, a.t) for a, b in zip(run_R.states, run_L.states)]
    traces = [gronwall_local_check(diffs, op, cone, C, cfg_R, atol=1e-30) for cone in cones]
    return ConeReport(R, L, tol, sup, outside_diff, max_u, traces)


def admissible_cones(grid: TorusGrid, L: float, count: int, seed: int = 0) -> list[Cone]:
    """Random apexes with ``t <= L/2`` whose cones fit inside ``B(L)``."""
    rng = np.random.default_rng(seed)
    out = []
    center = np.asarray(grid.center, dtype=float)
    for _ in range(count):
        t = rng.uniform(0.05, 0.5) * L
        room = L - SPEED * t
        direction = rng.standard_normal(grid.d)
        direction /= np.linalg.norm(direction)
        x = center + direction * rng.uniform(0, room)
        out.append(Cone(t, tuple(x)))
    return out


def outside_mass_fraction(u: np.ndarray, grid: TorusGrid, center, radius: float) -> float:
    """``int_{|y - x0| > radius} u^2 / int u^2``."""
    total = integrate(u**2, grid)
    if total == 0:
        return 0.0
    return integrate(np.where(grid.distance(center) > radius, u**2, 0.0), grid) / total


def classical_speed_run(grid: TorusGrid, op: TransformedOperator, config: TruncationConfig,
                        u0: np.ndarray, center, r0: float, T: float, cfl: float = 0.1,
                        stride: int = 10) -> tuple[list[float], list[float]]:
    """Outside-mass fractions beyond ``r0 + s + 3h`` along a linear run."""
    ecfg = EvolveConfig.from_cfl(grid, cfl, T, cubic=False, stride=stride, record_states=True)
    run: Run = evolve(WaveState.from_physical(u0, np.zeros(grid.shape), op), op, config, ecfg)
    times, fr = [], []
    for st in run.states:
        times.append(st.t)
        fr.append(outside_mass_fraction(op.expW * st.v, grid, center, r0 + st.t + 3 * grid.h))
    return times, fr


def compact_bump(grid: TorusGrid, center, radius: float, power: float = 8.0) -> np.ndarray:
    """Smooth data supported in ``B(center, radius)``.

    A power of the mollifier profile; higher powers have a lighter spectral
    tail, which keeps the trigonometric interpolant's leakage below 1e-10.
    """
    from .noise import bump_profile

    return bump_profile(grid.distance(center) / radius) ** power
