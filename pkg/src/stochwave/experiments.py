"""One pipeline per experiment kind, shared by the CLI and the acceptance suite.

Each pipeline takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult`: named pass/fail checks, report lines, CSV tables
and binary snapshots. Nothing here touches the filesystem except reading
optional initial data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import container
from .besov import (
    LIFT_TARGETS,
    indicator_regularity_check,
    interpolation_check,
    lift_regularity_report,
    nested_noise,
)
from .config import ExperimentConfig
from .dynamics import (
    EvolveConfig,
    WaveState,
    duhamel_oracle,
    energy_Egg,
    energy_ER,
    evolve,
    free_propagator,
    gronwall_check,
    weighted_l2,
)
from .hamiltonian import (
    TruncationConfig,
    build_Z,
    calibrate_C_gg,
    coercivity_margins,
    form_bounds_check,
    mass,
    random_test_fields,
)
from .localization import LocalizationSchedule
from .noise import Mollifier, build_lift, convergence_study, gaussian_bump, sample_white_noise, zero_noise
from .propagation import (
    Cone,
    admissible_cones,
    calibrate_local_constant,
    classical_speed_run,
    compact_bump,
    cone_agreement,
    gronwall_local_check,
)
from .spectral import TorusGrid, integrate


@dataclass
class ExperimentResult:
    name: str
    kind: str
    checks: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    blobs: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def check(self, name: str, ok, detail: str = "") -> None:
        self.checks[name] = bool(ok)
        self.lines.append(f"check {name}: {'pass' if ok else 'FAIL'}" + (f" ({detail})" if detail else ""))


def _tol(cfg: ExperimentConfig, default: float) -> float:
    return default if math.isnan(cfg.tol) else cfg.tol


def grid_of(cfg: ExperimentConfig) -> TorusGrid:
    return TorusGrid(cfg.d, cfg.M, cfg.n)


def lift_of(cfg: ExperimentConfig, grid: TorusGrid | None = None):
    grid = grid or grid_of(cfg)
    noise = zero_noise(grid) if cfg.noise == "zero" else sample_white_noise(cfg.seed, grid)
    return build_lift(noise, Mollifier(cfg.eps))


def operator_of(cfg: ExperimentConfig, lift=None):
    lift = lift if lift is not None else lift_of(cfg)
    return build_Z(lift, LocalizationSchedule(lift.grid, L=cfg.L_base))


def truncation_of(cfg: ExperimentConfig, op, R: float | None = None) -> TruncationConfig:
    C = calibrate_C_gg(op, seed=cfg.seed)
    return TruncationConfig(op.grid, cfg.R if R is None else R, C_gg=C, taper=cfg.taper)


def initial_data(cfg: ExperimentConfig, grid: TorusGrid):
    """``(u0, u1)`` and the ``L``-truncation pair (equal unless the file provides ``*_L``)."""
    if cfg.data:
        snap = container.load(cfg.data)
        u0, u1 = snap.fields["u0"], snap.fields["u1"]
        return (u0, u1), (snap.fields.get("u0_L", u0), snap.fields.get("u1_L", u1))
    u0 = gaussian_bump(grid, cfg.data_width)
    pair = (u0, np.zeros(grid.shape))
    return pair, pair


def _evolve_cfg(cfg, grid, cfl=None, **kw) -> EvolveConfig:
    if cfg.dt and cfl is None:
        return EvolveConfig(cfg.dt, cfg.T, stride=cfg.stride, **kw)
    return EvolveConfig.from_cfl(grid, cfl or cfg.cfl, cfg.T, stride=cfg.stride, **kw)


# ------------------------------------------------------------------- lift kind

def run_lift(cfg: ExperimentConfig) -> ExperimentResult:
    return {"snapshot": _lift_snapshot, "coercivity": _coercivity,
            "form-bounds": _form_bounds}[cfg.check](cfg)


def _lift_snapshot(cfg):
    res = ExperimentResult(cfg.name, cfg.kind)
    lift = lift_of(cfg)
    snap = lift.to_snapshot()
    res.blobs["lift.swfc"] = container.to_bytes(snap)
    for name, f in lift.named_fields().items():
        res.lines.append(f"field {name} min={f.min():.6e} max={f.max():.6e} mean={f.mean():.6e}")
    res.lines.append(f"a_eps={lift.a:.10e}" + (f" b_eps={lift.b:.10e}" if lift.b is not None else ""))
    res.check("finite", all(np.all(np.isfinite(f)) for f in snap.fields.values()))
    return res


def _coercivity(cfg):
    res = ExperimentResult(cfg.name, cfg.kind)
    op = operator_of(cfg)
    config = truncation_of(cfg, op)
    res.lines.append(f"C_gg={config.C_gg:.12g}")
    if cfg.noise == "zero":
        res.check("zero_noise_C_gg_is_1", config.C_gg == 1.0, f"C_gg = {config.C_gg!r}")
        return res
    vs = random_test_fields(op.grid, cfg.n_samples, seed=cfg.seed + 10_000)
    margins = coercivity_margins(op, config, vs)
    masses = np.array([mass(v, op) for v in vs])
    bad = int(np.sum(margins < -1e-10 * masses))
    res.lines.append(f"min margin / mass = {np.min(margins / masses):.6e} over {len(vs)} fields")
    res.check("coercive", bad == 0, f"{bad} violations")
    return res


def _form_bounds(cfg):
    res = ExperimentResult(cfg.name, cfg.kind)
    op = operator_of(cfg)
    config = truncation_of(cfg, op)
    vs = random_test_fields(op.grid, cfg.n_samples, seed=cfg.seed + 20_000)
    radii = [float(r) for r in (cfg.radii or (2.0, 4.0, 8.0))]
    rep = form_bounds_check(op, config, vs, radii)
    for R, c, cs in zip(rep.radii, rep.C_R, rep.sample_C_R):
        res.lines.append(f"R={R:g} C(R)={c:.6e} sample_C(R)={cs:.6e}")
    res.lines.append(f"C_gg={rep.C_gg:.6e} norm_equivalence={rep.norm_equivalence:.6e}")
    res.check("no_violations", rep.violations == 0, f"{rep.violations} violations")
    res.check("C_R_nondecreasing", rep.nondecreasing)
    return res


# ----------------------------------------------------------------- renormalisation

def run_renorm_study(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.name, cfg.kind)
    grid = grid_of(cfg)
    eps = list(cfg.eps_list or (2**-3, 2**-4, 2**-5, 2**-6))
    phi = gaussian_bump(grid, cfg.M / 8)
    seeds = list(range(cfg.seed, cfg.seed + cfg.n_seeds))
    rep = convergence_study(seeds, eps, phi, grid)
    rows = ["eps,a_eps,a_times_int_phi,raw_mean,raw_se,wick_mean,wick_se"]
    for r in rep.records():
        rows.append(",".join(repr(float(r[k])) for k in
                             ("eps", "a_eps", "a_times_int_phi", "raw_mean", "raw_se", "wick_mean", "wick_se")))
    res.tables["renorm.csv"] = "\n".join(rows) + "\n"
    rel = [abs(m - a * rep.phi_integral) / (a * rep.phi_integral) for m, a in zip(rep.raw_mean, rep.a)]
    zscores = [abs(m) / se for m, se in zip(rep.wick_mean, rep.wick_se)]
    cauchy = rep.coupled_rms_differences
    res.lines += [f"eps={e:g} raw_rel_dev={r:.4f} wick_mean={m:.4e} wick_z={z:.3f}"
                  for e, r, m, z in zip(eps, rel, rep.wick_mean, zscores)]
    res.lines.append("coupled_rms_differences=" + ",".join(f"{c:.4e}" for c in cauchy))
    res.check("raw_tracks_a_eps", max(rel) <= 0.10, f"max relative deviation {max(rel):.4f}")
    res.check("wick_mean_stable", max(zscores) <= 3.0, f"max |mean|/SE {max(zscores):.3f}")
    res.check("cauchy_decreasing", all(b < a for a, b in zip(cauchy, cauchy[1:])))
    return res


# --------------------------------------------------------------------- dynamics

def _identity_error(state, op, config, cubic) -> float:
    lhs = energy_Egg(state, op, config, cubic, check=False) - energy_ER(state, op, config, cubic)
    rhs = 0.5 * integrate(op.exp2W * config.xi_low(op) * state.v**2, op.grid)
    return abs(lhs - rhs) / max(abs(energy_ER(state, op, config, cubic)), abs(rhs), 1e-300)


def run_evolve(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.name, cfg.kind)
    op = operator_of(cfg)
    config = truncation_of(cfg, op)
    (u0, u1), _ = initial_data(cfg, op.grid)
    s0 = WaveState.from_physical(u0, u1, op)
    runs = []
    for cfl in (cfg.cfl, cfg.cfl / 2):
        ecfg = EvolveConfig.from_cfl(op.grid, cfl, cfg.T, cubic=cfg.cubic,
                                     stride=cfg.stride * (1 if cfl == cfg.cfl else 2))
        runs.append(evolve(s0, op, config, ecfg))
    drift = [r.trace.relative_drift() for r in runs]
    ratio = drift[0] / drift[1] if drift[1] > 0 else math.inf
    res.tables["energy.csv"] = runs[0].trace.to_csv()
    res.tables["energy_half_dt.csv"] = runs[1].trace.to_csv()
    res.lines.append(f"C_gg={config.C_gg:.10g} drift(cfl={cfg.cfl:g})={drift[0]:.6e} "
                     f"drift(cfl={cfg.cfl / 2:g})={drift[1]:.6e} ratio={ratio:.4f}")
    ident = _identity_error(runs[0].state, op, config, cfg.cubic)
    res.check("drift", drift[0] <= _tol(cfg, 1e-3), f"{drift[0]:.3e}")
    res.check("second_order", abs(ratio - 4.0) <= 0.3 * 4.0, f"ratio {ratio:.3f}")
    res.check("energy_identity", ident <= 1e-8, f"{ident:.2e}")
    return res


def run_gronwall(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.name, cfg.kind)
    op = operator_of(cfg)
    config = truncation_of(cfg, op)
    (u0, u1), _ = initial_data(cfg, op.grid)
    run = evolve(WaveState.from_physical(u0, u1, op), op, config,
                 _evolve_cfg(cfg, op.grid, cubic=cfg.cubic))
    rep = gronwall_check(run.trace, op, config)
    res.tables["energy.csv"] = run.trace.to_csv()
    res.lines.append(f"C_fit={rep.C_fit:.6e} scale={rep.scale:.6e} factor={rep.factor:g} "
                     f"min_E_gg={rep.min_E_gg:.6e} C_gg={config.C_gg:.10g}")
    res.check("E_gg_nonnegative", rep.min_E_gg >= -1e-8, f"{rep.min_E_gg:.3e}")
    res.check("gronwall_bound", rep.bound_holds)
    res.check("C_fit_within_scale", rep.C_fit <= rep.factor * rep.scale)
    return res


def run_oracle(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.name, cfg.kind)
    op = operator_of(cfg)
    config = truncation_of(cfg, op)
    (u0, u1), _ = initial_data(cfg, op.grid)
    if cfg.noise == "zero":
        # exercise the sinc propagator as well
        s0 = WaveState.from_physical(u0, u1 + 0.5 * np.roll(u0, op.grid.n // 4, axis=0), op)
        oracle = duhamel_oracle(s0, op, config, cfg.T, cubic=False)
        exact = free_propagator(s0, op.grid, cfg.T)
        err = max(weighted_l2(oracle.state.v - exact.v, op), weighted_l2(oracle.state.p - exact.p, op))
        res.lines.append(f"oracle vs closed form: {err:.3e}")
        res.check("free_propagator", err <= _tol(cfg, 1e-8), f"{err:.3e}")
        return res
    s0 = WaveState.from_physical(u0, u1, op)
    run = evolve(s0, op, config, _evolve_cfg(cfg, op.grid, cubic=cfg.cubic))
    oracle = duhamel_oracle(s0, op, config, cfg.T, cubic=cfg.cubic)
    err = weighted_l2(run.state.v - oracle.state.v, op)
    res.lines.append(f"C_gg={config.C_gg:.10g} leapfrog vs oracle: {err:.3e} "
                     f"(norm {weighted_l2(oracle.state.v, op):.4e}, segments {oracle.segments}, "
                     f"picard iterations {oracle.iterations})")
    res.check("oracle_agreement", err <= _tol(cfg, 1e-4), f"{err:.3e}")
    return res


# ------------------------------------------------------------------ propagation

def run_cone(cfg: ExperimentConfig) -> ExperimentResult:
    return {"agreement": _cone_agreement, "classical": _classical,
            "local-gronwall": _local_gronwall}[cfg.check](cfg)


def _cone_agreement(cfg):
    res = ExperimentResult(cfg.name, cfg.kind)
    op = operator_of(cfg)
    config = truncation_of(cfg, op, R=cfg.L)
    data_R, data_L = initial_data(cfg, op.grid)
    cones = admissible_cones(op.grid, cfg.L, cfg.n_apexes, seed=cfg.seed)
    C_local = calibrate_local_constant(op, cones, n_samples=cfg.n_samples, seed=cfg.seed)
    rep = cone_agreement(data_R, data_L, op, config, cfg.R, cfg.L, cones, cubic=cfg.cubic,
                         cfl=cfg.cfl, rtol=_tol(cfg, 1e-6), C_local=C_local, stride=cfg.stride)
    res.lines += rep.records()
    res.check("cone_agreement", rep.agrees, f"{rep.sup_difference:.3e} <= {rep.tol:.3e}")
    res.check("test_power", rep.has_power, f"{rep.outside_difference:.3e} > {10 * rep.tol:.3e}")
    return res


def _classical(cfg):
    res = ExperimentResult(cfg.name, cfg.kind)
    grid = grid_of(cfg)
    op = operator_of(cfg, build_lift(zero_noise(grid), Mollifier(cfg.eps)))
    config = TruncationConfig(grid, cfg.R, C_gg=1.0)
    r0 = cfg.M / 16
    u0 = compact_bump(grid, grid.center, r0)
    times, fr = classical_speed_run(grid, op, config, u0, grid.center, r0, cfg.T, cfl=cfg.cfl,
                                    stride=cfg.stride)
    rows = ["t,outside_fraction"] + [f"{t!r},{f!r}" for t, f in zip(times, fr)]
    res.tables["outside_mass.csv"] = "\n".join(rows) + "\n"
    res.lines.append(f"max outside fraction {max(fr):.3e} at t={times[int(np.argmax(fr))]:.4g}")
    res.check("classical_speed", max(fr) <= _tol(cfg, 1e-8), f"{max(fr):.3e}")
    return res


def _local_gronwall(cfg):
    res = ExperimentResult(cfg.name, cfg.kind)
    op = operator_of(cfg)
    grid = op.grid
    if cfg.noise == "zero":
        config = TruncationConfig(grid, cfg.R, C_gg=1.0)
        cone = Cone(cfg.T, grid.center)
        offset = np.zeros(grid.d)
        offset[0] = cone.c * cone.t + 1.0 + 1.0 + 1.5  # bump support + data radius + margin
        u0 = compact_bump(grid, tuple(np.asarray(grid.center) + offset), 1.0)
        run = evolve(WaveState(u0, np.zeros(grid.shape)), op, config,
                     EvolveConfig.from_cfl(grid, cfg.cfl, cone.t, cubic=False, stride=cfg.stride,
                                           record_states=True))
        tr = gronwall_local_check(run.states, op, cone, 1.0, config)
        res.lines.append(tr.record())
        res.check("outside_data_zero_energy", max(tr.e) <= _tol(cfg, 1e-10), f"max e {max(tr.e):.3e}")
        return res
    config = truncation_of(cfg, op)
    cones = admissible_cones(grid, 2 * cfg.T, cfg.n_apexes, seed=cfg.seed)
    C = calibrate_local_constant(op, cones, n_samples=200, seed=cfg.seed)
    (u0, u1), _ = initial_data(cfg, grid)
    T = max(c.t for c in cones)
    res.lines.append(f"C_local={C:.6g} C_gg={config.C_gg:.10g}")
    ok_all = True
    for cubic in (False, True):
        run = evolve(WaveState.from_physical(u0, u1, op), op, config,
                     EvolveConfig.from_cfl(grid, cfg.cfl, T, cubic=cubic, stride=cfg.stride,
                                           record_states=True))
        for cone in cones:
            tr = gronwall_local_check(run.states, op, cone, C, config)
            res.lines.append(("cubic " if cubic else "linear ") + tr.record())
            ok_all &= tr.passed
    res.check("local_gronwall", ok_all)
    return res


# ------------------------------------------------------------------------ besov

def run_besov(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg.name, cfg.kind)
    resolutions = [int(r) for r in (cfg.resolutions or (64, 128, 256))]
    ind = indicator_regularity_check(cfg.M / 8, cfg.d, cfg.M, resolutions)
    res.lines += ind.records()
    for p in ind.critical:
        ratio = ind.stability_ratio(p)
        growth = ind.growth_factors(p)
        res.check(f"indicator_stable_p{p:g}", ratio <= 2.0, f"ratio {ratio:.4f}")
        res.check(f"indicator_supercritical_grows_p{p:g}", min(growth) > 1.0,
                  "growth " + ",".join(f"{g:.4f}" for g in growth))
    grid = grid_of(cfg)
    fields = random_test_fields(grid, cfg.n_samples, seed=cfg.seed)
    interp = interpolation_check(fields, 0.0, 1.0, 0.5, 2.0, grid)
    res.lines.append(f"interpolation max ratio {max(interp.ratios):.4f} (constant {interp.constant:g})")
    res.check("interpolation", interp.passed, f"{interp.violations} violations")
    lift_res = [int(r) for r in (cfg.lift_resolutions or (128, 256, 512))]
    grids = [TorusGrid(cfg.d, cfg.M, n) for n in lift_res]
    lifts = {}
    for seed in range(cfg.seed, cfg.seed + cfg.n_seeds):
        lifts[seed] = [build_lift(nz, Mollifier(cfg.eps)) for nz in nested_noise(seed, grids)]
    rep = lift_regularity_report(lifts, lift_res)
    res.lines += rep.lines()
    for name in LIFT_TARGETS[cfg.d]:
        sub, sup = rep.votes(name)
        res.check(f"lift_trend_{name}", rep.passed(name), f"stable {sub:.2f}, growing {sup:.2f}")
    return res


PIPELINES = {
    "lift": run_lift,
    "renorm-study": run_renorm_study,
    "evolve": run_evolve,
    "gronwall": run_gronwall,
    "oracle-compare": run_oracle,
    "cone": run_cone,
    "besov-report": run_besov,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return PIPELINES[cfg.kind](cfg)
