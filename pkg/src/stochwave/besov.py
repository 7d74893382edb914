"""Discrete Besov and Hölder norms and the regularity-trend diagnostics.

Discrete norms are resolution-dependent proxies of the continuum ones, so
every regularity statement here is a *trend* under grid refinement.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import TorusGrid, lp_blocks, resample


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float = np.inf
    q: float = np.inf
    nu: float = 0.0

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("integrability and summability exponents must be >= 1")


@dataclass
class NormReport:
    params: BesovParams
    blocks: list[float]
    norm: float
    resolution: int | None = None

    def record(self) -> str:
        return (f"s={self.params.s:g} p={self.params.p:g} q={self.params.q:g} "
                f"nu={self.params.nu:g} n={self.resolution} norm={self.norm:.6e}")


def weight(grid: TorusGrid, nu: float) -> np.ndarray:
    """``<x>^nu = (1 + |x|^2)^(nu/2)`` in torus-centered coordinates."""
    if nu == 0:
        return np.ones(grid.shape)
    return (1.0 + grid.distance() ** 2) ** (nu / 2.0)


def lp_norm(f: np.ndarray, p: float, grid: TorusGrid) -> float:
    if np.isinf(p):
        return float(np.max(np.abs(f)))
    return float((np.sum(np.abs(f) ** p) * grid.cell_volume) ** (1.0 / p))


def lq_aggregate(values, q: float) -> float:
    values = np.asarray(values, dtype=float)
    if np.isinf(q):
        return float(values.max()) if values.size else 0.0
    return float(np.sum(values**q) ** (1.0 / q))


def besov_norm(f: np.ndarray, params: BesovParams, grid: TorusGrid) -> NormReport:
    """``|| (2^{js} ||Delta_j f <x>^nu||_{L^p})_j ||_{l^q}`` over the represented blocks."""
    w = weight(grid, params.nu)
    blocks = []
    for j, fj in zip(range(-1, 10_000), lp_blocks(f, grid)):
        blocks.append(2.0 ** (j * params.s) * lp_norm(fj * w, params.p, grid))
    return NormReport(params, blocks, lq_aggregate(blocks, params.q), grid.n)


def holder_norm(f: np.ndarray, s: float, grid: TorusGrid, nu: float = 0.0) -> float:
    return besov_norm(f, BesovParams(s, np.inf, np.inf, nu), grid).norm


# ------------------------------------------------------------------ diagnostics

def ball_indicator(grid: TorusGrid, radius: float, center=None) -> np.ndarray:
    return (grid.distance(center) <= radius).astype(float)


@dataclass
class IndicatorReport:
    radius: float
    resolutions: list[int]
    critical: dict = field(default_factory=dict)      # p -> norms at s = 1/p
    supercritical: dict = field(default_factory=dict)  # p -> norms at s = 1/p + excess
    excess: float = 0.2

    def stability_ratio(self, p) -> float:
        v = np.asarray(self.critical[p])
        return float(v.max() / v.min())

    def growth_factors(self, p) -> list[float]:
        v = np.asarray(self.supercritical[p])
        return list(v[1:] / v[:-1])

    def records(self) -> list[str]:
        out = []
        for p in self.critical:
            for n, c, s in zip(self.resolutions, self.critical[p], self.supercritical[p]):
                out.append(f"indicator r={self.radius:g} p={p:g} n={n} "
                           f"norm(s=1/p)={c:.6e} norm(s=1/p+{self.excess:g})={s:.6e}")
        return out


def indicator_regularity_check(radius: float, d: int, M: float, resolutions,
                               ps=(1.0, 2.0), excess: float = 0.2) -> IndicatorReport:
    """Norms of a sampled ball indicator in ``B^{1/p}_{p,inf}`` and just above, per resolution."""
    rep = IndicatorReport(radius, list(resolutions), excess=excess)
    for p in ps:
        rep.critical[p] = []
        rep.supercritical[p] = []
        for n in resolutions:
            grid = TorusGrid(d, M, n)
            if radius >= M / 2:
                raise ValueError("ball does not fit in the torus")
            chi = ball_indicator(grid, radius)
            rep.critical[p].append(besov_norm(chi, BesovParams(1.0 / p, p, np.inf), grid).norm)
            rep.supercritical[p].append(besov_norm(chi, BesovParams(1.0 / p + excess, p, np.inf), grid).norm)
    return rep


@dataclass
class InterpolationReport:
    ratios: list[float]
    constant: float

    @property
    def violations(self) -> int:
        return int(sum(r > self.constant for r in self.ratios))

    @property
    def passed(self) -> bool:
        return self.violations == 0


def interpolation_ratio(f, s1, s2, theta, p, grid: TorusGrid, q: float = np.inf) -> float:
    """``||f||_{theta s1 + (1-theta) s2} / (||f||_{s1}^theta ||f||_{s2}^(1-theta))``."""
    if not s1 < s2:
        raise ValueError("need s1 < s2")
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    mid = besov_norm(f, BesovParams(theta * s1 + (1 - theta) * s2, p, q), grid).norm
    n1 = besov_norm(f, BesovParams(s1, p, q), grid).norm
    n2 = besov_norm(f, BesovParams(s2, p, q), grid).norm
    denom = n1**theta * n2 ** (1 - theta)
    return mid / denom if denom > 0 else 0.0


def interpolation_check(fields, s1, s2, theta, p, grid: TorusGrid, q: float = np.inf,
                        constant: float = 4.0) -> InterpolationReport:
    return InterpolationReport([interpolation_ratio(f, s1, s2, theta, p, grid, q) for f in fields], constant)


def leibniz_ratio(f, g, s: float, grid: TorusGrid) -> float:
    """LHS / RHS of the fractional Leibniz bound at ``p = q = 2`` with ``p1 = p2 = 4``."""
    lhs = besov_norm(f * g, BesovParams(s, 2, 2), grid).norm
    rhs = (besov_norm(f, BesovParams(s, 4, 2), grid).norm * lp_norm(g, 4, grid)
           + lp_norm(f, 4, grid) * besov_norm(g, BesovParams(s, 4, 2), grid).norm)
    return lhs / rhs


# --------------------------------------------------------- lift regularity trends

# Regularity of each lift object (just below which it lives).
LIFT_TARGETS = {
    2: {"xi_eps": -1.0, "X": 1.0, "wick_grad_X_sq": 0.0},
    3: {"xi_eps": -1.5, "X": 0.5, "X2": 1.0, "X3": 1.5, "wick_grad_X_sq": -1.0,
        "wick_grad_X2_sq": 0.0},
}


@dataclass
class TrendRecord:
    name: str
    s: float
    target: float
    seed: int | None
    norms: list[float]

    @property
    def stable(self) -> bool:
        v = np.asarray(self.norms)
        if np.all(v == 0):
            return True
        return bool(v.max() <= 2.0 * v.min())

    @property
    def growing(self) -> bool:
        v = np.asarray(self.norms)
        return bool(np.all(v[1:] > v[:-1]))


@dataclass
class LiftRegularityReport:
    resolutions: list[int]
    records: list[TrendRecord] = field(default_factory=list)

    def votes(self, name: str) -> tuple[float, float]:
        """Fractions of seeds where sub-target is stable and super-target grows."""
        sub = [r.stable for r in self.records if r.name == name and r.s < r.target]
        sup = [r.growing for r in self.records if r.name == name and r.s > r.target]
        return float(np.mean(sub)), float(np.mean(sup))

    def passed(self, name: str) -> bool:
        sub, sup = self.votes(name)
        return sub > 0.5 and sup > 0.5

    def lines(self) -> list[str]:
        return [f"{r.name} s={r.s:+.2f} seed={r.seed} norms=" + ",".join(f"{x:.4e}" for x in r.norms)
                for r in self.records]


def lift_regularity_report(lifts_by_seed, resolutions, names=None, offset: float = 0.1) -> LiftRegularityReport:
    """Hölder norms at ``target -/+ offset`` for lifts sampled at several resolutions.

    ``lifts_by_seed`` maps a seed to the list of lifts (one per resolution,
    coarse to fine) built from the *same* underlying noise.
    """
    rep = LiftRegularityReport(list(resolutions))
    for seed, lifts in lifts_by_seed.items():
        d = lifts[0].d
        targets = LIFT_TARGETS[d]
        for name in names or targets:
            t = targets[name]
            for s in (t - offset, t + offset):
                norms = [holder_norm(getattr(lift, name), s, lift.grid) for lift in lifts]
                rep.records.append(TrendRecord(name, s, t, seed, norms))
    return rep


def nested_noise(seed: int, grids):
    """Noise on several grids of one torus sharing their common Fourier modes.

    Sampled on the finest grid and spectrally restricted to the coarser ones.
    """
    from .noise import NoiseRealization, sample_white_noise

    finest = max(grids, key=lambda g: g.n)
    fine = sample_white_noise(seed, finest)
    out = []
    for g in grids:
        xi = fine.xi if g.n == finest.n else resample(fine.xi, finest, g)
        out.append(NoiseRealization(seed, g, xi))
    return out
