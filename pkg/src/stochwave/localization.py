"""High/low frequency localisation ``U_>`` / ``U_<=``.

``U_> f = sum_k w_k Delta_{>L_k} f`` where ``(w_k)`` is a smooth radial
partition of unity around the torus center (a core disc plus dyadic annuli,
the last shell absorbing everything beyond) and ``L_k = L + k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .spectral import (
    TorusGrid,
    forward_transform,
    helmholtz,
    helmholtz_inverse,
    inverse_transform,
    lp_cutoff,
)


@dataclass(frozen=True)
class LocalizationSchedule:
    """Weight shells and frequency cut-offs.

    Parameters
    ----------
    grid : TorusGrid
    L : float
        Base level; shell ``k`` cuts at frequency ``2**(L + k)``.
    core_radius : float
        Radius of the innermost shell.
    n_shells : int, optional
        Defaults to the largest count whose last transition still fits inside
        ``|x| <= M/2`` (so the weights are constant near the cut locus).
    smooth : bool
        Use a smooth frequency cut-off instead of the sharp indicator.
    """

    grid: TorusGrid
    L: float = 1.0
    core_radius: float = 1.0
    n_shells: int | None = None
    smooth: bool = False

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"base level must be positive, got {self.L}")
        if not 0 < self.core_radius < self.grid.M / 2:
            raise ValueError("core radius must lie inside the torus")

    @cached_property
    def shells(self) -> int:
        if self.n_shells is not None:
            return max(int(self.n_shells), 1)
        k = int(np.floor(np.log2(self.grid.M / 2 / self.core_radius)))
        return max(k, 0) + 1

    @cached_property
    def cutoffs(self) -> tuple[float, ...]:
        """Cut-off levels ``L_k = L + k``."""
        return tuple(self.L + k for k in range(self.shells))

    @cached_property
    def weights(self) -> tuple[np.ndarray, ...]:
        r = self.grid.distance()
        K = self.shells
        if K == 1:
            return (np.ones(self.grid.shape),)
        rho = [lp_cutoff(r / (self.core_radius * 2.0**k)) for k in range(K - 1)]
        out = [rho[0]]
        for k in range(1, K - 1):
            out.append(rho[k] - rho[k - 1])
        out.append(1.0 - rho[K - 2])
        return tuple(out)

    def high_symbol(self, level: float) -> np.ndarray:
        kabs = self.grid.kabs
        if self.smooth:
            return 1.0 - lp_cutoff(kabs / 2.0 ** (level - 1))
        return (kabs > 2.0**level).astype(float)

    def to_dict(self) -> dict:
        return {"L": self.L, "core_radius": self.core_radius, "n_shells": self.shells,
                "smooth": self.smooth}


@dataclass
class SplitField:
    high: np.ndarray
    low: np.ndarray


def project_high(f, level, sched: LocalizationSchedule):
    """``Delta_{>level} f``."""
    return inverse_transform(sched.high_symbol(level) * forward_transform(f))


def split(f: np.ndarray, sched: LocalizationSchedule) -> SplitField:
    c = forward_transform(f)
    high = np.zeros(sched.grid.shape)
    low = np.zeros(sched.grid.shape)
    for w, level in zip(sched.weights, sched.cutoffs):
        m = sched.high_symbol(level)
        high += w * inverse_transform(m * c)
        low += w * inverse_transform((1.0 - m) * c)
    return SplitField(high, low)


def split_conjugated(f: np.ndarray, sched: LocalizationSchedule) -> SplitField:
    """Split for positive-regularity fields: ``(1-Lap)^-1 U ((1-Lap) f)``."""
    grid = sched.grid
    s = split(helmholtz(f, grid), sched)
    return SplitField(helmholtz_inverse(s.high, grid), helmholtz_inverse(s.low, grid))


@dataclass
class DecayReport:
    levels: list[float]
    norms: list[float]
    rate: float
    required_rate: float
    passed: bool


def decay_check(f: np.ndarray, grid: TorusGrid, levels, alpha: float, delta: float,
                core_radius: float = 1.0, n_shells: int | None = None) -> DecayReport:
    """Fit the decay of ``||U_> f||_{C^{-alpha-delta}}`` in the base level.

    The fitted rate is ``-slope`` of ``log2(norm)`` against ``L``; the check
    passes when it is at least ``delta / 2`` (or when every norm vanishes).
    """
    from .besov import holder_norm

    if not (alpha > 0 and delta > 0):
        raise ValueError("alpha and delta must be positive")
    levels = list(levels)
    norms = []
    for L in levels:
        sched = LocalizationSchedule(grid, L=L, core_radius=core_radius, n_shells=n_shells)
        norms.append(holder_norm(split(f, sched).high, -alpha - delta, grid))
    norms_arr = np.asarray(norms)
    required = 0.5 * delta
    tiny = 1e-12 * max(np.max(np.abs(f)), 1e-300)
    if np.all(norms_arr <= tiny):
        return DecayReport(levels, norms, float("inf"), required, True)
    ok = norms_arr > tiny
    slope = np.polyfit(np.asarray(levels)[ok], np.log2(norms_arr[ok]), 1)[0] if ok.sum() > 1 else -np.inf
    rate = float(-slope)
    return DecayReport(levels, norms, rate, required, rate >= required)
