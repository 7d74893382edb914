"""White noise, mollification, Wick constants and the stochastic lift.

Objects built from one noise sample ``xi`` (``X2`` and ``X3`` denote the
second and third order trees)::

    X   = (1 - Lap)^-1 xi_eps
    X2  = (1 - Lap)^-1 :|grad X|^2:              # :F: = F - a_eps
    X3  = 2 (1 - Lap)^-1 (grad X . grad X2)      # d = 3 only
    W   = X + X2 + X3   (d = 3),   W = X   (d = 2)

All products are 2/3-rule dealiased, and the Wick constants are the exact
expectations of the dealiased squares, so Wick-ordered fields have mean zero
exactly in expectation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import container
from .spectral import (
    TorusGrid,
    filter_field,
    gradient,
    grad_dot,
    helmholtz_inverse,
    inner,
    integrate,
)


def bump_profile(r):
    """``exp(1 - 1/(1 - r^2))`` on ``[0, 1)``, zero beyond; equals 1 at the origin."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class Mollifier:
    """Radial spectral cut-off ``eta(eps |k|)`` with compact support in ``|k| < 1/eps``."""

    eps: float
    profile: Callable[[np.ndarray], np.ndarray] = bump_profile

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"mollifier scale must be positive, got {self.eps}")

    def symbol(self, grid: TorusGrid) -> np.ndarray:
        return self.profile(self.eps * grid.kabs)


@dataclass(frozen=True)
class NoiseRealization:
    seed: int | None
    grid: TorusGrid
    xi: np.ndarray

    @property
    def d(self) -> int:
        return self.grid.d


def sample_white_noise(seed: int, grid: TorusGrid) -> NoiseRealization:
    """Discrete white noise: iid ``N(0, h^-d)`` values at the grid points.

    With this scaling ``E <xi, phi> <xi, psi> = <phi, psi>`` for the grid
    quadrature, and every Fourier series coefficient has variance ``M^-d``.
    """
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(grid.shape) / np.sqrt(grid.cell_volume)
    return NoiseRealization(seed, grid, xi)


def zero_noise(grid: TorusGrid) -> NoiseRealization:
    return NoiseRealization(None, grid, np.zeros(grid.shape))


def renorm_constant_a(mollifier: Mollifier, grid: TorusGrid, dealiased: bool = True) -> float:
    """``a_eps = E |grad X_eps(x)|^2`` as the exact mode sum.

    ``M^-d sum_k |k|^2 eta(eps|k|)^2 / (1 + |k|^2)^2`` over the represented
    modes (dealiasing mask applied when ``dealiased``). ``|k|^2`` uses the
    derivative wavenumbers so the sum matches the discrete gradient exactly.
    """
    eta = mollifier.symbol(grid)
    kd2 = sum(kj**2 for kj in grid.kderiv)
    terms = kd2 * eta**2 / (1.0 + grid.k2) ** 2
    if dealiased:
        terms = terms * grid.dealias_mask
    return float(np.sum(terms) / grid.volume)


@dataclass
class StochasticLift:
    d: int
    grid: TorusGrid
    eps: float
    seed: int | None
    xi_eps: np.ndarray
    X: np.ndarray
    wick_grad_X_sq: np.ndarray
    W: np.ndarray
    a: float
    X2: np.ndarray | None = None
    X3: np.ndarray | None = None
    wick_grad_X2_sq: np.ndarray | None = None
    cross: np.ndarray | None = None
    b: float | None = None
    grads: dict = field(default_factory=dict, repr=False)

    def named_fields(self) -> dict[str, np.ndarray]:
        names = ["xi_eps", "X", "wick_grad_X_sq", "X2", "X3", "wick_grad_X2_sq", "cross", "W"]
        return {k: getattr(self, k) for k in names if getattr(self, k) is not None}

    def to_snapshot(self) -> container.Snapshot:
        return container.Snapshot(self.d, self.grid.M, self.grid.n, self.eps, self.seed,
                                  self.named_fields())


_B_CACHE: dict = {}


def _xi_eps(noise: NoiseRealization, mollifier: Mollifier) -> np.ndarray:
    return filter_field(noise.xi, mollifier.symbol(noise.grid), noise.grid)


def _second_tree(noise, mollifier, a):
    grid = noise.grid
    xi_eps = _xi_eps(noise, mollifier)
    X = helmholtz_inverse(xi_eps, grid)
    gX = gradient(X, grid)
    wick = grad_dot(gX, gX, grid) - a
    return xi_eps, X, gX, wick


def renorm_constant_b(mollifier: Mollifier, grid: TorusGrid, n_samples: int = 200,
                      seed0: int = 10_000, sampler=sample_white_noise,
                      max_rel_se: float = 0.05) -> tuple[float, float]:
    """Monte Carlo estimate of ``b_eps = E |grad X2_eps(x)|^2`` and its standard error.

    Each seed contributes the spatial mean of ``|grad X2|^2`` (stationarity).
    Raises ``RuntimeError`` if the relative standard error exceeds ``max_rel_se``.
    """
    if grid.d != 3:
        raise ValueError("b_eps is only needed in three dimensions")
    if n_samples < 2:
        raise ValueError("need at least two samples for a standard error")
    a = renorm_constant_a(mollifier, grid)
    vals = np.empty(n_samples)
    for i in range(n_samples):
        noise = sampler(seed0 + i, grid)
        _, _, _, wick = _second_tree(noise, mollifier, a)
        X2 = helmholtz_inverse(wick, grid)
        g2 = gradient(X2, grid)
        vals[i] = integrate(grad_dot(g2, g2, grid), grid) / grid.volume
    b = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(n_samples))
    if b > 0 and se / b > max_rel_se:
        raise RuntimeError(f"b_eps Monte Carlo too noisy: SE/b = {se / b:.3f} > {max_rel_se}")
    return b, se


def cached_b(mollifier: Mollifier, grid: TorusGrid, n_samples: int = 200) -> float:
    key = (mollifier.eps, mollifier.profile, grid, n_samples)
    if key not in _B_CACHE:
        _B_CACHE[key] = renorm_constant_b(mollifier, grid, n_samples)[0]
    return _B_CACHE[key]


def build_lift(noise: NoiseRealization, mollifier: Mollifier, b: float | None = None) -> StochasticLift:
    """Assemble the lift of one noise sample.

    In three dimensions ``b`` is the Wick constant for ``|grad X2|^2``; when
    omitted it is estimated once per (mollifier, grid) with 200 seeds. A
    vanishing noise gets ``a = b = 0`` so that every lift object is zero.
    """
    grid = noise.grid
    null = not np.any(noise.xi)  # nothing to renormalise: the lift is identically zero
    a = 0.0 if null else renorm_constant_a(mollifier, grid)
    xi_eps, X, gX, wick = _second_tree(noise, mollifier, a)
    if grid.d == 2:
        return StochasticLift(2, grid, mollifier.eps, noise.seed, xi_eps, X, wick, X.copy(), a,
                              grads={"X": gX})
    if null:
        b = 0.0
    elif b is None:
        b = cached_b(mollifier, grid)
    X2 = helmholtz_inverse(wick, grid)
    gX2 = gradient(X2, grid)
    X3 = 2.0 * helmholtz_inverse(grad_dot(gX, gX2, grid), grid)
    gX3 = gradient(X3, grid)
    wick2 = grad_dot(gX2, gX2, grid) - b
    cross = grad_dot(gX, gX3, grid)
    W = X + X2 + X3
    return StochasticLift(3, grid, mollifier.eps, noise.seed, xi_eps, X, wick, W, a,
                          X2=X2, X3=X3, wick_grad_X2_sq=wick2, cross=cross, b=b,
                          grads={"X": gX, "X2": gX2, "X3": gX3})


def gaussian_bump(grid: TorusGrid, width: float, center=None) -> np.ndarray:
    r = grid.distance(center)
    return np.exp(-0.5 * (r / width) ** 2)


@dataclass
class ConvergenceReport:
    eps: list[float]
    a: list[float]
    phi_integral: float
    raw_mean: list[float]
    raw_se: list[float]
    wick_mean: list[float]
    wick_se: list[float]
    mean_differences: list[float]
    coupled_rms_differences: list[float]
    x_l2_differences: list[float]

    def records(self) -> list[dict]:
        out = []
        for i, e in enumerate(self.eps):
            out.append({"eps": e, "a_eps": self.a[i], "a_times_int_phi": self.a[i] * self.phi_integral,
                        "raw_mean": self.raw_mean[i], "raw_se": self.raw_se[i],
                        "wick_mean": self.wick_mean[i], "wick_se": self.wick_se[i]})
        return out


def convergence_study(seeds: Sequence[int], eps_seq: Sequence[float], phi: np.ndarray,
                      grid: TorusGrid, sampler=sample_white_noise) -> ConvergenceReport:
    """Ensemble statistics of ``<|grad X_eps|^2, phi>`` with and without Wick ordering.

    The same seed drives every ``eps`` so per-seed differences between
    successive scales measure almost-sure (Cauchy) convergence.
    """
    eps_seq = list(eps_seq)
    if any(b >= a for a, b in zip(eps_seq, eps_seq[1:])):
        raise ValueError("eps sequence must be strictly decreasing")
    n_s, n_e = len(seeds), len(eps_seq)
    raw = np.zeros((n_e, n_s))
    wick = np.zeros((n_e, n_s))
    xl2 = np.zeros((max(n_e - 1, 0), n_s))
    a_vals = []
    mollifiers = [Mollifier(e) for e in eps_seq]
    for m in mollifiers:
        a_vals.append(renorm_constant_a(m, grid))
    for j, seed in enumerate(seeds):
        noise = sampler(seed, grid)
        prev_X = None
        for i, m in enumerate(mollifiers):
            _, X, gX, w = _second_tree(noise, m, a_vals[i])
            wick[i, j] = inner(w, phi, grid)
            raw[i, j] = inner(grad_dot(gX, gX, grid), phi, grid)
            if prev_X is not None:
                xl2[i - 1, j] = np.sqrt(integrate((X - prev_X) ** 2, grid))
            prev_X = X

    def se(x):
        return float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0

    wm = wick.mean(axis=1)
    return ConvergenceReport(
        eps=eps_seq,
        a=a_vals,
        phi_integral=integrate(phi, grid),
        raw_mean=list(raw.mean(axis=1)),
        raw_se=[se(r) for r in raw],
        wick_mean=list(wm),
        wick_se=[se(w) for w in wick],
        mean_differences=list(np.abs(np.diff(wm))),
        coupled_rms_differences=list(np.sqrt(np.mean(np.diff(wick, axis=0) ** 2, axis=1))),
        x_l2_differences=list(xl2.mean(axis=1)) if n_e > 1 else [],
    )
