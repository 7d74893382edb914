"""Periodic grid and Fourier machinery.

Every field lives on the torus ``(M T)^d`` sampled at ``n`` points per side.
Fields are plain real ``ndarray`` of shape ``(n,) * d``; spectral coefficients
are complex arrays of the same shape in ``numpy.fft`` ordering.

Normalization
-------------
``forward_transform`` returns Fourier *series* coefficients::

    c(k) = n^{-d} sum_x f(x) exp(-i k.x),      f(x) = sum_k c(k) exp(i k.x)

so that Parseval reads ``sum |f|^2 h^d = M^d sum |c|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

EXP_OVERFLOW = 700.0


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the torus of side ``M`` in ``d`` dimensions."""

    d: int
    M: float
    n: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"points per side must be even and >= 8, got {self.n}")
        if not self.M > 0:
            raise ValueError(f"side length must be positive, got {self.M}")

    @property
    def h(self) -> float:
        return self.M / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def volume(self) -> float:
        return self.M**self.d

    @cached_property
    def k1(self) -> np.ndarray:
        """One-dimensional angular wavenumbers ``2 pi k / M``."""
        return 2 * np.pi * sfft.fftfreq(self.n, d=1.0 / self.n) / self.M

    @cached_property
    def kvec(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavenumber components (full, Nyquist included)."""
        out = []
        for j in range(self.d):
            shape = [1] * self.d
            shape[j] = self.n
            out.append(self.k1.reshape(shape))
        return tuple(out)

    @cached_property
    def kderiv(self) -> tuple[np.ndarray, ...]:
        # Nyquist entry zeroed so first derivatives map real fields to real
        # fields and stay skew-adjoint.
        k = self.k1.copy()
        k[self.n // 2] = 0.0
        out = []
        for j in range(self.d):
            shape = [1] * self.d
            shape[j] = self.n
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        """``|k|^2`` on the full frequency set."""
        return sum(kj**2 for kj in self.kvec) * np.ones(self.shape)

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep integer modes with ``|m_j| < n/3`` on every axis."""
        m = np.abs(sfft.fftfreq(self.n, d=1.0 / self.n))
        keep1 = m < self.n / 3
        mask = np.ones(self.shape, dtype=bool)
        for j in range(self.d):
            shape = [1] * self.d
            shape[j] = self.n
            mask = mask & keep1.reshape(shape)
        return mask

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Grid point coordinates in ``[0, M)``, broadcastable."""
        x = np.arange(self.n) * self.h
        out = []
        for j in range(self.d):
            shape = [1] * self.d
            shape[j] = self.n
            out.append(x.reshape(shape))
        return tuple(out)

    @property
    def center(self) -> tuple[float, ...]:
        return (self.M / 2,) * self.d

    def displacement(self, point=None) -> tuple[np.ndarray, ...]:
        """Minimal-image displacement ``y - point`` for every grid point ``y``."""
        if point is None:
            point = self.center
        out = []
        for xj, pj in zip(self.coords, point):
            dj = (xj - pj + self.M / 2) % self.M - self.M / 2
            out.append(dj)
        return tuple(out)

    def distance(self, point=None) -> np.ndarray:
        """Torus distance from ``point`` (default: the torus center)."""
        disp = self.displacement(point)
        return np.sqrt(sum(dj**2 for dj in disp)) * np.ones(self.shape)

    def refine(self, factor: int = 2) -> "TorusGrid":
        return TorusGrid(self.d, self.M, self.n * factor)


@dataclass(frozen=True)
class FourierMultiplier:
    """Scalar Fourier symbol ``m(k)``; ``symbol`` maps the wavenumber tuple to values."""

    symbol: Callable[[tuple[np.ndarray, ...]], np.ndarray]
    name: str = "multiplier"

    def on(self, grid: TorusGrid) -> np.ndarray:
        values = np.broadcast_to(self.symbol(grid.kvec), grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError(f"multiplier {self.name!r} is not finite on the grid")
        return values


def _ksq(k):
    return sum(kj**2 for kj in k)


IDENTITY = FourierMultiplier(lambda k: np.ones_like(_ksq(k)), "identity")
LAPLACIAN = FourierMultiplier(lambda k: -_ksq(k), "laplacian")
HELMHOLTZ = FourierMultiplier(lambda k: 1.0 + _ksq(k), "1-laplacian")
BESSEL_POTENTIAL = FourierMultiplier(lambda k: 1.0 / (1.0 + _ksq(k)), "(1-laplacian)^-1")


def _check_finite(f):
    if not np.all(np.isfinite(f)):
        raise ValueError("field contains non-finite values")


def forward_transform(f: np.ndarray) -> np.ndarray:
    """Fourier series coefficients of a real field (see module docstring)."""
    f = np.asarray(f, dtype=float)
    _check_finite(f)
    return sfft.fftn(f) / f.size


def inverse_transform(c: np.ndarray) -> np.ndarray:
    """Real field from coefficients; the imaginary round-off is dropped."""
    return sfft.ifftn(c * c.size).real


def apply_multiplier(c: np.ndarray, m: FourierMultiplier | np.ndarray, grid: TorusGrid) -> np.ndarray:
    values = m.on(grid) if isinstance(m, FourierMultiplier) else np.asarray(m)
    return values * c


def filter_field(f: np.ndarray, m: FourierMultiplier | np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Apply a multiplier to a real field in one go."""
    return inverse_transform(apply_multiplier(forward_transform(f), m, grid))


def helmholtz_inverse(f, grid):
    return filter_field(f, 1.0 / (1.0 + grid.k2), grid)


def helmholtz(f, grid):
    return filter_field(f, 1.0 + grid.k2, grid)


def laplacian(f, grid):
    return filter_field(f, -grid.k2, grid)


def gradient(f: np.ndarray, grid: TorusGrid) -> tuple[np.ndarray, ...]:
    """Spectral gradient; component ``j`` has symbol ``i k_j`` (Nyquist dropped)."""
    c = forward_transform(f)
    return tuple(inverse_transform(1j * kj * c) for kj in grid.kderiv)


def divergence(fs, grid: TorusGrid) -> np.ndarray:
    """Spectral divergence, the negative adjoint of :func:`gradient`."""
    acc = 0
    for fj, kj in zip(fs, grid.kderiv):
        acc = acc + 1j * kj * forward_transform(fj)
    return inverse_transform(acc)


def dot(a, b) -> np.ndarray:
    return sum(aj * bj for aj, bj in zip(a, b))


def dealias(f: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """2/3-rule truncation."""
    return filter_field(f, grid.dealias_mask, grid)


def product(f, g, grid: TorusGrid | None = None, dealiased: bool = False) -> np.ndarray:
    """Pointwise product, optionally with 2/3-rule truncation of factors and result."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
    if not dealiased:
        return f * g
    return dealias(dealias(f, grid) * dealias(g, grid), grid)


def grad_dot(a, b, grid: TorusGrid, dealiased: bool = True) -> np.ndarray:
    """``sum_j a_j b_j`` for two vector fields, dealiased per component."""
    return sum(product(aj, bj, grid, dealiased) for aj, bj in zip(a, b))


def pointwise(f, g=None, op: str = "product", *, exponent: float = 2.0,
              grid: TorusGrid | None = None, dealiased: bool = False) -> np.ndarray:
    """Pointwise ``product`` / ``exp`` / ``power`` of real fields.

    ``exp`` refuses inputs with ``|f| > 700`` rather than returning ``inf``.
    """
    f = np.asarray(f, dtype=float)
    if op == "product":
        return product(f, g, grid, dealiased)
    if op == "exp":
        big = np.max(np.abs(f)) if f.size else 0.0
        if big > EXP_OVERFLOW:
            raise OverflowError(f"exp argument reaches {big:.3g} > {EXP_OVERFLOW}")
        return np.exp(f)
    if op == "power":
        return f**exponent
    raise ValueError(f"unknown pointwise op {op!r}")


def integrate(f: np.ndarray, grid: TorusGrid) -> float:
    """Rectangle-rule integral, spectrally accurate for smooth periodic ``f``."""
    return float(np.sum(f) * grid.cell_volume)


def inner(f, g, grid: TorusGrid) -> float:
    return float(np.vdot(f, g).real * grid.cell_volume)


def parseval_sum(c: np.ndarray, grid: TorusGrid) -> float:
    """``M^d sum |c|^2``, equal to ``integrate(f**2)``."""
    return float(np.sum(np.abs(c) ** 2) * grid.volume)


def resample(f: np.ndarray, src: TorusGrid, dst: TorusGrid) -> np.ndarray:
    """Spectral restriction/prolongation between grids of the same torus.

    Modes shared by both grids are copied; the destination Nyquist plane is
    left empty so the result stays real.
    """
    if src.d != dst.d or src.M != dst.M:
        raise ValueError("grids must describe the same torus")
    c = forward_transform(f)
    out = np.zeros(dst.shape, dtype=complex)
    m = min(src.n, dst.n) // 2
    idx = np.r_[0:m, -m + 1:0]
    sl = np.ix_(*([idx] * src.d))
    out[sl] = c[sl]
    return inverse_transform(out)


# ---------------------------------------------------------------- Littlewood-Paley

def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10 - 15 * x + 6 * x**2)


def lp_cutoff(r) -> np.ndarray:
    """Radial profile: 1 on ``[0, 1]``, 0 on ``[2, inf)``, quintic smoothstep between."""
    return 1.0 - _smoothstep(np.asarray(r, dtype=float) - 1.0)


def lp_symbol(kabs: np.ndarray, j: int) -> np.ndarray:
    """Symbol of the block ``Delta_j``; block ``j >= 0`` lives on ``2^(j-1) <= |k| <= 2^(j+1)``."""
    if j < -1:
        raise ValueError(f"block index must be >= -1, got {j}")
    if j == -1:
        return lp_cutoff(2.0 * kabs)
    return lp_cutoff(kabs / 2.0**j) - lp_cutoff(kabs / 2.0 ** (j - 1))


def lp_max_block(grid: TorusGrid) -> int:
    """Smallest ``J`` with ``sum_{j<=J} Delta_j = Id`` on every grid frequency."""
    kmax = float(np.max(grid.kabs))
    return max(int(np.ceil(np.log2(kmax))) if kmax > 0 else 0, 0)


def lp_block(f: np.ndarray, j: int, grid: TorusGrid) -> np.ndarray:
    return filter_field(f, lp_symbol(grid.kabs, j), grid)


def lp_blocks(f: np.ndarray, grid: TorusGrid) -> list[np.ndarray]:
    """All blocks ``Delta_{-1} f, ..., Delta_J f`` with ``J = lp_max_block(grid)``."""
    c = forward_transform(f)
    return [inverse_transform(lp_symbol(grid.kabs, j) * c) for j in range(-1, lp_max_block(grid) + 1)]
