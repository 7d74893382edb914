"""The transformed Anderson operators in ``v``-coordinates.

With ``u = exp(W_>) v`` the three operators act as ``H (e^{W_>} v) = e^{W_>} A v``
where, for the potential ``P`` of each variant,

    A v = e^{-2 W_>} div(e^{2 W_>} grad v) + P v
        = Lap v + 2 grad W_> . grad v + P v          (continuum identity)

    variant ">"   P = Z_>
    variant "R"   P = Z_> + chi_{B(R)} Z_<=
    variant ">>"  P = Z_> - C_>>

The divergence form is what we discretise: it makes ``A`` symmetric for the
weight ``e^{2 W_>}`` up to round-off, and every quadratic form is evaluated
integrated by parts, ``-int e^{2W}|grad v|^2 + int e^{2W} P v^2``, so ``Z``
is never differentiated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from . import container
from .localization import LocalizationSchedule, split, split_conjugated
from .noise import StochasticLift
from .spectral import (
    TorusGrid,
    divergence,
    gradient,
    grad_dot,
    integrate,
    laplacian,
    pointwise,
)

W_GT_LIMIT = 300.0
VARIANTS = ("R", ">", ">>")


@dataclass
class TransformedOperator:
    grid: TorusGrid
    lift: StochasticLift
    schedule: LocalizationSchedule
    Z: np.ndarray
    Z_gt: np.ndarray
    Z_le: np.ndarray
    W_gt: np.ndarray
    W_le: np.ndarray
    expW: np.ndarray
    exp2W: np.ndarray
    expmW: np.ndarray
    grad_W_gt: tuple

    @property
    def d(self) -> int:
        return self.grid.d

    def to_snapshot(self) -> container.Snapshot:
        snap = self.lift.to_snapshot()
        snap.fields.update({"Z": self.Z, "Z_gt": self.Z_gt, "Z_le": self.Z_le,
                            "W_gt": self.W_gt, "expW": self.expW})
        for j, g in enumerate(self.grad_W_gt):
            snap.fields[f"grad_W_gt_{j}"] = g
        return snap


def assemble_Z(lift: StochasticLift, W_le: np.ndarray) -> np.ndarray:
    """The renormalised potential ``Z`` from the lift and the low part ``W_<=``."""
    grid = lift.grid
    gW = gradient(lift.W, grid)
    gWle = gradient(W_le, grid)
    Z = (lift.W - laplacian(W_le, grid)
         - 2.0 * grad_dot(gW, gWle, grid) + grad_dot(gWle, gWle, grid))
    if lift.d == 2:
        return Z + lift.wick_grad_X_sq
    gX, gX2, gX3 = lift.grads["X"], lift.grads["X2"], lift.grads["X3"]
    return (Z + lift.wick_grad_X2_sq + grad_dot(gX3, gX3, grid)
            + 2.0 * lift.cross + 2.0 * grad_dot(gX2, gX3, grid))


def build_Z(lift: StochasticLift, schedule: LocalizationSchedule) -> TransformedOperator:
    grid = lift.grid
    ws = split_conjugated(lift.W, schedule)
    big = float(np.max(np.abs(ws.high)))
    if big > W_GT_LIMIT:
        raise OverflowError(f"max|W_>| = {big:.3g} exceeds {W_GT_LIMIT}; grid and noise scale mismatch")
    Z = assemble_Z(lift, ws.low)
    zs = split(Z, schedule)
    expW = pointwise(ws.high, op="exp")
    return TransformedOperator(
        grid=grid, lift=lift, schedule=schedule, Z=Z, Z_gt=zs.high, Z_le=zs.low,
        W_gt=ws.high, W_le=ws.low, expW=expW, exp2W=expW**2, expmW=1.0 / expW,
        grad_W_gt=gradient(ws.high, grid),
    )


@dataclass
class TruncationConfig:
    """Ball truncation and the two positivity constants.

    ``chi`` is the sharp indicator of ``B(R)`` around the torus center unless
    ``taper > 0``, in which case it stays 1 on ``B(R)`` and decays to 0 over a
    Gaussian-error-function collar of width about ``12 * taper`` outside it.
    """

    grid: TorusGrid
    R: float
    C_gg: float = 0.0
    C_local: float = 1.0
    taper: float = 0.0
    chi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"truncation radius must be positive, got {self.R}")
        if self.R > self.grid.M / 2:
            raise ValueError(f"ball B({self.R}) does not fit in a torus of side {self.grid.M}")
        if self.C_gg < 0 or self.C_local < 0:
            raise ValueError("positivity constants must be nonnegative")
        r = self.grid.distance()
        if self.taper > 0:
            from scipy.special import erfc

            self.chi = np.where(r <= self.R, 1.0,
                                0.5 * erfc((r - self.R - 6.0 * self.taper) / self.taper)
                                / (0.5 * erfc(-6.0)))
            self.chi = np.minimum(self.chi, 1.0)
        else:
            self.chi = (r <= self.R).astype(float)

    def with_radius(self, R: float) -> "TruncationConfig":
        return TruncationConfig(self.grid, R, self.C_gg, self.C_local, self.taper)

    def xi_low(self, op: TransformedOperator) -> np.ndarray:
        """``Xi^R_<= = C_>> + chi_{B(R)} Z_<=``."""
        return self.C_gg + self.chi * op.Z_le


def potential(op: TransformedOperator, config: TruncationConfig | None, variant: str) -> np.ndarray:
    if variant == ">":
        return op.Z_gt
    if config is None:
        raise ValueError(f"variant {variant!r} needs a truncation config")
    if variant == "R":
        return op.Z_gt + config.chi * op.Z_le
    if variant == ">>":
        return op.Z_gt - config.C_gg
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def weighted_laplacian(v: np.ndarray, op: TransformedOperator) -> np.ndarray:
    """``e^{-2W} div(e^{2W} grad v)``."""
    g = gradient(v, op.grid)
    return divergence([op.exp2W * gj for gj in g], op.grid) / op.exp2W


def apply_H_in_v(v, op: TransformedOperator, config: TruncationConfig | None = None,
                 variant: str = "R") -> np.ndarray:
    """The ``v``-coordinate action ``A v``; the physical action is ``e^{W_>} A v``."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("v contains non-finite values")
    return weighted_laplacian(v, op) + potential(op, config, variant) * v


def bracket_action(v, op: TransformedOperator, config=None, variant: str = "R") -> np.ndarray:
    """Non-conservative form ``Lap v + 2 grad W_> . grad v + P v`` (for comparison)."""
    g = gradient(v, op.grid)
    adv = 2.0 * sum(a * b for a, b in zip(op.grad_W_gt, g))
    return laplacian(v, op.grid) + adv + potential(op, config, variant) * v


def mass(v, op: TransformedOperator) -> float:
    """``||e^{W_>} v||^2_{L^2}``."""
    return integrate(op.exp2W * v**2, op.grid)


def quadratic_form(v, op: TransformedOperator, config: TruncationConfig | None = None,
                   variant: str = "R") -> float:
    """``(e^{W_>} v, H (e^{W_>} v))`` integrated by parts."""
    g = gradient(v, op.grid)
    grad2 = sum(gj**2 for gj in g)
    return integrate(op.exp2W * (potential(op, config, variant) * v**2 - grad2), op.grid)


def weighted_pairing(v, w, op: TransformedOperator, config=None, variant: str = "R") -> float:
    """``<e^{2W} A v, w>`` by direct quadrature."""
    return integrate(op.exp2W * apply_H_in_v(v, op, config, variant) * w, op.grid)


# ------------------------------------------------------------------ calibration

def _top_weighted(op: TransformedOperator, action, seed: int = 0, tol: float = 1e-10,
                  maxiter: int = 10_000) -> float:
    """Largest eigenvalue of a weighted-symmetric ``v``-action.

    Lanczos on the symmetrised operator ``y -> e^{W} action(e^{-W} y)``.
    """
    shape = op.grid.shape
    N = int(np.prod(shape))

    def matvec(y):
        v = op.expmW * np.asarray(y).reshape(shape)
        return (op.expW * action(v)).ravel()

    lin = LinearOperator((N, N), matvec=matvec, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(N)
    try:
        vals = eigsh(lin, k=1, which="LA", v0=v0, tol=tol, maxiter=maxiter,
                     ncv=min(N - 1, 64), return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise RuntimeError("top eigenvalue iteration did not converge") from exc
    return float(vals[0])


def top_eigenvalue(op: TransformedOperator, seed: int = 0, tol: float = 1e-10,
                   maxiter: int = 10_000) -> float:
    """Largest eigenvalue of ``A_>`` (the generalized problem ``Q v = lambda B v``)."""
    if not np.any(op.Z_gt) and not np.any(op.W_gt):
        return 0.0  # plain Laplacian: constants span the top eigenspace
    return _top_weighted(op, lambda v: apply_H_in_v(v, op, None, ">"), seed, tol, maxiter)


def calibrate_C_gg(op: TransformedOperator, seed: int = 0) -> float:
    """Positivity shift ``C_>> = max(lambda_top + 1, 2 lambda_top)``.

    ``lambda_top + 1`` gives ``-form_>>(v) >= ||e^{W} v||^2``; the second
    term keeps ``|form_>| <= -form_>>`` for ``v`` near the top eigenvector.
    """
    lam = top_eigenvalue(op, seed=seed)
    return max(lam + 1.0, 2.0 * lam)


def random_test_fields(grid: TorusGrid, count: int, seed: int = 0, localized: bool = False) -> list[np.ndarray]:
    """Random test functions: smooth Gaussian fields of random correlation length
    mixed with bumps of random width/position (``localized`` keeps only bumps)."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        if localized or i % 2:
            center = rng.uniform(0, grid.M, size=grid.d)
            width = rng.uniform(2 * grid.h, grid.M / 8)
            r = grid.distance(center)
            f = np.exp(-0.5 * (r / width) ** 2) * rng.choice([-1.0, 1.0])
            if rng.random() < 0.5:
                k = rng.normal(size=grid.d) * 2.0 / width
                phase = sum(kj * xj for kj, xj in zip(k, grid.displacement(center)))
                f = f * np.cos(phase)
        else:
            ell = rng.uniform(2 * grid.h, grid.M / 4)
            c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
            c *= np.exp(-0.5 * grid.k2 * ell**2)
            f = np.fft.ifftn(c).real
            f /= np.max(np.abs(f))
        out.append(f)
    return out


def coercivity_margins(op, config, vs) -> np.ndarray:
    """``-form_>>(v) - mass(v)`` for each ``v`` (nonnegative when calibrated)."""
    return np.array([-quadratic_form(v, op, config, ">>") - mass(v, op) for v in vs])


@dataclass
class QuadraticFormReport:
    radii: list[float]
    C_R: list[float]
    sample_C_R: list[float]
    violations: int
    C_gg: float
    norm_equivalence: float
    forms: dict = field(default_factory=dict, repr=False)

    @property
    def nondecreasing(self) -> bool:
        return all(b >= a for a, b in zip(self.C_R, self.C_R[1:]))

    @property
    def passed(self) -> bool:
        return self.violations == 0


def admissible_constant(op: TransformedOperator, config: TruncationConfig, seed: int = 0) -> float:
    """Smallest ``C(R)`` for the two ``H_R`` form bounds over the whole form domain.

    Each bound is linear in ``C``, so the sharp value is the largest of three
    top eigenvalues: of ``A_R + 2 A_>>``, ``-A_R + 2 A_>>`` and ``2 A_R - A_>>``.
    """
    def combo(a, b):
        return lambda v: a * apply_H_in_v(v, op, config, "R") + b * apply_H_in_v(v, op, config, ">>")

    lams = [_top_weighted(op, combo(a, b), seed) for a, b in ((1, 2), (-1, 2), (2, -1))]
    return max(max(lams), 0.0)


def form_bounds_check(op: TransformedOperator, config: TruncationConfig, vs, radii=None,
                      rtol: float = 1e-10) -> QuadraticFormReport:
    """Check the four form inequalities on the test set ``vs``.

    For each radius ``C(R)`` is the sharp constant from
    :func:`admissible_constant`; all four inequalities are then hard checks on
    ``vs``. ``sample_C_R`` is the smallest constant that works on ``vs`` alone.
    """
    radii = list(radii) if radii is not None else [config.R]
    f_gt = np.array([quadratic_form(v, op, config, ">") for v in vs])
    f_gg = np.array([quadratic_form(v, op, config, ">>") for v in vs])
    m = np.array([mass(v, op) for v in vs])
    scale = np.abs(f_gt) + (config.C_gg + 1.0) * m
    viol = int(np.sum(np.abs(f_gt) > -f_gg + rtol * scale))
    viol += int(np.sum(-f_gg > -f_gt + config.C_gg * m + rtol * scale))
    C_R, sample_C_R = [], []
    forms = {">": f_gt, ">>": f_gg, "mass": m}
    for R in radii:
        cfg = config.with_radius(R)
        f_R = np.array([quadratic_form(v, op, cfg, "R") for v in vs])
        forms[R] = f_R
        C = admissible_constant(op, cfg)
        sc = np.abs(f_R) + np.abs(f_gg) + (C + 1.0) * m
        viol += int(np.sum(np.abs(f_R) > -2.0 * f_gg + C * m + rtol * sc))
        viol += int(np.sum(-f_gg > -2.0 * f_R + C * m + rtol * sc))
        need = np.maximum((np.abs(f_R) + 2.0 * f_gg) / m, (-f_gg + 2.0 * f_R) / m)
        C_R.append(C)
        sample_C_R.append(float(max(need.max(), 0.0)))
    grad_l2 = np.array([integrate(sum(g**2 for g in gradient(v, op.grid)) + v**2, op.grid) for v in vs])
    equiv = float(np.max(grad_l2 / (-f_gg + m)))
    return QuadraticFormReport(radii, C_R, sample_C_R, viol, config.C_gg, equiv, forms)
