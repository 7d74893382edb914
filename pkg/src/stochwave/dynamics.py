"""Time evolution of the truncated wave equation in ``v``-coordinates.

The physical equation ``u_tt - H_R u = -u^3`` becomes, for ``u = e^{W_>} v``,

    v_tt = A_R v - e^{2 W_>} v^3

which is Hamiltonian for the weighted mass ``e^{2 W_>}``; Störmer-Verlet
(kick-drift-kick) therefore conserves a modified energy.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .hamiltonian import (
    TransformedOperator,
    TruncationConfig,
    apply_H_in_v,
    mass,
    quadratic_form,
)
from .spectral import TorusGrid, integrate


@dataclass
class WaveState:
    v: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def physical(self, op: TransformedOperator) -> tuple[np.ndarray, np.ndarray]:
        """``(u, u_t) = (e^{W_>} v, e^{W_>} p)``."""
        return op.expW * self.v, op.expW * self.p

    @classmethod
    def from_physical(cls, u0, u1, op: TransformedOperator, t: float = 0.0) -> "WaveState":
        return cls(op.expmW * u0, op.expmW * u1, t)

    def copy(self) -> "WaveState":
        return WaveState(self.v.copy(), self.p.copy(), self.t)


def max_stable_dt(grid: TorusGrid, cfl: float) -> float:
    """``cfl * h / (pi sqrt(d))``: ``cfl`` over the fastest free mode."""
    return cfl * grid.h / (np.pi * np.sqrt(grid.d))


@dataclass
class EvolveConfig:
    dt: float
    T: float
    cubic: bool = True
    stride: int = 10
    record_states: bool = False
    max_cfl: float = 0.5

    def validate(self, grid: TorusGrid) -> None:
        if not self.T >= 0:
            raise ValueError(f"final time must be nonnegative, got {self.T}")
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        limit = max_stable_dt(grid, self.max_cfl)
        if self.dt > limit * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt:.4g} exceeds the CFL limit {limit:.4g}")

    @classmethod
    def from_cfl(cls, grid: TorusGrid, cfl: float, T: float, **kw) -> "EvolveConfig":
        """Largest step at the given CFL number that divides ``T`` evenly."""
        dt = max_stable_dt(grid, cfl)
        if T > 0:
            steps = int(np.ceil(T / dt - 1e-9))
            dt = T / steps
        return cls(dt=dt, T=T, **kw)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


def rhs(v: np.ndarray, op: TransformedOperator, config: TruncationConfig, cubic: bool = True) -> np.ndarray:
    """Acceleration ``A_R v - e^{2W} v^3`` (cubic term only when ``cubic``)."""
    a = apply_H_in_v(v, op, config, "R")
    if cubic:
        a = a - op.exp2W * v**3
    return a


def step(state: WaveState, op: TransformedOperator, config: TruncationConfig, dt: float,
         cubic: bool = True, accel: np.ndarray | None = None) -> tuple[WaveState, np.ndarray]:
    """One kick-drift-kick step; returns the new state and its acceleration."""
    if accel is None:
        accel = rhs(state.v, op, config, cubic)
    p_half = state.p + 0.5 * dt * accel
    v = state.v + dt * p_half
    new_accel = rhs(v, op, config, cubic)
    p = p_half + 0.5 * dt * new_accel
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(p))):
        raise FloatingPointError(f"non-finite state at t = {state.t + dt:.6g}")
    return WaveState(v, p, state.t + dt), new_accel


def energy_ER(state: WaveState, op, config: TruncationConfig, cubic: bool = True) -> float:
    kinetic = 0.5 * mass(state.p, op)
    potential = -0.5 * quadratic_form(state.v, op, config, "R")
    quartic = 0.25 * integrate(op.exp2W**2 * state.v**4, op.grid) if cubic else 0.0
    return kinetic + potential + quartic


def energy_Egg(state: WaveState, op, config: TruncationConfig, cubic: bool = True,
               check: bool = True) -> float:
    kinetic = 0.5 * mass(state.p, op)
    potential = -0.5 * quadratic_form(state.v, op, config, ">>")
    quartic = 0.25 * integrate(op.exp2W**2 * state.v**4, op.grid) if cubic else 0.0
    e = kinetic + potential + quartic
    if check and e < -1e-8:
        raise ArithmeticError(f"rough energy is negative ({e:.3e}); C_>> calibration is broken")
    return e


@dataclass
class EnergyTrace:
    t: list[float] = field(default_factory=list)
    E_R: list[float] = field(default_factory=list)
    E_gg: list[float] = field(default_factory=list)

    @property
    def log_slope(self) -> list[float]:
        """Running ``(log E_gg(t) - log E_gg(0)) / t``."""
        e0 = self.E_gg[0] if self.E_gg else 0.0
        out = []
        for t, e in zip(self.t, self.E_gg):
            if t <= 0 or e0 <= 0 or e <= 0:
                out.append(0.0)
            else:
                out.append((np.log(e) - np.log(e0)) / t)
        return out

    def relative_drift(self) -> float:
        e = np.asarray(self.E_R)
        return float(np.max(np.abs(e - e[0])) / abs(e[0])) if e.size and e[0] != 0 else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,E_R,E_gg,log_slope\n")
        for row in zip(self.t, self.E_R, self.E_gg, self.log_slope):
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()


@dataclass
class Run:
    state: WaveState
    trace: EnergyTrace
    states: list[WaveState] = field(default_factory=list)


def evolve(state0: WaveState, op: TransformedOperator, config: TruncationConfig,
           ecfg: EvolveConfig) -> Run:
    """Integrate to ``ecfg.T`` recording energies (and optionally states) every ``stride`` steps."""
    ecfg.validate(op.grid)
    state = state0.copy()
    trace = EnergyTrace()
    states = []

    def record(s):
        trace.t.append(s.t)
        trace.E_R.append(energy_ER(s, op, config, ecfg.cubic))
        trace.E_gg.append(energy_Egg(s, op, config, ecfg.cubic, check=False))
        if ecfg.record_states:
            states.append(s.copy())

    record(state)
    accel = None
    n = ecfg.n_steps
    for i in range(1, n + 1):
        state, accel = step(state, op, config, ecfg.dt, ecfg.cubic, accel)
        if i % ecfg.stride == 0 or i == n:
            record(state)
    return Run(state, trace, states)


@dataclass
class GronwallReport:
    C_fit: float
    scale: float
    factor: float
    min_E_gg: float
    bound_holds: bool

    @property
    def passed(self) -> bool:
        return self.bound_holds and self.min_E_gg >= -1e-8 and self.C_fit <= self.factor * self.scale


def gronwall_check(trace: EnergyTrace, op: TransformedOperator, config: TruncationConfig,
                   factor: float = 4.0) -> GronwallReport:
    """Fit the largest log-slope of ``E_>>`` and compare to ``||chi Z_<=||_inf + C_>>``."""
    if not trace.t:
        raise ValueError("empty trace")
    e = np.asarray(trace.E_gg)
    t = np.asarray(trace.t)
    slopes = np.asarray(trace.log_slope)[t > 0]
    C_fit = float(max(slopes.max(), 0.0)) if slopes.size else 0.0
    bound = np.exp(C_fit * t) * e[0] * (1 + 1e-6)
    holds = bool(np.all(e <= bound + 1e-300))
    scale = float(np.max(np.abs(config.chi * op.Z_le)) + config.C_gg)
    return GronwallReport(C_fit, scale, factor, float(e.min()), holds)


# ---------------------------------------------------------------- Duhamel oracle

def operator_matrix(op: TransformedOperator, config: TruncationConfig, variant: str = ">>") -> np.ndarray:
    """Dense matrix of ``A_variant`` acting on flattened fields."""
    shape = op.grid.shape
    N = int(np.prod(shape))
    if N > 24**op.grid.d:
        raise ValueError(f"grid too large for dense assembly ({N} points)")
    A = np.empty((N, N))
    e = np.zeros(N)
    for i in range(N):
        e[i] = 1.0
        A[:, i] = apply_H_in_v(e.reshape(shape), op, config, variant).ravel()
        e[i] = 0.0
    return A


@dataclass
class _Modal:
    omega: np.ndarray     # mode frequencies
    phi: np.ndarray       # B-orthonormal eigenvectors (columns)
    Bdiag: np.ndarray


def _modal(op, config) -> _Modal:
    A = operator_matrix(op, config, ">>")
    Bdiag = (op.exp2W * op.grid.cell_volume).ravel()
    Q = Bdiag[:, None] * A
    Q = 0.5 * (Q + Q.T)
    lam, phi = eigh(-Q, np.diag(Bdiag))
    if lam.min() <= 0:
        raise ValueError("-H_>> is not positive; calibrate C_>> first")
    return _Modal(np.sqrt(lam), phi, Bdiag)


def _lobatto(n):
    """Chebyshev-Gauss-Lobatto nodes on [0, 1] (ascending) and barycentric weights."""
    k = np.arange(n)
    x = 0.5 * (1 - np.cos(np.pi * k / (n - 1)))
    w = (-1.0) ** k
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def _bary_matrix(x_nodes, w, x_eval):
    diff = x_eval[:, None] - x_nodes[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15)
    diff[exact] = 1.0
    P = w[None, :] / diff
    P /= P.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    P[rows] = exact[rows].astype(float)
    return P


def _duhamel_segment(c0, d0, modal, source, tau, n_nodes, n_quad, tol, max_iter):
    """Picard iteration for one horizon ``tau``; ``c0, d0`` are modal position/velocity."""
    om = modal.omega
    xn, wb = _lobatto(n_nodes)
    t_nodes = tau * xn
    gx, gw = np.polynomial.legendre.leggauss(n_quad)
    # quadrature points in [0, t_i] for every node i
    s = 0.5 * (gx[None, :] + 1.0) * t_nodes[:, None]           # (n_nodes, n_quad)
    ws = 0.5 * gw[None, :] * t_nodes[:, None]
    P = _bary_matrix(xn, wb, (s / tau).ravel()).reshape(n_nodes, n_quad, n_nodes)
    lag = t_nodes[:, None] - s                                  # t_i - s
    Ksin = np.sin(om[:, None, None] * lag[None]) / om[:, None, None]
    Kcos = np.cos(om[:, None, None] * lag[None])
    free_c = np.cos(np.outer(om, t_nodes)) * c0[:, None] + (np.sin(np.outer(om, t_nodes)) / om[:, None]) * d0[:, None]
    free_d = -om[:, None] * np.sin(np.outer(om, t_nodes)) * c0[:, None] + np.cos(np.outer(om, t_nodes)) * d0[:, None]
    c = free_c.copy()
    for it in range(max_iter):
        F = source(c)                                   # modal source at nodes (modes, n_nodes)
        Fq = np.einsum("iqj,mj->miq", P, F)             # at quadrature points
        c_new = free_c + np.einsum("miq,iq->mi", Ksin * Fq, ws)
        w = modal.Bdiag
        delta = np.sqrt(np.max(np.sum((modal.phi @ (c_new - c)) ** 2 * w[:, None], axis=0)))
        scale = np.sqrt(np.max(np.sum((modal.phi @ c_new) ** 2 * w[:, None], axis=0)))
        c = c_new
        if not np.isfinite(delta) or delta > 1e6 * max(scale, 1.0):
            return None
        if delta <= tol * max(scale, 1e-300) or delta <= 1e-14:
            F = source(c)
            Fq = np.einsum("iqj,mj->miq", P, F)
            d = free_d + np.einsum("miq,iq->mi", Kcos * Fq, ws)
            return c[:, -1], d[:, -1], it + 1
    return None


@dataclass
class OracleResult:
    state: WaveState
    segments: int
    iterations: list[int]


def duhamel_oracle(state0: WaveState, op: TransformedOperator, config: TruncationConfig,
                   T: float, cubic: bool = True, n_nodes: int = 40, n_quad: int = 64,
                   tol: float = 1e-10, max_iter: int = 200, max_halvings: int = 10) -> OracleResult:
    """Mild solution via the cos/sinc propagators of ``-H_>>`` and Picard iteration.

    Source term in ``v``-coordinates: ``Xi^R_<= v - e^{2W} v^3``. When Picard
    does not contract on the current horizon it is halved and segments are
    composed.
    """
    if T == 0:
        return OracleResult(state0.copy(), 0, [])
    modal = _modal(op, config)
    phi, B = modal.phi, modal.Bdiag
    xi = config.xi_low(op).ravel()
    e2w = op.exp2W.ravel()

    def source(c):
        v = phi @ c
        f = xi[:, None] * v
        if cubic:
            f = f - e2w[:, None] * v**3
        return phi.T @ (B[:, None] * f)

    c = phi.T @ (B * state0.v.ravel())
    d = phi.T @ (B * state0.p.ravel())
    t, tau = 0.0, T
    iters = []
    segments = 0
    halvings = 0
    while t < T * (1 - 1e-14):
        tau = min(tau, T - t)
        res = _duhamel_segment(c, d, modal, source, tau, n_nodes, n_quad, tol, max_iter)
        if res is None:
            halvings += 1
            if halvings > max_halvings:
                raise RuntimeError("Picard iteration failed to contract on any horizon")
            tau *= 0.5
            continue
        c, d, k = res
        iters.append(k)
        segments += 1
        t += tau
    shape = op.grid.shape
    return OracleResult(WaveState((phi @ c).reshape(shape), (phi @ d).reshape(shape), T), segments, iters)


def free_propagator(state: WaveState, grid: TorusGrid, T: float) -> WaveState:
    """Exact solution of ``v_tt = div grad v`` via ``cos(t|k|)`` and ``sin(t|k|)/|k|``.

    ``|k|`` is built from the derivative wavenumbers, so Nyquist modes are
    frozen exactly as in the discrete operator.
    """
    from .spectral import forward_transform, inverse_transform

    k = np.sqrt(sum(kj**2 for kj in grid.kderiv))
    c0, c1 = forward_transform(state.v), forward_transform(state.p)
    cos = np.cos(T * k)
    sinc = np.where(k > 0, np.sin(T * k) / np.where(k > 0, k, 1.0), T)
    v = inverse_transform(cos * c0 + sinc * c1)
    p = inverse_transform(-k * np.sin(T * k) * c0 + cos * c1)
    return WaveState(v, p, state.t + T)


def weighted_l2(v, op) -> float:
    return float(np.sqrt(mass(v, op)))
