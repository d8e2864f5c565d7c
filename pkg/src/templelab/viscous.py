"""Explicit finite-volume solver for ``u_t + A(u) u_x = eps (B(u) u_x)_x``.

Two convective discretisations are available:

``flux``
    conservative form with a per-family Rusanov flux
    ``F = (f_l + f_r)/2 - R_m diag(alpha) L_m (u_r - u_l)/2`` where ``R_m, L_m`` is
    the frame at the interface midpoint and ``alpha_i`` the largest ``|lambda_i|``
    over the left, right and midpoint states. Needs a flux.
``upwind``
    local characteristic upwinding of the product ``A(u) u_x`` in the cell frame.

Diffusion is always in flux form ``eps B(u_{j+1/2}) (u_{j+1} - u_j) / dx`` with
``u_{j+1/2}`` the arithmetic mean. Time stepping is forward Euler with
``dt = cfl * min(dx / max|lambda|, dx^2 / (2 eps max mu))`` unless a fixed step
is configured; record times are hit exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .coefficients import source_phi
from .errors import DomainExit, GridMismatch, InsufficientRecords, Instability
from .grid import GridField, SolveConfig, central_derivative, second_derivative
from .report import EstimateReport
from .system import SystemSpec, frames

# step for the coordinate partials of A and B used by the linearized solver
_PARTIAL_STEP = 1e-6


@dataclass
class _Stage:
    """Quantities of one explicit step that the linearized update reuses."""

    P: np.ndarray          # padded states (N + 2, n)
    dU: np.ndarray         # interface jumps (N + 1, n)
    lamC: np.ndarray
    RC: np.ndarray
    LC: np.ndarray
    Um: np.ndarray
    RM: np.ndarray
    LM: np.ndarray
    alpha: np.ndarray
    BM: np.ndarray
    amax: float
    mumax: float


class ViscousStepper:
    def __init__(self, sys: SystemSpec, dx: float, cfg: SolveConfig):
        self.sys = sys
        self.dx = dx
        self.cfg = cfg
        self.eps = cfg.epsilon
        scheme = cfg.scheme
        if scheme == "auto":
            scheme = "flux" if sys.conservative else "upwind"
        if scheme == "flux" and not sys.conservative:
            raise GridMismatch("flux scheme requested for a system without flux")
        self.scheme = scheme

    def pad(self, U: np.ndarray) -> np.ndarray:
        if self.cfg.boundary == "periodic":
            return np.concatenate([U[-1:], U, U[:1]])
        return np.concatenate([U[:1], U, U[-1:]])

    def stage(self, U: np.ndarray) -> _Stage:
        sys = self.sys
        P = self.pad(U)
        lamC, muC, RC, LC = frames(sys, P)
        Um = 0.5 * (P[:-1] + P[1:])
        lamM, muM, RM, LM = frames(sys, Um)
        alpha = np.maximum(np.maximum(np.abs(lamC[:-1]), np.abs(lamC[1:])), np.abs(lamM))
        BM = sys.B(Um) if self.eps > 0 else None
        return _Stage(P=P, dU=P[1:] - P[:-1], lamC=lamC, RC=RC, LC=LC, Um=Um, RM=RM, LM=LM,
                      alpha=alpha, BM=BM, amax=float(np.abs(lamC).max()),
                      mumax=float(muC.max()))

    def rhs(self, st: _Stage) -> np.ndarray:
        dx = self.dx
        if self.scheme == "flux":
            fP = self.sys.flux(st.P)
            visc = np.einsum("mij,mj->mi", st.RM, st.alpha * np.einsum("mij,mj->mi", st.LM, st.dU))
            F = 0.5 * (fP[:-1] + fP[1:]) - 0.5 * visc
            out = -(F[1:] - F[:-1]) / dx
        else:
            out = -self._upwind(st, st.dU) / dx
        if self.eps > 0:
            G = self.eps * np.einsum("mij,mj->mi", st.BM, st.dU) / dx
            out = out + (G[1:] - G[:-1]) / dx
        return out

    def _upwind(self, st: _Stage, dV: np.ndarray) -> np.ndarray:
        """Characteristic upwinding ``sum_i r_i (lam+ l_i dV_minus + lam- l_i dV_plus)``."""
        lam = st.lamC[1:-1]
        R = st.RC[1:-1]
        L = st.LC[1:-1]
        back = np.einsum("mij,mj->mi", L, dV[:-1])
        fwd = np.einsum("mij,mj->mi", L, dV[1:])
        coef = np.maximum(lam, 0.0) * back + np.minimum(lam, 0.0) * fwd
        return np.einsum("mij,mj->mi", R, coef)

    def time_step(self, st: _Stage) -> float:
        if self.cfg.dt is not None:
            return self.cfg.dt
        limits = []
        if st.amax > 0:
            limits.append(self.dx / st.amax)
        if self.eps > 0 and st.mumax > 0:
            limits.append(self.dx**2 / (2 * self.eps * st.mumax))
        if not limits:
            return np.inf
        return self.cfg.cfl * min(limits)

    # -- first variation -------------------------------------------------

    def _partials(self, fn, X: np.ndarray) -> np.ndarray:
        """Central-difference coordinate partials ``d_k fn`` at states ``X``; shape (m, n, ...)."""
        h = _PARTIAL_STEP
        eye = np.eye(self.sys.n)
        return np.stack([(fn(X + h * eye[k]) - fn(X - h * eye[k])) / (2 * h)
                         for k in range(self.sys.n)], axis=1)

    def rhs_linear(self, st: _Stage, H: np.ndarray) -> np.ndarray:
        sys = self.sys
        dx = self.dx
        PH = self.pad(H)
        dH = PH[1:] - PH[:-1]
        if self.scheme == "flux":
            AH = np.einsum("mij,mj->mi", sys.A(st.P), PH)
            visc = np.einsum("mij,mj->mi", st.RM, st.alpha * np.einsum("mij,mj->mi", st.LM, dH))
            F = 0.5 * (AH[:-1] + AH[1:]) - 0.5 * visc
            out = -(F[1:] - F[:-1]) / dx
        else:
            U = st.P[1:-1]
            dA = self._partials(sys.A, U)
            hA = np.einsum("mk,mkij->mij", H, dA)
            ux = 0.5 * (st.dU[:-1] + st.dU[1:]) / dx
            out = -self._upwind(st, dH) / dx - np.einsum("mij,mj->mi", hA, ux)
        if self.eps > 0:
            Hm = 0.5 * (PH[:-1] + PH[1:])
            dB = self._partials(sys.B, st.Um)
            hB = np.einsum("mk,mkij->mij", Hm, dB)
            G = self.eps * (np.einsum("mij,mj->mi", hB, st.dU)
                            + np.einsum("mij,mj->mi", st.BM, dH)) / dx
            out = out + (G[1:] - G[:-1]) / dx
        return out


def _check_state(sys: SystemSpec, U: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(U)):
        raise Instability(f"non-finite values at t = {t:.6g}")
    inside = sys.contains(U, slack=1e-12)
    if not np.all(inside):
        j = int(np.argmin(inside))
        raise DomainExit(f"state {U[j].tolist()} left the domain box at t = {t:.6g}, node {j}")


def _march(sys, u0: GridField, cfg: SolveConfig, h0: Optional[GridField] = None, info=None):
    stepper = ViscousStepper(sys, u0.dx, cfg)
    U = np.array(u0.values, dtype=float).reshape(u0.size, sys.n)
    H = None if h0 is None else np.array(h0.values, dtype=float).reshape(u0.size, sys.n)
    _check_state(sys, U, 0.0)
    records = list(cfg.record_times)
    out_u: List[GridField] = []
    out_h: List[GridField] = []
    t = 0.0
    steps = 0
    k = 0
    while k < len(records) and records[k] <= 0.0:
        out_u.append(u0.with_values(U.copy(), t=0.0))
        if H is not None:
            out_h.append(u0.with_values(H.copy(), t=0.0))
        k += 1
    while k < len(records):
        target = records[k]
        st = stepper.stage(U)
        dt = stepper.time_step(st)
        last = dt >= (target - t) * (1 - 1e-12)
        if last:
            dt = target - t
        dU = stepper.rhs(st)
        if H is not None:
            H = H + dt * stepper.rhs_linear(st, H)
        U = U + dt * dU
        t = target if last else t + dt
        steps += 1
        _check_state(sys, U, t)
        if H is not None and not np.all(np.isfinite(H)):
            raise Instability(f"non-finite linearized values at t = {t:.6g}")
        if steps > cfg.max_steps:
            raise Instability(f"step budget {cfg.max_steps} exhausted at t = {t:.6g}")
        while k < len(records) and records[k] <= t:
            out_u.append(u0.with_values(U.copy(), t=records[k]))
            if H is not None:
                out_h.append(u0.with_values(H.copy(), t=records[k]))
            k += 1
    if info is not None:
        info["steps"] = steps
        info["scheme"] = stepper.scheme
    return out_u, out_h


def solve_viscous(sys: SystemSpec, u0: GridField, cfg: SolveConfig, info: Optional[dict] = None
                  ) -> List[GridField]:
    """March ``u0`` and return the fields at ``cfg.record_times``.

    Raises :class:`DomainExit` if a state leaves the domain box and
    :class:`Instability` on non-finite values.
    """
    out, _ = _march(sys, u0, cfg, info=info)
    return out


def solve_linearized(sys: SystemSpec, u_traj: List[GridField], h0: GridField, cfg: SolveConfig,
                     info: Optional[dict] = None) -> List[GridField]:
    """First variation ``h_t + (h.A) u_x + A h_x = ((h.B) u_x + B h_x)_x`` along ``u_traj``.

    The base solution is re-integrated from ``u_traj[0]`` together with ``h`` so both
    use the identical step sequence; the re-integrated records must reproduce
    ``u_traj``.
    """
    if not u_traj:
        raise InsufficientRecords("empty base trajectory")
    start = u_traj[0]
    if start.t != 0.0:
        raise InsufficientRecords("base trajectory must start at t = 0")
    start.require_same_grid(h0)
    out_u, out_h = _march(sys, start, cfg, h0=h0, info=info)
    by_time = {f.t: f for f in out_u}
    for f in u_traj[1:]:
        g = by_time.get(f.t)
        if g is None or not f.same_grid(g) or np.max(np.abs(f.values - g.values)) > 1e-12:
            raise GridMismatch(f"base trajectory record at t = {f.t} does not match the configuration")
    return out_h


def gradient_decompose(sys: SystemSpec, u: GridField) -> List[GridField]:
    """Components ``v_i = l_i(u) . u_x`` with central differences for ``u_x``."""
    U = u.values.reshape(u.size, sys.n)
    ux = central_derivative(U, u.dx)
    _, _, _, L = frames(sys, U)
    V = np.einsum("mij,mj->mi", L, ux)
    return [u.with_values(V[:, i]) for i in range(sys.n)]


def _component_matrix(sys: SystemSpec, u: GridField) -> np.ndarray:
    return np.stack([f.values for f in gradient_decompose(sys, u)], axis=1)


def residual_v_equation(sys: SystemSpec, u_traj: List[GridField], epsilon: float,
                        trim: int = 4) -> EstimateReport:
    """L1 mismatch of ``v_t + (lambda v)_x - eps (mu v)_xx - phi`` per family.

    Uses every interior record of the trajectory (records must be equally spaced
    in time); the time derivative is centred over three records and ``trim``
    nodes are dropped at each end.
    """
    if len(u_traj) < 3:
        raise InsufficientRecords("need at least three records")
    times = np.array([f.t for f in u_traj])
    gaps = np.diff(times)
    if np.any(gaps <= 0) or np.max(np.abs(gaps - gaps[0])) > 1e-9 * max(1.0, gaps[0]):
        raise InsufficientRecords("records must be equally spaced in time")
    dt = gaps[0]
    dx = u_traj[0].dx
    per_family = np.zeros(sys.n)
    series = []
    comps = [_component_matrix(sys, f) for f in u_traj]
    for k in range(1, len(u_traj) - 1):
        U = u_traj[k].values.reshape(-1, sys.n)
        V = comps[k]
        Vt = (comps[k + 1] - comps[k - 1]) / (2 * dt)
        lam, mu, _, _ = frames(sys, U)
        flux_x = central_derivative(lam * V, dx)
        diff_xx = second_derivative(mu * V, dx)
        Vx = central_derivative(V, dx)
        sl = slice(trim, U.shape[0] - trim)
        phi = source_phi(sys, U[sl], V[sl], Vx[sl], epsilon)
        res = (Vt + flux_x - epsilon * diff_xx)[sl] - phi
        l1 = dx * np.abs(res).sum(axis=0)
        per_family = np.maximum(per_family, l1)
        series.append(float(l1.sum()))
    scalars = {f"l1_mismatch_{i + 1}": float(per_family[i]) for i in range(sys.n)}
    scalars["l1_mismatch"] = float(per_family.sum())
    scalars["dx"] = dx
    scalars["record_dt"] = float(dt)
    return EstimateReport(name="v_equation_residual", scalars=scalars,
                          series={"t": times[1:-1].tolist(), "l1_mismatch": series})
