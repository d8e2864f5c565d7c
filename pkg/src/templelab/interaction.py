"""Transversal interaction potential.

For a slow density ``z`` and a fast density ``z#`` (speed gap ``c``) with
viscosities bounded by ``c1``::

    Q(z, z#) = int int K(x - y) |z(x)| |z#(y)| dx dy,
    K(s) = 1/c              for s >= 0,
    K(s) = exp(c s / (2 c1)) / c  for s < 0.

``Q`` only counts the pairs that have yet to cross, so its decay bounds the
interaction integral ``int int |z z#| dx dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import lfilter

from .coefficients import source_phi
from .errors import GridMismatch, SpeedGapViolated
from .grid import GridField, central_derivative
from .report import EstimateReport
from .system import SystemSpec, frames
from .viscous import gradient_decompose

DIRECT_LIMIT = 1 << 13


@dataclass(frozen=True)
class InteractionKernel:
    c: float
    c1: float

    def __post_init__(self):
        if not (self.c > 0 and self.c1 > 0):
            raise ValueError("kernel needs c > 0 and c1 > 0")

    @property
    def rate(self) -> float:
        return self.c / (2.0 * self.c1)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0, 1.0, np.exp(self.rate * np.minimum(s, 0.0))) / self.c


def _weights(size: int, dx: float) -> np.ndarray:
    w = np.full(size, dx)
    w[0] = w[-1] = 0.5 * dx
    return w


def _check(z: GridField, z_sharp: GridField) -> None:
    z.require_same_grid(z_sharp)
    if z.values.ndim != 1 or z_sharp.values.ndim != 1:
        raise GridMismatch("interaction potential needs scalar fields")


def interaction_potential(z: GridField, z_sharp: GridField, k: InteractionKernel,
                          method: str = "fast") -> float:
    """``Q(z, z#)`` by trapezoid quadrature in both variables with the exact kernel.

    ``method="direct"`` forms the kernel matrix block by block (``O(N^2)``);
    ``"fast"`` uses a prefix sum for the constant branch and a first-order
    recursion for the exponential branch (``O(N)``, same quadrature).
    """
    _check(z, z_sharp)
    dx = z.dx
    w = _weights(z.size, dx)
    a = np.abs(z.values) * w
    b = np.abs(z_sharp.values) * w
    if method == "direct":
        if z.size > DIRECT_LIMIT:
            raise ValueError(f"direct quadrature is limited to {DIRECT_LIMIT} nodes")
        x = z.x
        total = 0.0
        for start in range(0, x.size, 1024):
            blk = slice(start, start + 1024)
            total += float(a[blk] @ k(x[blk, None] - x[None, :]) @ b)
        return total
    # pairs with y <= x: (1/c) sum_x a(x) * sum_{y <= x} b(y)
    near = float(a @ np.cumsum(b)) / k.c
    # pairs with y > x: S_j = sum_{m > j} exp(-rate (m - j) dx) b_m
    decay = math.exp(-k.rate * dx)
    rev = b[::-1]
    # T_j = decay * (b_{j+1} + T_{j+1}) run backwards
    shifted = np.concatenate([[0.0], rev[:-1]])
    S = lfilter([decay], [1.0, -decay], shifted)[::-1]
    far = float(a @ S) / k.c
    return near + far


def _effective_viscosity(sys: SystemSpec, U: np.ndarray, epsilon: float, dx: float,
                         cfl: float) -> np.ndarray:
    """``eps mu_i`` plus the Rusanov numerical viscosity ``alpha_i dx / 2`` bounds.

    Returns an array ``(N, n, 2)`` of lower and upper bounds per node.
    """
    lam, mu, _, _ = frames(sys, U)
    alpha = np.abs(lam).max(axis=0)
    amax = float(np.abs(lam).max())
    num_hi = 0.5 * alpha * dx
    # forward Euler removes at most dt lambda^2 / 2 with dt <= cfl dx / amax
    num_lo = num_hi - 0.5 * cfl * dx * lam**2 / max(amax, 1e-300)
    return np.stack([epsilon * mu + num_lo, epsilon * mu + num_hi], axis=-1)


def transversal_decay_check(sys: SystemSpec, run: Sequence[GridField], pair: Tuple[int, int],
                            epsilon: float, cfl: float = 0.4, numerical_viscosity: bool = True,
                            rel_tol: float = 1e-3, margin: float = 0.05,
                            k: Optional[InteractionKernel] = None) -> EstimateReport:
    """Discrete version of the transversal interaction estimate along a viscous run.

    ``pair = (i, j)`` names the slow and fast family (0-based). With ``v_i`` the
    gradient components, the kernel uses ``c = inf lambda_j - sup lambda_i`` and
    ``c1 = sup (nu_i(x) + nu_j(y)) / 2`` where ``nu`` is the effective viscosity
    (``eps mu`` plus the scheme's numerical viscosity). Then
    ``Q(t) + kappa int_0^t int |v_i v_j|`` with ``kappa = inf (nu_i + nu_j) / (2 c1)``
    is non-increasing up to the source contribution
    ``(1/c) int (|phi_i| |v_j| + |v_i| |phi_j|)`` and a relative quadrature
    budget ``rel_tol``. The interaction integral is compared with
    ``E_1 E_2 / (c kappa)``; the report passes when the monotonicity holds and
    the bound has the requested relative ``margin``.
    """
    i, j = pair
    if i == j:
        raise ValueError("pair must name two different families")
    if len(run) < 2:
        raise ValueError("need at least two records")
    times = np.array([f.t for f in run])
    dx = run[0].dx
    states = [f.values.reshape(f.size, sys.n) for f in run]
    lam_i_sup, lam_j_inf = -np.inf, np.inf
    nu_lo_i, nu_lo_j, nu_hi_i, nu_hi_j = np.inf, np.inf, 0.0, 0.0
    for U in states:
        lam, _, _, _ = frames(sys, U)
        lam_i_sup = max(lam_i_sup, float(lam[:, i].max()))
        lam_j_inf = min(lam_j_inf, float(lam[:, j].min()))
        nu = _effective_viscosity(sys, U, epsilon, dx if numerical_viscosity else 0.0, cfl)
        nu_lo_i = min(nu_lo_i, float(nu[:, i, 0].min()))
        nu_lo_j = min(nu_lo_j, float(nu[:, j, 0].min()))
        nu_hi_i = max(nu_hi_i, float(nu[:, i, 1].max()))
        nu_hi_j = max(nu_hi_j, float(nu[:, j, 1].max()))
    c = lam_j_inf - lam_i_sup
    if not c > 0:
        raise SpeedGapViolated(f"inf lambda_{j + 1} - sup lambda_{i + 1} = {c:.6g} is not positive")
    c1 = 0.5 * (nu_hi_i + nu_hi_j)
    kappa = 0.5 * (nu_lo_i + nu_lo_j) / c1
    kern = k if k is not None else InteractionKernel(c, c1)

    Q, inter, src = [], [], []
    E_init = None
    for f, U in zip(run, states):
        V = np.stack([g.values for g in gradient_decompose(sys, f)], axis=1)
        zi, zj = f.with_values(V[:, i]), f.with_values(V[:, j])
        Q.append(interaction_potential(zi, zj, kern))
        w = _weights(f.size, dx)
        inter.append(float(np.sum(w * np.abs(V[:, i] * V[:, j]))))
        Vx = central_derivative(V, dx)
        phi = source_phi(sys, U, V, Vx, epsilon)
        src.append((float(np.sum(w * np.abs(phi[:, i]))), float(np.sum(w * np.abs(phi[:, j]))),
                    float(np.sum(w * np.abs(V[:, i]))), float(np.sum(w * np.abs(V[:, j])))))
        if E_init is None:
            E_init = (src[-1][2], src[-1][3])
    Q = np.array(Q)
    inter = np.array(inter)
    src = np.array(src)
    dt = np.diff(times)
    cum_inter = np.concatenate([[0.0], np.cumsum(0.5 * dt * (inter[1:] + inter[:-1]))])
    growth = (src[:, 0] * src[:, 3] + src[:, 2] * src[:, 1]) / c
    cum_src = np.concatenate([[0.0], np.cumsum(0.5 * dt * (growth[1:] + growth[:-1]))])
    phi_int = np.concatenate([np.zeros((1, 2)), np.cumsum(0.5 * dt[:, None] * (src[1:, :2] + src[:-1, :2]),
                                               axis=0)], axis=0)
    book = Q + kappa * cum_inter
    slack = rel_tol * max(float(book[0]), 1e-300)
    increase = np.diff(book) - np.diff(cum_src)
    worst = float(increase.max(initial=-np.inf)) if increase.size else 0.0
    monotone = bool(np.all(increase <= slack))
    E1 = E_init[0] + float(phi_int[-1, 0])
    E2 = E_init[1] + float(phi_int[-1, 1])
    bound = E1 * E2 / (c * kappa)
    total = float(cum_inter[-1])
    bound_ok = total <= (1.0 - margin) * bound if bound > 0 else total == 0.0
    scalars = {
        "c": c, "c1": c1, "kappa": kappa, "epsilon": epsilon,
        "Q0": float(Q[0]), "Q_end": float(Q[-1]),
        "interaction": total, "E1": E1, "E2": E2, "bound": bound,
        "bound_ratio": total / bound if bound > 0 else 0.0,
        "max_increase": worst, "slack": slack, "source_budget": float(cum_src[-1]),
        "pass_monotone": monotone, "pass_bound": bound_ok,
    }
    series = {"t": times.tolist(), "Q": Q.tolist(), "interaction_rate": inter.tolist(),
              "bookkeeping": book.tolist(), "cumulative_interaction": cum_inter.tolist()}
    return EstimateReport(name="transversal_decay", scalars=scalars, series=series,
                          threshold={"rel_tol": rel_tol, "margin": margin},
                          passed=monotone and bound_ok)
