"""The warped-coordinate transform ``T``.

``X_i(x) = int_0^x mu_i(u(z))^{-1/2} dz`` and ``T(f)_i`` is the pushforward of
``f_i`` along ``X_i``: ``T(f)_i(X_i(x)) = f_i(x)``, so that
``int |T(f)_i|^p dy = int |f_i|^p mu_i^{-1/2} dx``.
"""
from __future__ import annotations

from typing import List, Sequence

import numpy as np

from .errors import GridMismatch, NonPositiveViscosity
from .grid import GridField, central_derivative
from .report import EstimateReport
from .system import SystemSpec, frames


def warp_coordinates(sys: SystemSpec, u: GridField) -> np.ndarray:
    """``X[j, i] = X_i(x_j)``, trapezoid rule, anchored so that ``X_i(0) = 0``.

    Outside the grid the state is extended by constants, which fixes the anchor
    when ``0`` is not a grid node.
    """
    U = u.values.reshape(u.size, sys.n)
    _, mu, _, _ = frames(sys, U)
    if np.any(mu <= 0):
        raise NonPositiveViscosity(f"mu_i <= 0 (min {float(mu.min()):.3e})")
    w = 1.0 / np.sqrt(mu)
    cum = np.zeros_like(w)
    cum[1:] = np.cumsum(0.5 * (w[1:] + w[:-1]) * u.dx, axis=0)
    x = u.x
    if x[0] <= 0.0 <= x[-1]:
        anchor = np.array([np.interp(0.0, x, cum[:, i]) for i in range(sys.n)])
    elif x[0] > 0.0:
        anchor = -x[0] * w[0]
    else:
        anchor = cum[-1] + (0.0 - x[-1]) * w[-1]
    return cum - anchor


def transform_T(sys: SystemSpec, u: GridField, f: Sequence[GridField]) -> List[GridField]:
    """Transform the component fields ``f`` (one scalar field per family).

    Each output lives on its own uniform ``y`` grid spanning ``[X_i(x_0), X_i(x_N)]``
    with the same number of nodes; values come from linear interpolation, which
    is monotone because ``X_i`` is increasing.
    """
    if len(f) != sys.n:
        raise GridMismatch(f"expected {sys.n} component fields, got {len(f)}")
    for fi in f:
        u.require_same_grid(fi)
    X = warp_coordinates(sys, u)
    out = []
    N = u.size
    for i in range(sys.n):
        y0, y1 = X[0, i], X[-1, i]
        dy = (y1 - y0) / (N - 1)
        y = y0 + dy * np.arange(N)
        y[-1] = min(y[-1], y1)
        out.append(GridField(float(y0), float(dy), u.t, np.interp(y, X[:, i], f[i].values)))
    return out


def _norm(values: np.ndarray, d: float, p: float) -> float:
    return float((d * np.sum(np.abs(values) ** p)) ** (1.0 / p))


def _mu_gradient_sup(sys: SystemSpec, U: np.ndarray, h: float = 1e-6) -> float:
    grads = []
    for k in range(sys.n):
        e = np.zeros(sys.n)
        e[k] = h
        _, mp, _, _ = frames(sys, U + e)
        _, mm, _, _ = frames(sys, U - e)
        grads.append((mp - mm) / (2 * h))
    G = np.stack(grads, axis=-1)  # (N, family, coordinate)
    return float(np.linalg.norm(G, axis=-1).max())


def transform_inequalities(sys: SystemSpec, u: GridField, f: Sequence[GridField], p: float,
                           trim: int = 2, rtol: float = 1e-3) -> EstimateReport:
    """Evaluate both sides of the four norm inequalities of the transform.

    With ``m = sup mu``, ``m1 = sup |D mu|`` and ``c0`` from the system::

        |Tf|        <= c0^(-1/2p) |f|        <= c0^(-1/2p) m^(1/2p) |Tf|
        |(Tf)'|     <= m^((p-1)/2p) |f'|     <= c0^(-(p-1)/2p) m^((p-1)/2p) |(Tf)'|
        |(Tf)''|    <= 2 m^((2p-1)/2p) |f''| + 2 m1 c0^(-1/2p) |u_x|_inf |f'|
        |f''|       <= 2 c0^(-1/2p) |(Tf)''| + 2 m1 c0^(-(p+1)/p) |u_x|_inf |(Tf)'|

    Norms are taken per family and the inequalities checked family by family;
    derivative norms drop ``trim`` nodes at each end. Every ratio lhs/rhs is
    reported; the check passes when all are <= ``1 + rtol``. At ``p = 1`` the
    first-derivative pair is an equality in the continuum (total variation is
    invariant under monotone reparametrisation), so discrete ratios straddle 1
    by the interpolation error and ``rtol`` must stay positive.
    """
    Tf = transform_T(sys, u, f)
    U = u.values.reshape(u.size, sys.n)
    _, mu, _, _ = frames(sys, U)
    m = float(mu.max())
    c0 = sys.c0
    m1 = _mu_gradient_sup(sys, U)
    ux_inf = float(np.linalg.norm(central_derivative(U, u.dx), axis=-1).max())
    sl = slice(trim, u.size - trim)
    ratios = {}
    for i in range(sys.n):
        fi, ti = f[i].values, Tf[i].values
        dx, dy = u.dx, Tf[i].dx
        f1 = central_derivative(fi, dx)
        t1 = central_derivative(ti, dy)
        f2 = central_derivative(f1, dx)
        t2 = central_derivative(t1, dy)
        nf, nt = _norm(fi, dx, p), _norm(ti, dy, p)
        nf1, nt1 = _norm(f1[sl], dx, p), _norm(t1[sl], dy, p)
        nf2, nt2 = _norm(f2[sl], dx, p), _norm(t2[sl], dy, p)
        pairs = {
            "T1a": (nt, c0 ** (-1 / (2 * p)) * nf),
            "T1b": (c0 ** (-1 / (2 * p)) * nf, c0 ** (-1 / (2 * p)) * m ** (1 / (2 * p)) * nt),
            "T2a": (nt1, m ** ((p - 1) / (2 * p)) * nf1),
            "T2b": (m ** ((p - 1) / (2 * p)) * nf1,
                    c0 ** (-(p - 1) / (2 * p)) * m ** ((p - 1) / (2 * p)) * nt1),
            "T3a": (nt2, 2 * m ** ((2 * p - 1) / (2 * p)) * nf2
                    + 2 * m1 * c0 ** (-1 / (2 * p)) * ux_inf * nf1),
            "T3b": (nf2, 2 * c0 ** (-1 / (2 * p)) * nt2
                    + 2 * m1 * c0 ** (-(p + 1) / p) * ux_inf * nt1),
        }
        for name, (lhs, rhs) in pairs.items():
            ratios[f"{name}_{i + 1}"] = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf)
    worst = max(ratios.values())
    scalars = dict(ratios)
    scalars.update({"p": p, "m": m, "m1": m1, "c0": c0, "ux_sup": ux_inf, "max_ratio": worst})
    return EstimateReport(name="transform_inequalities", scalars=scalars,
                          threshold={"max_ratio": 1.0 + rtol}, passed=worst <= 1.0 + rtol)
