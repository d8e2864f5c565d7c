"""Front tracking for scalar laws and the decoupled constant-frame semigroup.

Each scalar flux is replaced by its piecewise-linear interpolant on a set of
breakpoints that contains every data value. Riemann problems between
breakpoints then have finitely many fronts (the hull chords) and every
interaction is again such a Riemann problem, so the approximate solution is
exact for the interpolated flux.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .errors import FrontBudgetExceeded
from .grid import GridField
from .system import SystemSpec


@dataclass(frozen=True)
class FrontState:
    """Piecewise-constant solution: ``states[k]`` holds between fronts ``k-1`` and ``k``."""

    t: float
    positions: np.ndarray
    states: np.ndarray
    interactions: int

    def sample(self, x) -> np.ndarray:
        j = np.searchsorted(self.positions, np.asarray(x, dtype=float), side="right")
        return self.states[j]


def _riemann_pl(b: np.ndarray, fb: np.ndarray, a: int, c: int, tol: float):
    """Fronts ``(speed, left, right)`` for breakpoint indices ``a | c``."""
    if a == c:
        return []
    lower = c > a
    lo, hi = min(a, c), max(a, c)
    x, y = b[lo:hi + 1], fb[lo:hi + 1]
    sign = 1.0 if lower else -1.0
    hull: List[int] = []
    for k in range(x.size):
        while len(hull) >= 2:
            o, m = hull[-2], hull[-1]
            cross = (x[m] - x[o]) * (y[k] - y[o]) - (y[m] - y[o]) * (x[k] - x[o])
            if sign * cross <= tol:
                hull.pop()
            else:
                break
        hull.append(k)
    path = [lo + k for k in (hull if lower else hull[::-1])]
    return [((fb[q] - fb[p]) / (b[q] - b[p]), p, q) for p, q in zip(path, path[1:])]


def front_track(flux: Callable, breaks_x, values, t: float, delta: float,
                max_fronts: int = 200_000, max_interactions: int = 2_000_000) -> FrontState:
    """Entropy solution at time ``t`` for piecewise-constant scalar data.

    ``values[k]`` holds on ``(breaks_x[k-1], breaks_x[k])``. The flux is
    interpolated on a breakpoint set with spacing at most ``delta`` that also
    contains all data values.
    """
    breaks_x = np.asarray(breaks_x, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    count = max(1, int(np.ceil((hi - lo) / delta))) if hi > lo else 0
    grid = np.linspace(lo, hi, count + 1) if count else np.array([lo])
    b = np.unique(np.concatenate([grid, values]))
    fb = np.asarray(flux(b), dtype=float)
    idx = np.searchsorted(b, values)
    tol = 1e-14 * (1.0 + np.ptp(b)) * (1.0 + np.ptp(fb))

    xs: List[float] = []
    ss: List[float] = []
    ls: List[int] = []
    rs: List[int] = []
    for k, x0 in enumerate(breaks_x):
        for s, p, q in _riemann_pl(b, fb, idx[k], idx[k + 1], tol):
            xs.append(x0)
            ss.append(s)
            ls.append(p)
            rs.append(q)
    x = np.array(xs)
    s = np.array(ss)
    L = np.array(ls, dtype=int)
    R = np.array(rs, dtype=int)
    far_left = idx[0]
    now = 0.0
    interactions = 0
    speed_scale = 1.0 + (float(np.abs(s).max()) if s.size else 0.0)
    while x.size:
        if x.size > max_fronts:
            raise FrontBudgetExceeded(f"{x.size} fronts exceed the budget {max_fronts}")
        closing = s[:-1] - s[1:]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            wait = np.where(closing > 1e-14 * speed_scale,
                            np.maximum(x[1:] - x[:-1], 0.0) / closing, np.inf)
        dt = float(wait.min()) if wait.size else np.inf
        if now + dt >= t:
            x = x + (t - now) * s
            break
        x = x + dt * s
        now += dt
        hit = wait <= dt + 1e-13 * max(1.0, now)
        # group fronts meeting at one point into a single Riemann problem
        keep = np.ones(x.size, dtype=bool)
        new_x, new_s, new_l, new_r = [], [], [], []
        k = 0
        while k < hit.size:
            if not hit[k]:
                k += 1
                continue
            first = k
            while k < hit.size and hit[k]:
                k += 1
            last = k  # fronts first..last collide
            keep[first:last + 1] = False
            pos = float(np.mean(x[first:last + 1]))
            for sp, p, q in _riemann_pl(b, fb, L[first], R[last], tol):
                new_x.append((first, pos))
                new_s.append(sp)
                new_l.append(p)
                new_r.append(q)
            interactions += 1
        if interactions > max_interactions:
            raise FrontBudgetExceeded(f"more than {max_interactions} interactions")
        order_key = np.concatenate([np.flatnonzero(keep).astype(float),
                                    np.array([f for f, _ in new_x], dtype=float) + 0.5])
        order = np.argsort(order_key, kind="stable")
        x = np.concatenate([x[keep], np.array([p for _, p in new_x])])[order]
        s = np.concatenate([s[keep], np.array(new_s)])[order]
        L = np.concatenate([L[keep], np.array(new_l, dtype=int)])[order]
        R = np.concatenate([R[keep], np.array(new_r, dtype=int)])[order]
    positions = np.maximum.accumulate(x) if x.size else x
    states = b[np.concatenate([[far_left], R])] if x.size else np.array([b[far_left]])
    return FrontState(float(t), positions, states, interactions)


def _pieces(u0: GridField, component: np.ndarray):
    """Node values as piecewise-constant data with jumps at cell midpoints."""
    jumps = np.flatnonzero(np.diff(component) != 0)
    breaks_x = u0.x0 + (jumps + 0.5) * u0.dx
    values = np.concatenate([[component[0]], component[jumps + 1]])
    return breaks_x, values


def exact_semigroup_decoupled(sys: SystemSpec, u0: GridField, t: float, delta: float = None,
                              max_fronts: int = 200_000) -> GridField:
    """Entropy solution at time ``t`` of a constant-frame system, sampled on ``u0``'s grid.

    ``u0`` is read as piecewise constant with jumps at cell midpoints. Each
    component of ``w = R^{-1} u`` is front-tracked with its own scalar flux
    (breakpoint spacing ``delta``, default range/4000) and the result is mapped
    back by ``R``.
    """
    if not sys.constant_frame or sys.laws is None:
        raise ValueError(f"{sys.name} is not a constant-frame system with scalar laws")
    U = u0.values.reshape(u0.size, sys.n)
    W = sys.to_w(U)
    out = np.empty_like(W)
    for i in range(sys.n):
        comp = W[:, i]
        spread = float(np.ptp(comp))
        d = delta if delta is not None else (spread / 4000 if spread > 0 else 1.0)
        breaks_x, values = _pieces(u0, comp)
        sol = front_track(sys.laws[i].flux, breaks_x, values, t, d, max_fronts)
        out[:, i] = sol.sample(u0.x)
    values = U + sys.from_w(out - W)
    return GridField(u0.x0, u0.dx, float(t), values.reshape(u0.values.shape))
