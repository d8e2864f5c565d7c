"""Exact Riemann solutions of Temple-class systems.

The solution of ``u_t + f(u)_x = 0`` with data ``u_l | u_r`` is assembled from
``n`` scalar problems: wave ``i`` moves along the rarefaction curve
``R_i(.; w_{i-1})`` and its position on that curve solves
``z_t + F_i(z)_x = 0`` with ``F_i(w) = int_0^w lambda_i(R_i(s; w_{i-1})) ds``
and step data ``0 | sigma_i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from .errors import DegenerateFlux, InteractionReached, NoConvergence, OutOfDomain, SectorOverlap
from .system import SystemSpec, frames

CURVE_STEP = 1e-2
NEWTON_TOL = 1e-12
MAX_ITER = 50
MIN_NODES = 256
MAX_NODES = 4096
HULL_TOL = 1e-10
DERIVATIVE_TOL = 1e-8
FLAT_TOL = 1e-12


# ---------------------------------------------------------------------------
# rarefaction curves


def _direction(sys: SystemSpec, i: int, u: np.ndarray, ref: Optional[np.ndarray]):
    lam, _, R, _ = frames(sys, u[None], ref=None if ref is None else ref[None])
    return R[0][:, i].copy(), R[0], lam[0, i]


def _check_inside(sys: SystemSpec, u: np.ndarray, i: int, s: float) -> None:
    if not sys.contains(u, slack=1e-12):
        raise OutOfDomain(f"rarefaction curve {i + 1} leaves the domain box at sigma = {s:.6g}")


def curve_nodes(sys: SystemSpec, i: int, u_minus, omega: np.ndarray,
                curve_step: float = CURVE_STEP) -> np.ndarray:
    """States ``R_i(omega_k; u_minus)`` at the sorted nodes ``omega`` (which contain 0).

    Classical RK4 along ``dR/ds = r_i(R)``, marching outward from ``s = 0`` in
    both directions with steps no longer than ``curve_step``. Eigenvector signs
    follow the frame at the previous point so the direction field is continuous.
    """
    u_minus = np.asarray(u_minus, dtype=float)
    omega = np.asarray(omega, dtype=float)
    out = np.empty((omega.size, sys.n))
    zero = int(np.argmin(np.abs(omega)))
    if omega[zero] != 0.0:
        raise ValueError("curve nodes must include 0")
    out[zero] = u_minus
    _, ref0, _ = _direction(sys, i, u_minus, None)
    for direction in (1, -1):
        u, s, ref = u_minus.copy(), 0.0, ref0
        k = zero + direction
        while 0 <= k < omega.size:
            target = omega[k]
            span = target - s
            steps = max(1, math.ceil(abs(span) / curve_step - 1e-12))
            h = span / steps
            for _ in range(steps):
                k1, ref, _ = _direction(sys, i, u, ref)
                k2, _, _ = _direction(sys, i, u + 0.5 * h * k1, ref)
                k3, _, _ = _direction(sys, i, u + 0.5 * h * k2, ref)
                k4, _, _ = _direction(sys, i, u + h * k3, ref)
                u = u + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                s += h
                _check_inside(sys, u, i, s)
            s = target
            out[k] = u
            k += direction
    return out


def rarefaction_curve(sys: SystemSpec, i: int, u_minus, sigma: float,
                      curve_step: float = CURVE_STEP) -> np.ndarray:
    """``R_i(sigma; u_minus)``: the point at signed arclength ``sigma`` on the ``i``-curve."""
    u_minus = np.asarray(u_minus, dtype=float)
    _check_inside(sys, u_minus, i, 0.0)
    if sigma == 0.0:
        return u_minus.copy()
    nodes = np.array([0.0, sigma]) if sigma > 0 else np.array([sigma, 0.0])
    states = curve_nodes(sys, i, u_minus, nodes, curve_step)
    return states[1] if sigma > 0 else states[0]


def straight_line_defect(sys: SystemSpec, i: int, u_minus, sigma: float,
                         curve_step: float = CURVE_STEP) -> float:
    """Distance between the integrated curve and ``u_minus + sigma r_i(u_minus)``."""
    u_minus = np.asarray(u_minus, dtype=float)
    r, _, _ = _direction(sys, i, u_minus, None)
    end = rarefaction_curve(sys, i, u_minus, sigma, curve_step)
    return float(np.linalg.norm(end - (u_minus + sigma * r)))


# ---------------------------------------------------------------------------
# wave decomposition


def _compose(sys, u_l, sigma, curve_step):
    w = [np.asarray(u_l, dtype=float)]
    for i in range(sys.n):
        w.append(rarefaction_curve(sys, i, w[-1], float(sigma[i]), curve_step))
    return np.array(w)


def wave_decomposition(sys: SystemSpec, u_l, u_r, newton_tol: float = NEWTON_TOL,
                       max_iter: int = MAX_ITER, curve_step: float = CURVE_STEP,
                       fd_step: float = 1e-7):
    """Strengths ``sigma`` and intermediate states ``w_0 = u_l, ..., w_n = u_r``.

    Newton on ``Phi(sigma) = R_n(sigma_n; ... R_1(sigma_1; u_l)) - u_r`` with a
    central-difference Jacobian, started from ``sigma_i = l_i(u_l) . (u_r - u_l)``.
    A step that does not reduce ``|Phi|`` is halved up to 30 times.
    """
    u_l = np.asarray(u_l, dtype=float)
    u_r = np.asarray(u_r, dtype=float)
    sys.require_inside(u_l, "left state")
    sys.require_inside(u_r, "right state")
    _, _, _, L = frames(sys, u_l[None])
    sigma = L[0] @ (u_r - u_l)
    n = sys.n

    def phi(s):
        w = _compose(sys, u_l, s, curve_step)
        return w[-1] - u_r, w

    res, w = phi(sigma)
    norm = float(np.linalg.norm(res))
    for _ in range(max_iter):
        if norm <= newton_tol:
            return sigma, w
        J = np.empty((n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = fd_step
            J[:, k] = (phi(sigma + e)[0] - phi(sigma - e)[0]) / (2 * fd_step)
        step = np.linalg.solve(J, res)
        scale = 1.0
        for _ in range(30):
            trial = sigma - scale * step
            try:
                t_res, t_w = phi(trial)
            except OutOfDomain:
                scale *= 0.5
                continue
            t_norm = float(np.linalg.norm(t_res))
            if t_norm < norm or t_norm <= newton_tol:
                break
            scale *= 0.5
        else:
            raise NoConvergence(f"damped Newton stalled at |Phi| = {norm:.3e}")
        sigma, res, w, norm = trial, t_res, t_w, t_norm
    if norm <= newton_tol:
        return sigma, w
    raise NoConvergence(f"no convergence after {max_iter} iterations (|Phi| = {norm:.3e})")


# ---------------------------------------------------------------------------
# scalar fluxes and their entropy solutions


@dataclass(frozen=True)
class ScalarFlux:
    """``F_i`` tabulated on a uniform grid of ``[min(0, sigma), max(0, sigma)]``."""

    family: int
    base: np.ndarray
    sigma: float
    omega: np.ndarray
    F: np.ndarray
    lam: np.ndarray
    states: np.ndarray
    derivative_defect: float

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        if self.omega.size < 2:
            return np.zeros_like(w)
        # F(0) = 0 exactly, also when 0 is the right end of the spline
        return np.where(w == 0.0, 0.0, CubicHermiteSpline(self.omega, self.F, self.lam)(w))

    def convexity(self) -> List[str]:
        """``convex``, ``concave`` or ``linear`` for each tabulation interval."""
        dl = np.diff(self.lam)
        band = 1e-12 * (1.0 + np.abs(self.lam).max())
        return ["convex" if d > band else "concave" if d < -band else "linear" for d in dl]

    def state(self, w) -> np.ndarray:
        """``R_i(w; base)`` by interpolation between tabulated curve nodes."""
        w = np.asarray(w, dtype=float)
        if self.omega.size < 2:
            return np.broadcast_to(self.base, w.shape + (self.base.size,)).copy()
        return np.stack([np.interp(w, self.omega, self.states[:, k])
                         for k in range(self.base.size)], axis=-1)


def _fourth_order_slope(F: np.ndarray, h: float) -> np.ndarray:
    d = np.gradient(F, h, edge_order=2)
    if F.size >= 5:
        d[2:-2] = (F[:-4] - 8 * F[1:-3] + 8 * F[3:-1] - F[4:]) / (12 * h)
    return d


def _tabulate(sys, i, w_prev, sigma, nodes, curve_step):
    omega = np.linspace(min(0.0, sigma), max(0.0, sigma), nodes + 1)
    # pin 0 exactly so F(0) = 0 holds to the last bit
    omega[0 if sigma > 0 else -1] = 0.0
    states = curve_nodes(sys, i, w_prev, omega, curve_step)
    lam = frames(sys, states)[0][:, i]
    G = cumulative_simpson(lam, x=omega, initial=0.0)
    F = G - (G[0] if sigma > 0 else G[-1])
    h = omega[1] - omega[0]
    scale = 1.0 + float(np.abs(lam).max())
    defect = float(np.abs(_fourth_order_slope(F, h) - lam).max()) / scale
    return ScalarFlux(i, np.asarray(w_prev, dtype=float).copy(), float(sigma), omega, F, lam,
                      states, defect)


def scalar_flux(sys: SystemSpec, i: int, w_prev, sigma_max: float, nodes: int = MIN_NODES,
                curve_step: float = CURVE_STEP, derivative_tol: float = DERIVATIVE_TOL,
                max_nodes: int = MAX_NODES) -> ScalarFlux:
    """Tabulate ``F_i`` by cumulative Simpson quadrature of ``lambda_i`` along the curve.

    The node count starts at ``nodes`` (at least 256) and doubles while the
    fourth-order slope of ``F`` deviates from ``lambda_i`` by more than
    ``derivative_tol`` (relative to ``1 + max|lambda_i|``).
    """
    w_prev = np.asarray(w_prev, dtype=float)
    sys.require_inside(w_prev, "base state")
    if sigma_max == 0.0:
        lam = frames(sys, w_prev[None])[0][:, i]
        return ScalarFlux(i, w_prev.copy(), 0.0, np.zeros(1), np.zeros(1), lam,
                          w_prev[None].copy(), 0.0)
    nodes = max(int(nodes), MIN_NODES)
    nodes += nodes % 2
    while True:
        F = _tabulate(sys, i, w_prev, sigma_max, nodes, min(curve_step, abs(sigma_max) / nodes))
        if F.derivative_defect <= derivative_tol or 2 * nodes > max_nodes:
            return F
        nodes *= 2


def _hull(x: np.ndarray, y: np.ndarray, lower: bool, tol: float) -> List[int]:
    """Monotone-chain lower (or upper) hull of points with increasing ``x``.

    Points within ``tol`` of a chord are dropped, so collinear runs collapse
    into one segment.
    """
    sign = 1.0 if lower else -1.0
    out: List[int] = []
    for k in range(x.size):
        while len(out) >= 2:
            o, a = out[-2], out[-1]
            cross = (x[a] - x[o]) * (y[k] - y[o]) - (y[a] - y[o]) * (x[k] - x[o])
            if sign * cross <= tol:
                out.pop()
            else:
                break
        out.append(k)
    return out


@dataclass(frozen=True)
class Wave:
    kind: str  # shock | rarefaction | contact
    speeds: tuple
    z_left: float
    z_right: float

    def to_dict(self) -> dict:
        return {"type": self.kind, "speeds": list(self.speeds),
                "z_left": self.z_left, "z_right": self.z_right}


@dataclass(frozen=True)
class ScalarProfile:
    """Self-similar entropy solution ``z(xi)`` of ``z_t + F(z)_x = 0`` with data ``0 | sigma``.

    ``knots_xi`` is non-decreasing and ``z`` is linear between knots; repeated
    ``xi`` knots are jumps.
    """

    sigma: float
    knots_xi: np.ndarray
    knots_z: np.ndarray
    waves: tuple
    envelope_nodes: np.ndarray  # hull vertex indices into the tabulation grid
    entropy_defect: float

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.knots_xi.size == 0:
            return np.zeros_like(xi)
        kx, kz = self.knots_xi, self.knots_z
        j = np.searchsorted(kx, xi, side="right")
        out = np.where(j == 0, 0.0, self.sigma)
        mid = (j > 0) & (j < kx.size)
        if np.any(mid):
            a, b = j[mid] - 1, j[mid]
            span = kx[b] - kx[a]
            frac = np.where(span > 0, (xi[mid] - kx[a]) / np.where(span > 0, span, 1.0), 1.0)
            out[mid] = kz[a] + frac * (kz[b] - kz[a])
        return out

    @property
    def speed_range(self):
        if self.knots_xi.size == 0:
            return None
        return float(self.knots_xi[0]), float(self.knots_xi[-1])

    def envelope(self, F: ScalarFlux, w) -> np.ndarray:
        idx = self.envelope_nodes
        return np.interp(w, F.omega[idx], F.F[idx])


def scalar_riemann(F: ScalarFlux, flat_tol: float = FLAT_TOL) -> ScalarProfile:
    """Entropy solution of the scalar Riemann problem ``0 | sigma`` for the tabulated flux.

    ``sigma > 0`` uses the lower convex envelope on ``[0, sigma]``; ``sigma < 0``
    the upper concave envelope on ``[sigma, 0]``. Envelope chords are shocks (or
    contacts when ``F`` itself is linear there); runs of adjacent nodes are
    rarefactions, inverted through the tabulated ``lambda``.
    """
    sigma = F.sigma
    if sigma == 0.0:
        return ScalarProfile(0.0, np.zeros(0), np.zeros(0), (), np.zeros(1, dtype=int), 0.0)
    w, f, lam = F.omega, F.F, F.lam
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(lam))):
        raise DegenerateFlux("non-finite flux tabulation")
    scale = (w[-1] - w[0]) * (np.ptp(f) + (w[-1] - w[0]) * (1.0 + np.abs(lam).max()))
    idx = _hull(w, f, lower=sigma > 0, tol=1e-14 * scale)
    path = idx if sigma > 0 else idx[::-1]

    knots_xi: List[float] = []
    knots_z: List[float] = []
    waves: List[Wave] = []
    entropy = 0.0
    k = 0
    while k < len(path) - 1:
        a, b = path[k], path[k + 1]
        if abs(b - a) == 1:
            # run of adjacent nodes: a rarefaction
            run = [a, b]
            k += 1
            while k < len(path) - 1 and abs(path[k + 1] - path[k]) == 1:
                run.append(path[k + 1])
                k += 1
            for node in run:
                knots_xi.append(float(lam[node]))
                knots_z.append(float(w[node]))
            waves.append(Wave("rarefaction", (float(lam[run[0]]), float(lam[run[-1]])),
                              float(w[run[0]]), float(w[run[-1]])))
            continue
        s = float((f[b] - f[a]) / (w[b] - w[a]))
        lo, hi = min(a, b), max(a, b)
        chord = f[a] + s * (w[lo:hi + 1] - w[a])
        gap = f[lo:hi + 1] - chord
        # Oleinik: chord below F for sigma > 0, above for sigma < 0
        entropy = max(entropy, float(np.max(-gap if sigma > 0 else gap)))
        kind = "contact" if float(np.abs(gap).max()) <= flat_tol * (1.0 + np.abs(f).max()) else "shock"
        knots_xi += [s, s]
        knots_z += [float(w[a]), float(w[b])]
        waves.append(Wave(kind, (s,), float(w[a]), float(w[b])))
        k += 1
    kx = np.maximum.accumulate(np.array(knots_xi))
    return ScalarProfile(float(sigma), kx, np.array(knots_z), tuple(waves),
                         np.array(idx), entropy)


def stable_profile(sys: SystemSpec, i: int, w_prev, sigma: float, nodes: int = MIN_NODES,
                   hull_tol: float = HULL_TOL, max_nodes: int = MAX_NODES,
                   curve_step: float = CURVE_STEP):
    """Tabulate and solve, doubling the grid until the envelope moves by at most ``hull_tol``.

    Returns ``(flux, profile, change)`` where ``change`` is the last envelope
    difference measured on the coarser grid's nodes.
    """
    F = scalar_flux(sys, i, w_prev, sigma, nodes, curve_step, max_nodes=max_nodes)
    P = scalar_riemann(F)
    if sigma == 0.0:
        return F, P, 0.0
    change = math.inf
    while 2 * (F.omega.size - 1) <= max_nodes:
        F2 = scalar_flux(sys, i, w_prev, sigma, 2 * (F.omega.size - 1), curve_step,
                         max_nodes=max_nodes)
        P2 = scalar_riemann(F2)
        change = float(np.abs(P2.envelope(F2, F.omega) - P.envelope(F, F.omega)).max())
        F, P = F2, P2
        if change <= hull_tol:
            break
    return F, P, change


# ---------------------------------------------------------------------------
# fans


@dataclass(frozen=True)
class RiemannFan:
    sys: SystemSpec
    u_l: np.ndarray
    u_r: np.ndarray
    sigma: np.ndarray
    w: np.ndarray  # (n + 1, n)
    lambda_bar: np.ndarray  # (n - 1,)
    fluxes: tuple
    z: tuple  # ScalarProfile per family
    speed_ranges: np.ndarray  # (n, 2)
    hull_change: float = 0.0

    def sample(self, t: float, x) -> np.ndarray:
        """``u(t, x)``; only ``x / t`` matters for ``t > 0``."""
        x = np.asarray(x, dtype=float)
        if t <= 0:
            xi = np.where(x < 0, -np.inf, np.inf)
        else:
            xi = x / t
        sector = np.searchsorted(self.lambda_bar, xi, side="right")
        out = np.empty(xi.shape + (self.sys.n,))
        for i in range(self.sys.n):
            m = sector == i
            if np.any(m):
                out[m] = self.fluxes[i].state(self.z[i](xi[m]))
        return out

    @property
    def span(self):
        """Slowest and fastest signal speed, or ``None`` for a constant fan."""
        active = [i for i in range(self.sys.n) if self.z[i].speed_range is not None]
        if not active:
            return None
        return (float(min(self.speed_ranges[i, 0] for i in active)),
                float(max(self.speed_ranges[i, 1] for i in active)))

    def to_dict(self) -> dict:
        return {
            "u_l": self.u_l.tolist(), "u_r": self.u_r.tolist(),
            "sigma": self.sigma.tolist(), "w": self.w.tolist(),
            "lambda_bar": self.lambda_bar.tolist(),
            "families": [{"family": i + 1, "sigma": float(self.sigma[i]),
                          "waves": [wv.to_dict() for wv in self.z[i].waves]}
                         for i in range(self.sys.n)],
        }


def solve_riemann(sys: SystemSpec, u_l, u_r, curve_step: float = CURVE_STEP,
                  nodes: int = MIN_NODES) -> RiemannFan:
    sigma, w = wave_decomposition(sys, u_l, u_r, curve_step=curve_step)
    n = sys.n
    # strengths below Newton noise carry no wave
    sigma = np.where(np.abs(sigma) <= 1e-13, 0.0, sigma)
    fluxes, profiles, ranges = [], [], np.empty((n, 2))
    worst = 0.0
    for i in range(n):
        F, P, change = stable_profile(sys, i, w[i], float(sigma[i]), nodes, curve_step=curve_step)
        worst = max(worst, change)
        fluxes.append(F)
        profiles.append(P)
        ranges[i] = P.speed_range if P.speed_range is not None else (F.lam[0], F.lam[0])
    for i in range(n - 1):
        if ranges[i, 1] >= ranges[i + 1, 0]:
            raise SectorOverlap(f"family {i + 1} speeds reach {ranges[i, 1]:.6g} but family "
                                f"{i + 2} starts at {ranges[i + 1, 0]:.6g}")
    lambda_bar = 0.5 * (ranges[:-1, 1] + ranges[1:, 0])
    return RiemannFan(sys, np.asarray(u_l, dtype=float), np.asarray(u_r, dtype=float), sigma, w,
                      lambda_bar, tuple(fluxes), tuple(profiles), ranges, worst)


@dataclass(frozen=True)
class GluedSolution:
    """Non-interacting fans placed at the jumps of piecewise-constant data."""

    breaks: np.ndarray
    states: np.ndarray
    fans: tuple
    horizon: float
    t: float

    def sample(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.states[np.searchsorted(self.breaks, x, side="right")].copy()
        if self.t <= 0:
            return out
        for xk, fan in zip(self.breaks, self.fans):
            span = fan.span
            if span is None:
                continue
            # the fan also owns the gap between the jump and its cone
            lo, hi = min(span[0], 0.0) * self.t, max(span[1], 0.0) * self.t
            m = (x >= xk + lo) & (x <= xk + hi)
            if np.any(m):
                out[m] = fan.sample(self.t, x[m] - xk)
        return out


def interaction_horizon(breaks: Sequence[float], fans: Sequence[RiemannFan]) -> float:
    """First time two neighbouring fan cones touch (``inf`` if they never do)."""
    horizon = math.inf
    spans = [f.span for f in fans]
    for k in range(len(fans) - 1):
        left, right = spans[k], spans[k + 1]
        if left is None or right is None:
            # a constant fan emits nothing; look past it
            continue
        closing = left[1] - right[0]
        if closing > 0:
            horizon = min(horizon, (breaks[k + 1] - breaks[k]) / closing)
    # cones separated by constant fans can still meet
    active = [k for k, s in enumerate(spans) if s is not None]
    for a, b in zip(active, active[1:]):
        if b != a + 1:
            closing = spans[a][1] - spans[b][0]
            if closing > 0:
                horizon = min(horizon, (breaks[b] - breaks[a]) / closing)
    return horizon


def glued_evolution(sys: SystemSpec, breaks: Sequence[float], states, t: float,
                    curve_step: float = CURVE_STEP) -> GluedSolution:
    """Evolve piecewise-constant data exactly up to the first fan interaction.

    ``states[k]`` holds on ``(breaks[k-1], breaks[k])`` with the outer pieces
    unbounded, so ``len(states) == len(breaks) + 1``.
    """
    breaks = np.asarray(breaks, dtype=float)
    states = np.asarray(states, dtype=float).reshape(-1, sys.n)
    if states.shape[0] != breaks.size + 1:
        raise ValueError("need one more state than breaks")
    if np.any(np.diff(breaks) <= 0):
        raise ValueError("breaks must increase")
    fans = tuple(solve_riemann(sys, states[k], states[k + 1], curve_step)
                 for k in range(breaks.size))
    horizon = interaction_horizon(breaks, fans)
    if t > horizon:
        raise InteractionReached(f"t = {t:.6g} exceeds the safe horizon {horizon:.6g}")
    return GluedSolution(breaks, states, fans, horizon, float(t))
