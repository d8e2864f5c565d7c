"""Experiment protocols. Every study returns an :class:`EstimateReport` whose
pass flag is computed from recorded scalars and a recorded threshold."""
from __future__ import annotations

import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import nnls

from .coefficients import source_phi
from .config import piecewise_values
from .errors import InteractionReached, NoReference, OutOfDomain
from .fronttrack import front_track
from .grid import GridField, SolveConfig, central_derivative, second_derivative, total_variation
from .report import EstimateReport
from .riemann import glued_evolution
from .system import SystemSpec, frames
from .viscous import ViscousStepper, gradient_decompose, residual_v_equation, solve_linearized, \
    solve_viscous


def fit_power(x: Sequence[float], y: Sequence[float], model: str = "C*x^p") -> dict:
    """Least-squares fit of ``log y = log C + p log x``; residual is the RMS in log space."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    p, logc = np.polyfit(lx, ly, 1)
    res = ly - (logc + p * lx)
    return {"model": model, "exponent": float(p), "constant": float(math.exp(logc)),
            "residual": float(np.sqrt(np.mean(res**2)))}


def _diff_l1(a: GridField, b: GridField) -> float:
    return a.with_values(a.values - b.values).l1()


def frame_condition(sys: SystemSpec) -> float:
    """``cond(R)`` in the spectral norm for constant-frame systems."""
    if not sys.constant_frame:
        raise ValueError(f"{sys.name} has no constant frame")
    return float(np.linalg.cond(sys.frame_matrix))


def default_tv_threshold(sys: SystemSpec) -> Optional[float]:
    if sys.n == 1:
        return 1.0 + 1e-6
    if sys.constant_frame:
        return frame_condition(sys) * (1.0 + 1e-6)
    return None


def common_step(sys: SystemSpec, fields: Sequence[GridField], cfg: SolveConfig,
                safety: float = 0.5) -> float:
    """A fixed step valid for every field, shrunk by ``safety`` to leave room for evolution."""
    stepper = ViscousStepper(sys, fields[0].dx, cfg.but(dt=None))
    dts = [stepper.time_step(stepper.stage(f.values.reshape(f.size, sys.n))) for f in fields]
    return safety * float(min(dts))


# ---------------------------------------------------------------------------
# solver consistency


def residual_convergence_study(sys: SystemSpec, u0_fn: Callable, x_min: float, x_max: float,
                               cells: Sequence[int], epsilon: float, t: float,
                               min_order: float = 0.8) -> EstimateReport:
    """L1 mismatch of the gradient-component equation under grid refinement.

    Three records ``t - tau, t, t + tau`` with ``tau = dx / 2`` feed the centred
    time derivative; the fitted order is the slope of ``log mismatch`` against
    ``log dx``.
    """
    dxs, mism = [], []
    for m in cells:
        u0 = _sample(u0_fn, x_min, x_max, m)
        tau = 0.5 * u0.dx
        cfg = SolveConfig(epsilon=epsilon, t_end=t + tau, record_times=(t - tau, t, t + tau))
        rep = residual_v_equation(sys, solve_viscous(sys, u0, cfg), epsilon)
        dxs.append(u0.dx)
        mism.append(rep.scalars["l1_mismatch"])
    fit = fit_power(dxs, mism, "C*dx^p")
    return EstimateReport(
        name="residual_convergence",
        scalars={"system": sys.name, "epsilon": epsilon, "t": t, "order": fit["exponent"]},
        series={"dx": dxs, "l1_mismatch": mism}, fit=fit,
        threshold={"min_order": min_order}, passed=fit["exponent"] >= min_order)


def _sample(fn, x_min, x_max, cells) -> GridField:
    x = np.linspace(x_min, x_max, cells + 1)
    return GridField(x_min, (x_max - x_min) / cells, 0.0, np.asarray(fn(x), dtype=float))


def linearization_check(sys: SystemSpec, u0: GridField, h0: GridField, cfg: SolveConfig,
                        delta: float = 1e-4, factor: float = 5.0) -> EstimateReport:
    """Compare the linearized solution with ``(u^{delta} - u) / delta``.

    ``u^delta`` starts from ``u0 + delta h0``. All three integrations use one
    fixed step so they share the step sequence. Passes when the L1 gap at
    ``t_end`` is at most ``factor (delta + dx) |h0|_1``.
    """
    if cfg.dt is None:
        cfg = cfg.but(dt=common_step(sys, [u0, u0.with_values(u0.values + delta * h0.values)], cfg))
    cfg = cfg.but(record_times=(0.0, cfg.t_end))
    base = solve_viscous(sys, u0, cfg)
    moved = solve_viscous(sys, u0.with_values(u0.values + delta * h0.values), cfg)
    h = solve_linearized(sys, base, h0, cfg)[-1]
    quotient = (moved[-1].values - base[-1].values) / delta
    gap = h.with_values(h.values - quotient).l1()
    tol = factor * (delta + u0.dx) * h0.l1()
    return EstimateReport(
        name="linearization",
        scalars={"l1_gap": gap, "h_l1": h.l1(), "h0_l1": h0.l1(), "delta": delta, "dx": u0.dx,
                 "dt": cfg.dt, "t_end": cfg.t_end},
        threshold={"l1_gap": tol}, passed=gap <= tol)


# ---------------------------------------------------------------------------
# parabolic decay


def decay_study(sys: SystemSpec, u0: GridField, epsilon: float, t_end: float,
                h0: Optional[GridField] = None, t_min_frac: float = 0.05, records: int = 24,
                window: Tuple[float, float] = (-0.65, -0.35)) -> EstimateReport:
    """Fit ``|u_xx(t)|_1 ~ C t^p`` (and ``|h_x(t)|_1`` when ``h0`` is given) for ``t >= t_min``."""
    t_min = t_min_frac * t_end
    times = tuple(np.round(np.geomspace(t_min, t_end, records), 12))
    cfg = SolveConfig(epsilon=epsilon, t_end=t_end, record_times=(0.0,) + times)
    traj = solve_viscous(sys, u0, cfg)
    later = traj[1:]
    uxx = []
    for f in later:
        v = f.values.reshape(f.size, -1)
        uxx.append(float(f.dx * np.linalg.norm(second_derivative(v, f.dx)[1:-1], axis=-1).sum()))
    fits = {"uxx": fit_power(times, uxx, "C*t^p")}
    series = {"t": list(times), "uxx_l1": uxx}
    if h0 is not None:
        hs = solve_linearized(sys, traj, h0, cfg)[1:]
        hx = []
        for f in hs:
            v = f.values.reshape(f.size, -1)
            hx.append(float(f.dx * np.linalg.norm(central_derivative(v, f.dx), axis=-1).sum()))
        fits["hx"] = fit_power(times, hx, "C*t^p")
        series["hx_l1"] = hx
    lo, hi = window
    ok = all(lo <= fit["exponent"] <= hi for fit in fits.values())
    scalars = {f"exponent_{k}": fit["exponent"] for k, fit in fits.items()}
    scalars.update({"epsilon": epsilon, "t_min": t_min, "t_end": t_end,
                    "tv0": total_variation(u0)})
    return EstimateReport(name="decay", scalars=scalars, series=series,
                          fit={k: v for k, v in fits.items()},
                          threshold={"exponent_min": lo, "exponent_max": hi}, passed=ok)


# ---------------------------------------------------------------------------
# BV uniformity


def bv_study(sys: SystemSpec, u0: GridField, eps_list: Sequence[float], t_end: float,
             records: int = 20, delta0: float = 0.1,
             tv_threshold: Optional[float] = None) -> EstimateReport:
    """``sup_t TV(u^eps(t)) / TV(u0)`` for each ``eps`` plus the source budget ``int int sum|phi|``.

    The TV ratio is checked against ``tv_threshold`` (default: ``1 + 1e-6`` for
    scalar laws, ``cond(R)(1 + 1e-6)`` for constant-frame systems); without a
    threshold the pass flag is the source budget ``<= delta0 / 2``.
    """
    tv0 = total_variation(u0)
    threshold = tv_threshold if tv_threshold is not None else default_tv_threshold(sys)
    times = tuple(np.linspace(0.0, t_end, records + 1))
    series = {"epsilon": [], "sup_tv": [], "ratio": [], "phi_budget": []}
    for eps in sorted(eps_list, reverse=True):
        traj = solve_viscous(sys, u0, SolveConfig(epsilon=eps, t_end=t_end, record_times=times))
        tvs = [total_variation(f) for f in traj]
        rates = []
        for f in traj:
            U = f.values.reshape(f.size, sys.n)
            V = np.stack([g.values for g in gradient_decompose(sys, f)], axis=1)
            phi = source_phi(sys, U, V, central_derivative(V, f.dx), eps)
            rates.append(float(f.dx * np.abs(phi).sum()))
        budget = float(trapezoid(rates, times))
        series["epsilon"].append(eps)
        series["sup_tv"].append(max(tvs))
        series["ratio"].append(max(tvs) / tv0 if tv0 > 0 else 0.0)
        series["phi_budget"].append(budget)
    L1 = max(series["ratio"]) if series["ratio"] else 0.0
    phi_max = max(series["phi_budget"]) if series["phi_budget"] else 0.0
    scalars = {"tv0": tv0, "L1_fit": L1, "sup_tv": max(series["sup_tv"]), "phi_budget": phi_max,
               "delta0": delta0, "pass_phi_budget": phi_max <= 0.5 * delta0}
    thr = {"phi_budget": 0.5 * delta0}
    if threshold is not None:
        thr["L1_fit"] = threshold
        passed = L1 <= threshold
    else:
        passed = phi_max <= 0.5 * delta0
    return EstimateReport(name="bv", scalars=scalars, series=series, threshold=thr, passed=passed)


# ---------------------------------------------------------------------------
# L1 stability


def stability_study(sys: SystemSpec, u0: GridField, v0: GridField, epsilon: float, t_end: float,
                    theta_count: int = 8, records: int = 10, ratio_threshold: Optional[float] = None,
                    slack: float = 0.05) -> EstimateReport:
    """Direct L1 ratio and the homotopy bound ``|u - v| <= mean_theta |h^theta|``.

    All runs share one fixed step. ``theta`` runs over midpoints of a uniform
    partition of ``[0, 1]``, the path being ``u0 + theta (v0 - u0)``. The homotopy
    check allows a relative ``slack`` for the theta quadrature.
    """
    u0.require_same_grid(v0)
    diff0 = v0.values - u0.values
    d0 = u0.with_values(diff0).l1()
    times = tuple(np.linspace(0.0, t_end, records + 1))
    base_cfg = SolveConfig(epsilon=epsilon, t_end=t_end, record_times=times)
    thetas = (np.arange(theta_count) + 0.5) / theta_count
    starts = [u0, v0] + [u0.with_values(u0.values + th * diff0) for th in thetas]
    cfg = base_cfg.but(dt=common_step(sys, starts, base_cfg))
    if ratio_threshold is None:
        if sys.n == 1:
            ratio_threshold = 1.0 + 1e-6
        elif sys.constant_frame:
            ratio_threshold = frame_condition(sys) + 1e-6
    if d0 == 0.0:
        zeros = [0.0] * len(times)
        return EstimateReport(
            name="stability",
            scalars={"max_ratio": 0.0, "max_homotopy_ratio": 0.0, "initial_l1": 0.0,
                     "theta_count": theta_count, "dt": cfg.dt},
            series={"t": list(times), "ratio": zeros, "homotopy_bound": zeros},
            threshold={"max_ratio": ratio_threshold, "homotopy_slack": slack})
    u = solve_viscous(sys, u0, cfg)
    v = solve_viscous(sys, v0, cfg)
    dist = np.array([_diff_l1(a, b) for a, b in zip(u, v)])
    hsum = np.zeros(len(times))
    for th in thetas:
        start = u0.with_values(u0.values + th * diff0)
        traj = solve_viscous(sys, start, cfg)
        hs = solve_linearized(sys, traj, u0.with_values(diff0), cfg)
        hsum += np.array([h.l1() for h in hs])
    bound = hsum / theta_count
    ratio = dist / d0
    homotopy = np.where(bound > 0, dist / np.where(bound > 0, bound, 1.0), 0.0)
    max_ratio = float(ratio.max())
    max_hom = float(homotopy.max())
    ok_direct = ratio_threshold is None or max_ratio <= ratio_threshold
    ok_hom = max_hom <= 1.0 + slack
    return EstimateReport(
        name="stability",
        scalars={"max_ratio": max_ratio, "L2_fit": max_ratio, "max_homotopy_ratio": max_hom,
                 "L3_fit": float((bound / d0).max()), "initial_l1": d0,
                 "theta_count": theta_count, "dt": cfg.dt,
                 "pass_direct": ok_direct, "pass_homotopy": ok_hom},
        series={"t": list(times), "ratio": ratio.tolist(), "distance": dist.tolist(),
                "homotopy_bound": bound.tolist()},
        threshold={"max_ratio": ratio_threshold, "homotopy_slack": slack},
        passed=ok_direct and ok_hom)


# ---------------------------------------------------------------------------
# time continuity


def time_continuity_study(sys: SystemSpec, u0: GridField, eps_list: Sequence[float],
                          time_pairs: Sequence[Tuple[float, float]],
                          max_residual: float = 0.25) -> EstimateReport:
    """Fit ``|u(t) - u(s)|_1 = a |t - s| + b sqrt(eps) |sqrt t - sqrt s|`` with ``a, b >= 0``."""
    pairs = [(min(s, t), max(s, t)) for s, t in time_pairs]
    times = sorted({x for p in pairs for x in p})
    rows, data = [], []
    series = {"epsilon": [], "s": [], "t": [], "distance": []}
    for eps in sorted(eps_list, reverse=True):
        traj = solve_viscous(sys, u0, SolveConfig(epsilon=eps, t_end=max(times),
                                                  record_times=tuple(times)))
        at = {f.t: f for f in traj}
        for s, t in pairs:
            d = _diff_l1(at[t], at[s])
            rows.append([t - s, math.sqrt(eps) * (math.sqrt(t) - math.sqrt(s))])
            data.append(d)
            for k, val in zip(("epsilon", "s", "t", "distance"), (eps, s, t, d)):
                series[k].append(val)
    M = np.array(rows)
    y = np.array(data)
    norm = float(np.linalg.norm(y))
    if norm == 0.0:
        coef, resid = np.zeros(2), 0.0
    else:
        coef, rnorm = nnls(M, y)
        resid = float(rnorm) / norm
    fit = {"model": "a*|t-s| + b*sqrt(eps)*|sqrt(t)-sqrt(s)|", "a": float(coef[0]),
           "b": float(coef[1]), "residual": resid}
    return EstimateReport(
        name="time_continuity",
        scalars={"a": float(coef[0]), "b": float(coef[1]), "relative_residual": resid,
                 "tv0": total_variation(u0)},
        series=series, fit=fit, threshold={"relative_residual": max_residual},
        passed=resid <= max_residual)


# ---------------------------------------------------------------------------
# finite speed of propagation


def _support(diff: np.ndarray, x: np.ndarray) -> Tuple[float, float]:
    nz = np.flatnonzero(diff > 0)
    if nz.size == 0:
        return 0.0, 0.0
    return float(x[nz[0]]), float(x[nz[-1]])


def _tail_slope(x: np.ndarray, d: np.ndarray, mask: np.ndarray) -> Optional[float]:
    m = mask & (d > 1e-300)
    if m.sum() < 3:
        return None
    return float(np.polyfit(x[m], np.log(d[m]), 1)[0])


def propagation_study(sys: SystemSpec, u0: GridField, v0: GridField, eps_list: Sequence[float],
                      t: float, support: Optional[Tuple[float, float]] = None,
                      sup_factor: float = 1e-6, scaling_tol: float = 0.3) -> EstimateReport:
    """Exponential smallness of ``|u - v|`` outside the cone ``[a - beta1 t - m, b + beta1 t + m]``.

    ``beta1 = 2 max|lambda|`` over the run and ``m = 10 sqrt(eps t)``. The tail
    ``log|u - v|`` is fitted linearly in ``x`` on a window fixed by the smallest
    ``eps`` (nodes outside every cone where that run is above underflow), so the
    slopes of different ``eps`` are comparable; ``c* = -slope * eps``. With two
    or more ``eps`` the rate ratio of consecutive ones must match ``eps`` ratio
    within ``scaling_tol``.
    """
    u0.require_same_grid(v0)
    x = u0.x
    d0 = np.linalg.norm((v0.values - u0.values).reshape(u0.size, -1), axis=-1)
    a, b = support if support is not None else _support(d0, x)
    amp = float(d0.max())
    eps_sorted = sorted(eps_list)
    runs = {}
    beta1 = 0.0
    for eps in eps_sorted:
        base = SolveConfig(epsilon=eps, t_end=t, record_times=(t,))
        cfg = base.but(dt=common_step(sys, [u0, v0], base))
        u = solve_viscous(sys, u0, cfg)[-1]
        v = solve_viscous(sys, v0, cfg)[-1]
        lam = np.concatenate([frames(sys, f.values.reshape(f.size, sys.n))[0].ravel()
                              for f in (u0, v0, u, v)])
        beta1 = max(beta1, 2.0 * float(np.abs(lam).max()))
        runs[eps] = np.linalg.norm((u.values - v.values).reshape(u.size, -1), axis=-1)
    m_max = 10.0 * math.sqrt(max(eps_sorted) * t)
    out_left = x < a - beta1 * t - m_max
    out_right = x > b + beta1 * t + m_max
    clean = runs[eps_sorted[0]] > 1e-280
    series = {"epsilon": [], "rate_right": [], "rate_left": [], "outside_sup": [], "c_star": []}
    ok = True
    rates = []
    for eps in eps_sorted:
        d = runs[eps]
        m = 10.0 * math.sqrt(eps * t)
        outside = (x < a - beta1 * t - m) | (x > b + beta1 * t + m)
        sup_out = float(d[outside].max(initial=0.0))
        sr = _tail_slope(x, d, out_right & clean)
        sl = _tail_slope(x, d, out_left & clean)
        rate_r = -sr if sr is not None else None
        rate_l = sl if sl is not None else None
        found = [r for r in (rate_r, rate_l) if r is not None]
        c_star = min(found) * eps if found else None
        ok = ok and sup_out <= sup_factor * amp and (c_star is None or c_star > 0)
        rates.append(min(found) if found else None)
        series["epsilon"].append(eps)
        series["rate_right"].append(rate_r if rate_r is not None else float("nan"))
        series["rate_left"].append(rate_l if rate_l is not None else float("nan"))
        series["outside_sup"].append(sup_out)
        series["c_star"].append(c_star if c_star is not None else float("nan"))
    scaling = []
    for k in range(len(eps_sorted) - 1):
        r_small, r_big = rates[k], rates[k + 1]
        if r_small is None or r_big is None:
            continue
        expected = eps_sorted[k + 1] / eps_sorted[k]
        scaling.append((r_small / r_big) / expected)
    scale_ok = all(abs(s - 1.0) <= scaling_tol for s in scaling)
    scalars = {"beta1": beta1, "support_a": a, "support_b": b, "initial_sup": amp, "t": t,
               "max_outside_sup": max(series["outside_sup"]),
               "rate_scaling": scaling, "pass_sup": ok, "pass_scaling": scale_ok}
    return EstimateReport(
        name="propagation", scalars=scalars, series=series,
        threshold={"outside_sup": sup_factor * amp, "scaling_tol": scaling_tol,
                   "margin": "10*sqrt(eps*t)"},
        passed=ok and scale_ok)


# ---------------------------------------------------------------------------
# vanishing viscosity


def piecewise_field(sys: SystemSpec, breaks: Sequence[float], states, x_min: float, x_max: float,
                    cells: int) -> GridField:
    """Node samples of piecewise-constant data; nodes on a break take the mean state."""
    x = np.linspace(x_min, x_max, cells + 1)
    return GridField(x_min, (x_max - x_min) / cells, 0.0, piecewise_values(sys, breaks, states, x))


def exact_reference(sys: SystemSpec, breaks: Sequence[float], states, t: float) -> Callable:
    """Sampler ``x -> S_t(u0)(x)`` for piecewise-constant data.

    Constant-frame systems are front-tracked component by component (any ``t``);
    other Temple systems use glued Riemann fans (before the first interaction).
    """
    breaks = np.asarray(breaks, dtype=float)
    states = np.asarray(states, dtype=float).reshape(-1, sys.n)
    if sys.constant_frame and sys.laws is not None:
        W = sys.to_w(states)
        comps = []
        for i in range(sys.n):
            spread = float(np.ptp(W[:, i]))
            delta = spread / 4000 if spread > 0 else 1.0
            comps.append(front_track(sys.laws[i].flux, breaks, W[:, i], t, delta))

        def sample(x):
            # add the change in w to the data so untouched regions stay exact
            k = np.searchsorted(breaks, np.asarray(x, dtype=float), side="right")
            moved = np.stack([c.sample(x) for c in comps], axis=-1) - W[k]
            return states[k] + sys.from_w(moved)
        return sample
    if not sys.temple:
        raise NoReference(f"{sys.name} is not of Temple class; no exact semigroup available")
    try:
        glued = glued_evolution(sys, breaks, states, t)
    except (InteractionReached, OutOfDomain) as exc:
        raise NoReference(f"no exact reference at t = {t}: {exc}") from exc
    return glued.sample


def vanishing_viscosity_study(sys: SystemSpec, breaks: Sequence[float], states,
                              eps_list: Sequence[float], t: float, x_min: float, x_max: float,
                              cells_per_eps: float = 5.0, slack: float = 0.1,
                              order_window: Tuple[float, float] = (0.4, 1.1)) -> EstimateReport:
    """``e(eps) = |u^eps(t) - S_t(u0)|_1`` with ``dx = 1 / cells_per_eps * eps``.

    Passes when ``e`` decreases with ``eps`` (each step may grow by at most
    ``slack``) and the fitted order ``e ~ C eps^p`` lies in ``order_window``.
    """
    ref = exact_reference(sys, breaks, states, t)
    errors, dxs = [], []
    eps_sorted = sorted(eps_list, reverse=True)
    for eps in eps_sorted:
        cells = int(math.ceil((x_max - x_min) * cells_per_eps / eps))
        u0 = piecewise_field(sys, breaks, states, x_min, x_max, cells)
        u = solve_viscous(sys, u0, SolveConfig(epsilon=eps, t_end=t))[-1]
        exact = np.asarray(ref(u.x), dtype=float).reshape(u.values.shape)
        errors.append(u.with_values(u.values - exact).l1())
        dxs.append(u0.dx)
    monotone = all(e1 <= (1.0 + slack) * e0 for e0, e1 in zip(errors, errors[1:]))
    if max(errors) == 0.0:
        fit = {"model": "C*eps^p", "exponent": None, "p": None, "constant": 0.0,
               "residual": 0.0}
        passed = True
    else:
        fit = fit_power(eps_sorted, errors, "C*eps^p")
        fit["p"] = fit["exponent"]
        lo, hi = order_window
        passed = monotone and lo <= fit["exponent"] <= hi
    return EstimateReport(
        name="vanishing_viscosity",
        scalars={"order": fit["exponent"], "monotone": monotone, "t": t,
                 "cells_per_eps": cells_per_eps},
        series={"epsilon": eps_sorted, "l1_error": errors, "dx": dxs}, fit=fit,
        threshold={"slack": slack, "order_min": order_window[0], "order_max": order_window[1]},
        passed=passed)
