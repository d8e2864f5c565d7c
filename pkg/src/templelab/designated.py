"""Study dispatch and the designated runs.

``run_study`` maps a :class:`RunConfig` with a ``study`` section onto the
protocols in :mod:`templelab.studies`. ``DESIGNATED`` holds the reference
configurations used by the acceptance suite and ``scripts/``; they are plain
dictionaries in the same JSON layout the CLI reads.
"""
from __future__ import annotations

import copy
from typing import Callable, Dict, List

import numpy as np

from .config import GridSpec, RunConfig, build_data, build_field, parse_config
from .errors import ConfigError
from .grid import SolveConfig
from .interaction import transversal_decay_check
from .report import EstimateReport
from .studies import (bv_study, decay_study, linearization_check, propagation_study,
                      residual_convergence_study, stability_study, time_continuity_study,
                      vanishing_viscosity_study)
from .viscous import solve_viscous


def _param(cfg: RunConfig, key: str, default=None, required: bool = False):
    params = cfg.study.params if cfg.study else {}
    if key in params:
        return params[key]
    if key in cfg.solve:
        return cfg.solve[key]
    if required:
        raise ConfigError(f"study '{cfg.study.name}' needs parameter '{key}'")
    return default


def _perturbed(cfg: RunConfig, sys, u0):
    if cfg.perturbation is None:
        raise ConfigError(f"study '{cfg.study.name}' needs a 'perturbation' section")
    dv = build_data(sys, cfg.perturbation, cfg.grid, cfg.seed + 1, "perturbation")
    return u0.with_values(u0.values + dv)


def _bv(cfg):
    sys = cfg.system_spec()
    u0 = build_field(sys, cfg.initial, cfg.grid, cfg.seed)
    return bv_study(sys, u0, _param(cfg, "eps_list", required=True), _param(cfg, "t_end", required=True),
                    records=int(_param(cfg, "records", 20)), delta0=float(_param(cfg, "delta0", 0.1)),
                    tv_threshold=_param(cfg, "tv_threshold"))


def _stability(cfg):
    sys = cfg.system_spec()
    u0 = build_field(sys, cfg.initial, cfg.grid, cfg.seed)
    return stability_study(sys, u0, _perturbed(cfg, sys, u0), float(_param(cfg, "epsilon", required=True)),
                           float(_param(cfg, "t_end", required=True)),
                           theta_count=int(_param(cfg, "theta_count", 8)),
                           records=int(_param(cfg, "records", 10)),
                           ratio_threshold=_param(cfg, "ratio_threshold"),
                           slack=float(_param(cfg, "slack", 0.05)))


def _time_continuity(cfg):
    sys = cfg.system_spec()
    u0 = build_field(sys, cfg.initial, cfg.grid, cfg.seed)
    pairs = [tuple(p) for p in _param(cfg, "time_pairs", required=True)]
    return time_continuity_study(sys, u0, _param(cfg, "eps_list", required=True), pairs,
                                 max_residual=float(_param(cfg, "max_residual", 0.25)))


def _propagation(cfg):
    sys = cfg.system_spec()
    u0 = build_field(sys, cfg.initial, cfg.grid, cfg.seed)
    support = _param(cfg, "support")
    return propagation_study(sys, u0, _perturbed(cfg, sys, u0), _param(cfg, "eps_list", required=True),
                             float(_param(cfg, "t", required=True)),
                             support=tuple(support) if support is not None else None,
                             sup_factor=float(_param(cfg, "sup_factor", 1e-6)),
                             scaling_tol=float(_param(cfg, "scaling_tol", 0.3)))


def _vanishing(cfg):
    sys = cfg.system_spec()
    pieces = cfg.initial.get("pieces")
    if pieces is None or cfg.initial.get("profiles") or cfg.initial.get("random"):
        raise ConfigError("vanishing-viscosity needs piecewise-constant 'pieces' initial data")
    return vanishing_viscosity_study(sys, pieces.get("breaks", []), pieces["states"],
                                     _param(cfg, "eps_list", required=True),
                                     float(_param(cfg, "t", required=True)),
                                     cfg.grid.x_min, cfg.grid.x_max,
                                     cells_per_eps=float(_param(cfg, "cells_per_eps", 5.0)),
                                     slack=float(_param(cfg, "slack", 0.1)))


def _decay(cfg):
    sys = cfg.system_spec()
    u0 = build_field(sys, cfg.initial, cfg.grid, cfg.seed)
    tangent = _param(cfg, "tangent")
    h0 = None if tangent is None else build_field(sys, tangent, cfg.grid, cfg.seed + 2, "tangent")
    return decay_study(sys, u0, float(_param(cfg, "epsilon", required=True)),
                       float(_param(cfg, "t_end", required=True)), h0=h0,
                       t_min_frac=float(_param(cfg, "t_min_frac", 0.05)),
                       records=int(_param(cfg, "records", 24)))


def _transversal(cfg):
    sys = cfg.system_spec()
    eps = float(_param(cfg, "epsilon", required=True))
    t_end = float(_param(cfg, "t_end", required=True))
    records = int(_param(cfg, "records", 150))
    pair = tuple(_param(cfg, "pair", (0, 1)))
    cells = _param(cfg, "cells_list", [cfg.grid.cells])
    tol = float(_param(cfg, "resolution_tol", 0.02))
    times = tuple(np.round(np.linspace(0.0, t_end, records + 1), 12))
    parts = []
    for m in cells:
        grid = GridSpec(cfg.grid.x_min, cfg.grid.x_max, int(m))
        u0 = build_field(sys, cfg.initial, grid, cfg.seed)
        run = solve_viscous(sys, u0, SolveConfig(epsilon=eps, t_end=t_end, record_times=times))
        rep = transversal_decay_check(sys, run, pair, eps, margin=float(_param(cfg, "margin", 0.05)))
        rep.name = f"cells_{int(m):05d}"
        parts.append(rep)
    merged = EstimateReport.merge("transversal_decay", parts)
    if len(parts) > 1:
        vals = [p.scalars["interaction"] for p in parts]
        gap = abs(vals[-1] - vals[0]) / max(abs(vals[-1]), 1e-300)
        merged.scalars["resolution_gap"] = gap
        merged.threshold["resolution_gap"] = tol
        merged.passed = merged.passed and gap <= tol
    return merged


def _residual(cfg):
    sys = cfg.system_spec()
    grid = cfg.grid

    def u0_fn(x):
        g = GridSpec(float(x[0]), float(x[-1]), x.size - 1)
        return build_data(sys, cfg.initial, g, cfg.seed)

    return residual_convergence_study(sys, u0_fn, grid.x_min, grid.x_max,
                                      _param(cfg, "cells_list", required=True),
                                      float(_param(cfg, "epsilon", required=True)),
                                      float(_param(cfg, "t", required=True)),
                                      min_order=float(_param(cfg, "min_order", 0.8)))


def _linearization(cfg):
    sys = cfg.system_spec()
    u0 = build_field(sys, cfg.initial, cfg.grid, cfg.seed)
    tangent = _param(cfg, "tangent", required=True)
    h0 = build_field(sys, tangent, cfg.grid, cfg.seed + 2, "tangent")
    solve = SolveConfig(epsilon=float(_param(cfg, "epsilon", required=True)),
                        t_end=float(_param(cfg, "t_end", required=True)))
    return linearization_check(sys, u0, h0, solve, delta=float(_param(cfg, "delta", 1e-4)),
                               factor=float(_param(cfg, "factor", 5.0)))


STUDIES: Dict[str, Callable[[RunConfig], EstimateReport]] = {
    "bv": _bv,
    "stability": _stability,
    "time-continuity": _time_continuity,
    "propagation": _propagation,
    "vanishing-viscosity": _vanishing,
    "decay": _decay,
    "transversal": _transversal,
    "residual": _residual,
    "linearization": _linearization,
}


def run_study(cfg: RunConfig) -> EstimateReport:
    if cfg.study is None:
        raise ConfigError("configuration has no 'study' section")
    runner = STUDIES.get(cfg.study.name)
    if runner is None:
        raise ConfigError(f"unknown study '{cfg.study.name}'; choose from {sorted(STUDIES)}")
    return runner(cfg)


# ---------------------------------------------------------------------------
# designated runs


def _cfg(system, grid, study, params, initial, perturbation=None, solve=None):
    out = {"system": system, "grid": dict(zip(("x_min", "x_max", "cells"), grid)),
           "initial": initial, "study": {"name": study, "params": params}, "seed": 0}
    if perturbation is not None:
        out["perturbation"] = perturbation
    if solve is not None:
        out["solve"] = solve
    return out


def _gauss(center, width, amplitude, coords="u", shape="gauss", **extra):
    out = {"shape": shape, "center": center, "width": width, "amplitude": amplitude,
           "coords": coords}
    out.update(extra)
    return out


_BV_EPS = [1e-2, 5e-3, 2.5e-3, 1.25e-3]
_VV_EPS = [0.04, 0.02, 0.01, 0.005]
_PAIRS = [[s, t] for s in (0.0, 0.05, 0.1, 0.2, 0.4) for t in (0.02, 0.1, 0.3, 0.6, 1.0) if t > s]
_SMOOTH = [_gauss(0.0, 0.5 ** 0.5, [0.1, 0.03]), _gauss(0.5, 3 ** -0.5, [-0.02, 0.1])]

DESIGNATED: Dict[str, dict] = {
    # solver consistency
    "residual-burgers": _cfg("burgers", (-3, 3, 200), "residual",
                             {"cells_list": [200, 400, 800, 1600], "epsilon": 0.1, "t": 0.3},
                             {"base": [0.3], "profiles": [_gauss(0.0, 0.5 ** 0.5, [0.1]),
                                                          _gauss(0.5, 3 ** -0.5, [-0.02])]}),
    "residual-rotated2": _cfg("rotated2", (-3, 3, 200), "residual",
                              {"cells_list": [200, 400, 800, 1600], "epsilon": 0.1, "t": 0.3},
                              {"base": [0.05, -0.05], "profiles": _SMOOTH}),
    "linearization-rotated2": _cfg(
        "rotated2", (-3, 3, 400), "linearization",
        {"epsilon": 0.05, "t_end": 0.5, "delta": 1e-4,
         "tangent": {"profiles": [_gauss(0.0, 0.3, [1.0, 0.0]), _gauss(0.2, 0.3, [0.0, 0.5])]}},
        {"profiles": [_gauss(-0.5, 0.4, [0.15, 0.0], "w"), _gauss(0.5, 0.3, [0.0, -0.1], "w")]}),
    # parabolic decay
    "decay-burgers": _cfg("burgers", (-15, 15, 600), "decay",
                          {"epsilon": 1.0, "t_end": 5.0,
                           "tangent": {"profiles": [_gauss(0.0, 0.1, [1.0])]}},
                          {"pieces": {"breaks": [0.0], "states": [[0.0], [0.02]]}}),
    "decay-rotated2": _cfg("rotated2", (-13, 23, 600), "decay",
                           {"epsilon": 1.0, "t_end": 5.0,
                            "tangent": {"profiles": [_gauss(0.0, 0.1, [1.0, 0.0], "w")]}},
                           {"pieces": {"breaks": [0.0], "states": [[0.0, 0.0], [-0.012, 0.016]]}}),
    # interaction potential
    "transversal-rotated2": _cfg(
        "rotated2", (-7, 5, 700), "transversal",
        {"epsilon": 0.1, "t_end": 3.0, "records": 150, "pair": [0, 1], "cells_list": [700, 1400]},
        {"profiles": [_gauss(0.0, 0.8, [0.05, 0.0], "w"), _gauss(-2.5, 0.8, [0.0, 0.05], "w")]}),
    # BV
    "bv-burgers": _cfg("burgers", (-2, 2, 800), "bv", {"eps_list": _BV_EPS, "t_end": 0.5},
                       {"profiles": [_gauss(0.0, 0.5, [0.3], shape="wave", period=1.0)]}),
    "bv-rotated2": _cfg("rotated2", (-3, 3, 800), "bv", {"eps_list": _BV_EPS, "t_end": 0.5},
                        {"profiles": [_gauss(-1.0, 0.4, [0.2, 0.0], "w", shape="wave", period=1.0),
                                      _gauss(1.0, 0.2, [0.0, 0.2], "w", shape="tanh")]}),
    # L1 stability
    "stability-burgers": _cfg("burgers", (-2, 3, 500), "stability",
                              {"epsilon": 0.01, "t_end": 1.0},
                              {"profiles": [_gauss(0.0, 0.4, [0.4])]},
                              {"profiles": [_gauss(-0.3, 0.2, [0.05])]}),
    "stability-rotated2": _cfg("rotated2", (-3, 5, 500), "stability",
                               {"epsilon": 0.01, "t_end": 1.0},
                               {"profiles": [_gauss(0.0, 0.4, [0.3, 0.0], "w"),
                                             _gauss(-1.0, 0.4, [0.0, -0.2], "w")]},
                               {"profiles": [_gauss(0.3, 0.2, [0.05, 0.0], "w")]}),
    # time continuity
    "time-continuity-burgers": _cfg("burgers", (-2, 3, 1000), "time-continuity",
                                    {"eps_list": [0.02, 0.01, 0.005], "time_pairs": _PAIRS},
                                    {"pieces": {"breaks": [0.0, 1.0],
                                                "states": [[0.0], [0.5], [0.0]]}}),
    "time-continuity-rotated2": _cfg("rotated2", (-3, 4, 1000), "time-continuity",
                                     {"eps_list": [0.02, 0.01, 0.005], "time_pairs": _PAIRS},
                                     {"pieces": {"breaks": [0.0],
                                                 "states": [[0.1, 0.1], [-0.1, 0.05]]}}),
    # finite speed
    "propagation-burgers": _cfg("burgers", (-4, 4, 800), "propagation",
                                {"eps_list": [0.02, 0.01], "t": 0.5, "support": [-0.5, 0.5]},
                                {"base": [0.0]},
                                {"profiles": [_gauss(0.0, 0.5, [0.2], shape="cos2")]}),
    "propagation-rotated2": _cfg("rotated2", (-6, 6, 1200), "propagation",
                                 {"eps_list": [0.02, 0.01], "t": 0.5, "support": [-0.5, 0.5]},
                                 {"base": [0.0, 0.0]},
                                 {"profiles": [_gauss(0.0, 0.5, [0.2, 0.2], "w", shape="cos2")]}),
    # vanishing viscosity
    "vv-burgers-shock": _cfg("burgers", (-1.5, 2.0, 16), "vanishing-viscosity",
                             {"eps_list": _VV_EPS, "t": 0.5},
                             {"pieces": {"breaks": [0.0], "states": [[1.0], [0.0]]}}),
    "vv-burgers-rarefaction": _cfg("burgers", (-1.5, 2.0, 16), "vanishing-viscosity",
                                   {"eps_list": _VV_EPS, "t": 0.5},
                                   {"pieces": {"breaks": [0.0], "states": [[0.0], [1.0]]}}),
    "vv-rotated2": _cfg("rotated2", (-0.75, 1.5, 16), "vanishing-viscosity",
                        {"eps_list": _VV_EPS, "t": 0.5},
                        {"pieces": {"breaks": [0.0], "states": [[0.1, 0.1], [-0.1, 0.05]]}}),
}


def designated_config(name: str) -> RunConfig:
    if name not in DESIGNATED:
        raise ConfigError(f"unknown designated run '{name}'; choose from {sorted(DESIGNATED)}")
    return parse_config(copy.deepcopy(DESIGNATED[name]))


def designated_for(study: str) -> List[str]:
    return sorted(k for k, v in DESIGNATED.items() if v["study"]["name"] == study)


def run_designated(name: str) -> EstimateReport:
    return run_study(designated_config(name))


# run used by ``templelab study <study>`` when no config is given
DEFAULT_RUN = {
    "bv": "bv-burgers",
    "stability": "stability-burgers",
    "time-continuity": "time-continuity-burgers",
    "propagation": "propagation-burgers",
    "vanishing-viscosity": "vv-burgers-shock",
    "decay": "decay-burgers",
    "transversal": "transversal-rotated2",
    "residual": "residual-burgers",
    "linearization": "linearization-rotated2",
}


def resolve_run(name: str) -> RunConfig:
    """Config for a designated run name or, for a bare study name, its default run."""
    if name in DESIGNATED:
        return designated_config(name)
    if name in DEFAULT_RUN:
        return designated_config(DEFAULT_RUN[name])
    raise ConfigError(f"unknown study or run '{name}'; studies: {sorted(STUDIES)}, "
                      f"runs: {sorted(DESIGNATED)}")
