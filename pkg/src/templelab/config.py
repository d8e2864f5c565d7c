"""Declarative run configuration (JSON).

A run configuration names a system, a grid, solver settings, initial data and
optionally a study with its parameters::

    {
      "system": "rotated2",
      "grid": {"x_min": -3, "x_max": 3, "cells": 400},
      "solve": {"epsilon": 0.01, "t_end": 0.5},
      "initial": {"pieces": {"breaks": [0.0], "states": [[0.1, 0.1], [-0.1, 0.05]]}},
      "study": {"name": "bv", "params": {"eps_list": [0.01, 0.005]}},
      "seed": 0
    }

Initial data is ``base`` (or piecewise-constant ``pieces``) plus a sum of
``profiles``; a profile amplitude is a vector in state coordinates, or in
``w = R^{-1} u`` coordinates with ``"coords": "w"`` on constant-frame systems.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from .errors import ConfigError
from .grid import GridField, SolveConfig
from .system import SystemSpec
from .systems import get_system, system_names

_TOP_KEYS = {"system", "grid", "solve", "initial", "perturbation", "study", "output_dir", "seed"}
_SOLVE_KEYS = {"epsilon", "t_end", "cfl", "boundary", "record_times", "scheme", "dt", "max_steps"}
_SHAPES = ("gauss", "cos2", "tanh", "wave")


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    cells: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ConfigError("grid: x_min must be smaller than x_max")
        if int(self.cells) != self.cells or self.cells < 16:
            raise ConfigError("grid: cells must be an integer >= 16")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.cells

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.cells + 1)


@dataclass(frozen=True)
class StudySpec:
    name: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    system: str
    grid: GridSpec
    solve: Dict[str, Any] = field(default_factory=dict)
    initial: Dict[str, Any] = field(default_factory=dict)
    perturbation: Optional[Dict[str, Any]] = None
    study: Optional[StudySpec] = None
    output_dir: Optional[str] = None
    seed: int = 0

    def system_spec(self) -> SystemSpec:
        return get_system(self.system)

    def solve_config(self, **overrides) -> SolveConfig:
        params = dict(self.solve)
        params.update(overrides)
        if "record_times" in params:
            params["record_times"] = tuple(params["record_times"])
        try:
            return SolveConfig(**params)
        except TypeError as exc:
            raise ConfigError(f"solve: {exc}") from exc

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.study is None:
            out["study"] = None
        return out


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"{where}: missing key '{key}'")
    return obj[key]


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {extra}")


def _resolve_system(name: str, base_dir: Optional[Path]) -> str:
    if name in system_names():
        return name
    path = Path(name)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    if not path.is_file():
        raise ConfigError(f"system '{name}' is neither a bundled system nor an existing file")
    return str(path)


def parse_config(obj: dict, base_dir: Optional[Path] = None) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("configuration must be a JSON object")
    _check_keys(obj, _TOP_KEYS, "config")
    system = _resolve_system(str(_require(obj, "system", "config")), base_dir)
    g = _require(obj, "grid", "config")
    if not isinstance(g, dict):
        raise ConfigError("grid must be an object")
    _check_keys(g, {"x_min", "x_max", "cells"}, "grid")
    try:
        grid = GridSpec(float(_require(g, "x_min", "grid")), float(_require(g, "x_max", "grid")),
                        int(_require(g, "cells", "grid")))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from exc
    solve = dict(obj.get("solve", {}))
    _check_keys(solve, _SOLVE_KEYS, "solve")
    study = None
    if obj.get("study") is not None:
        s = obj["study"]
        _check_keys(s, {"name", "params"}, "study")
        study = StudySpec(str(_require(s, "name", "study")), dict(s.get("params", {})))
    cfg = RunConfig(system=system, grid=grid, solve=solve, initial=dict(obj.get("initial", {})),
                    perturbation=obj.get("perturbation"), study=study,
                    output_dir=obj.get("output_dir"), seed=int(obj.get("seed", 0)))
    for key in ("initial", "perturbation"):
        spec = getattr(cfg, key)
        if spec is not None:
            validate_data_spec(spec, key)
    if solve:
        if "epsilon" in solve and "t_end" in solve:
            cfg.solve_config()
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(obj, path.parent)


# ---------------------------------------------------------------------------
# initial data


def validate_data_spec(spec: dict, where: str) -> None:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be an object")
    _check_keys(spec, {"base", "pieces", "profiles", "random"}, where)
    if "base" in spec and "pieces" in spec:
        raise ConfigError(f"{where}: give either 'base' or 'pieces'")
    for k, prof in enumerate(spec.get("profiles", [])):
        _check_keys(prof, {"shape", "center", "width", "amplitude", "coords", "period"},
                    f"{where}.profiles[{k}]")
        if prof.get("shape", "gauss") not in _SHAPES:
            raise ConfigError(f"{where}.profiles[{k}]: shape must be one of {list(_SHAPES)}")
        if not float(prof.get("width", 1.0)) > 0:
            raise ConfigError(f"{where}.profiles[{k}]: width must be positive")
    if "random" in spec:
        _check_keys(spec["random"], {"modes", "amplitude", "width"}, f"{where}.random")


def _shape(name: str, x: np.ndarray, c: float, w: float, period: float) -> np.ndarray:
    s = (x - c) / w
    if name == "gauss":
        return np.exp(-s * s)
    if name == "cos2":
        return np.where(np.abs(s) < 1, np.cos(0.5 * np.pi * s) ** 2, 0.0)
    if name == "tanh":
        return np.tanh(s)
    return np.sin(2 * np.pi * (x - c) / period) * np.exp(-s * s)


def _vector(sys: SystemSpec, amp, coords: str, where: str) -> np.ndarray:
    a = np.asarray(amp, dtype=float).reshape(-1)
    if a.size != sys.n:
        raise ConfigError(f"{where}: amplitude needs {sys.n} components")
    if coords == "w":
        if not sys.constant_frame:
            raise ConfigError(f"{where}: 'w' coordinates need a constant-frame system")
        return sys.from_w(a)
    if coords != "u":
        raise ConfigError(f"{where}: coords must be 'u' or 'w'")
    return a


def piecewise_values(sys: SystemSpec, breaks, states, x: np.ndarray) -> np.ndarray:
    """Piecewise-constant samples; a node sitting on a break takes the mean state."""
    breaks = np.asarray(breaks, dtype=float)
    states = np.asarray(states, dtype=float).reshape(-1, sys.n)
    if states.shape[0] != breaks.size + 1:
        raise ConfigError("pieces: need one more state than breaks")
    left = np.searchsorted(breaks, x, side="left")
    right = np.searchsorted(breaks, x, side="right")
    return 0.5 * (states[left] + states[right])


def build_data(sys: SystemSpec, spec: dict, grid: GridSpec, seed: int = 0,
               where: str = "initial") -> np.ndarray:
    """Node values ``(cells + 1, n)`` described by ``spec``."""
    x = grid.x
    if "pieces" in spec:
        p = spec["pieces"]
        vals = piecewise_values(sys, p.get("breaks", []), p.get("states"), x)
    else:
        base = np.asarray(spec.get("base", np.zeros(sys.n)), dtype=float).reshape(-1)
        if base.size != sys.n:
            raise ConfigError(f"{where}: base needs {sys.n} components")
        vals = np.broadcast_to(base, (x.size, sys.n)).copy()
    for k, prof in enumerate(spec.get("profiles", [])):
        vec = _vector(sys, prof.get("amplitude"), prof.get("coords", "u"),
                      f"{where}.profiles[{k}]")
        shape = _shape(prof.get("shape", "gauss"), x, float(prof.get("center", 0.0)),
                       float(prof.get("width", 1.0)), float(prof.get("period", 1.0)))
        vals += shape[:, None] * vec
    if "random" in spec:
        r = spec["random"]
        rng = np.random.default_rng(seed)
        modes = int(r.get("modes", 4))
        amp = float(r.get("amplitude", 0.05))
        width = float(r.get("width", 0.25 * (grid.x_max - grid.x_min)))
        mid = 0.5 * (grid.x_min + grid.x_max)
        env = np.exp(-((x - mid) / width) ** 2)
        for _ in range(modes):
            k = rng.uniform(0.5, 3.0) * 2 * np.pi / width
            phase = rng.uniform(0, 2 * np.pi)
            coef = rng.normal(size=sys.n) * amp / modes
            vals += (env * np.sin(k * (x - mid) + phase))[:, None] * coef
    return vals


def build_field(sys: SystemSpec, spec: dict, grid: GridSpec, seed: int = 0,
                where: str = "initial") -> GridField:
    return GridField(grid.x_min, grid.dx, 0.0, build_data(sys, spec, grid, seed, where))
