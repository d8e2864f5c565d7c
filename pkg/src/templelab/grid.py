"""Uniform 1-D grid fields, solver configuration and field diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, GridMismatch
from .report import EstimateReport, fmt


@dataclass(frozen=True, eq=False)
class GridField:
    """Values on the nodes ``x_j = x0 + j dx``.

    ``values`` has shape ``(N, n)`` for state fields and ``(N,)`` for scalar
    component fields.
    """

    x0: float
    dx: float
    t: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if self.t < 0:
            raise ValueError("time stamp must be non-negative")
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.size)

    @property
    def x_end(self) -> float:
        return self.x0 + self.dx * (self.size - 1)

    def with_values(self, values, t: Optional[float] = None) -> "GridField":
        return GridField(self.x0, self.dx, self.t if t is None else t, values)

    def same_grid(self, other: "GridField") -> bool:
        return (self.size == other.size and abs(self.x0 - other.x0) <= 1e-12 * max(1.0, abs(self.x0))
                and abs(self.dx - other.dx) <= 1e-12 * self.dx)

    def require_same_grid(self, other: "GridField") -> None:
        if not self.same_grid(other):
            raise GridMismatch(f"grids differ: ({self.x0}, {self.dx}, {self.size}) vs "
                               f"({other.x0}, {other.dx}, {other.size})")

    def pointwise_norm(self) -> np.ndarray:
        v = self.values
        return np.abs(v) if v.ndim == 1 else np.linalg.norm(v, axis=-1)

    def l1(self) -> float:
        return float(self.dx * self.pointwise_norm().sum())

    def sup(self) -> float:
        return float(self.pointwise_norm().max(initial=0.0))


def grid_from_function(fn, x_min: float, x_max: float, cells: int, t: float = 0.0) -> GridField:
    """Sample ``fn(x)`` on ``cells + 1`` nodes spanning ``[x_min, x_max]``."""
    dx = (x_max - x_min) / cells
    x = x_min + dx * np.arange(cells + 1)
    return GridField(x_min, dx, t, np.asarray(fn(x), dtype=float))


def l1_distance(a: GridField, b: GridField) -> float:
    a.require_same_grid(b)
    return a.with_values(a.values - b.values).l1()


@dataclass(frozen=True)
class SolveConfig:
    epsilon: float
    t_end: float
    cfl: float = 0.4
    boundary: str = "constant"
    record_times: Tuple[float, ...] = ()
    # "auto" uses the conservative flux form when the system has a flux
    scheme: str = "auto"
    # fixed time step; None means the CFL rule is applied at every step
    dt: Optional[float] = None
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not 0 < self.cfl < 1:
            raise ConfigError("cfl must lie in (0, 1)")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be non-negative")
        if self.boundary not in ("constant", "periodic"):
            raise ConfigError("boundary must be 'constant' or 'periodic'")
        if self.scheme not in ("auto", "flux", "upwind"):
            raise ConfigError("scheme must be 'auto', 'flux' or 'upwind'")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be positive")
        rec = tuple(sorted(float(t) for t in self.record_times)) or (float(self.t_end),)
        if rec[0] < 0 or rec[-1] > self.t_end * (1 + 1e-12):
            raise ConfigError("record_times must lie in [0, t_end]")
        object.__setattr__(self, "record_times", rec)

    def but(self, **changes) -> "SolveConfig":
        return replace(self, **changes)


def central_derivative(values: np.ndarray, dx: float) -> np.ndarray:
    """Second-order central differences, one-sided at the ends."""
    return np.gradient(values, dx, axis=0, edge_order=2)


def second_derivative(values: np.ndarray, dx: float) -> np.ndarray:
    out = np.zeros_like(values)
    out[1:-1] = (values[2:] - 2 * values[1:-1] + values[:-2]) / dx**2
    return out


def diagnostics(u: GridField, u_star=None) -> EstimateReport:
    """TV, derivative norms and distance to a reference state (default: left end)."""
    v = u.values if u.values.ndim == 2 else u.values[:, None]
    diff = np.diff(v, axis=0)
    tv = float(np.linalg.norm(diff, axis=-1).sum())
    ux = central_derivative(v, u.dx)
    uxx = second_derivative(v, u.dx)
    ref = v[0] if u_star is None else np.asarray(u_star, dtype=float).reshape(v.shape[1])
    scalars = {
        "t": u.t,
        "tv": tv,
        "ux_l1": float(u.dx * np.linalg.norm(ux, axis=-1).sum()),
        "uxx_l1": float(u.dx * np.linalg.norm(uxx, axis=-1).sum()),
        "ux_sup": float(np.linalg.norm(ux, axis=-1).max(initial=0.0)),
        "dist_sup": float(np.linalg.norm(v - ref, axis=-1).max(initial=0.0)),
    }
    return EstimateReport(name="diagnostics", scalars=scalars)


def total_variation(u: GridField) -> float:
    v = u.values if u.values.ndim == 2 else u.values[:, None]
    return float(np.linalg.norm(np.diff(v, axis=0), axis=-1).sum())


def write_field_csv(path, f: GridField) -> None:
    """Write columns ``x, u_1..u_n``; the time stamp lives in the run manifest."""
    vals = f.values if f.values.ndim == 2 else f.values[:, None]
    lines = [",".join(["x"] + [f"u_{i + 1}" for i in range(vals.shape[1])])]
    for xj, row in zip(f.x, vals):
        lines.append(",".join([fmt(xj)] + [fmt(v) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_field_csv(path, t: float = 0.0) -> GridField:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x = rows[:, 0]
    dx = (x[-1] - x[0]) / (len(x) - 1)
    return GridField(float(x[0]), float(dx), t, rows[:, 1:])
