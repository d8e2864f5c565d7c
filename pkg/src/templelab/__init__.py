"""Numerical laboratory for viscous Temple systems with commuting viscosity."""
from .config import RunConfig, load_config, parse_config
from .errors import ConfigError, NumericalAbort, TempleLabError
from .grid import GridField, SolveConfig, grid_from_function
from .report import EstimateReport
from .riemann import solve_riemann
from .system import SystemSpec, check_system, compute_frame
from .systems import get_system, system_names
from .viscous import solve_linearized, solve_viscous

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "EstimateReport", "GridField", "NumericalAbort", "RunConfig",
    "SolveConfig", "SystemSpec", "TempleLabError", "check_system", "compute_frame",
    "get_system", "grid_from_function", "load_config", "parse_config", "solve_linearized",
    "solve_riemann", "solve_viscous", "system_names",
]
