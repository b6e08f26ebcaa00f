"""2D3V electromagnetic particle-in-cell simulator with task-based backends."""

from ._core import (
    ConfigError,
    IoError,
    ShapeMismatch,
    Simulation,
    UnknownBackend,
    backends,
    cfl_limit,
    compare,
    compare_dumps,
    load_scenario,
    read_dump,
    scenarios,
    validate,
    write_dump,
)

__all__ = [
    "ConfigError",
    "IoError",
    "ShapeMismatch",
    "Simulation",
    "UnknownBackend",
    "backends",
    "cfl_limit",
    "compare",
    "compare_dumps",
    "load_scenario",
    "read_dump",
    "scenarios",
    "validate",
    "write_dump",
]
