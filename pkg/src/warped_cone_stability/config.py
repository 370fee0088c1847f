"""Configuration for solvers, quadrature and verification tolerances."""

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Literal

from .errors import ConfigurationError

SolverMethod = Literal["fd", "shooting", "both"]
VALID_METHODS = ("fd", "shooting", "both")


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings shared by every command."""

    # Finite differences
    grid_size: int = 1024
    richardson: bool = True

    # Shooting
    shooting_tol: float = 1e-10
    shooting_rtol: float = 1e-10
    shooting_grid: int = 513

    # Cross-method agreement
    agreement_rtol: float = 1e-6
    agreement_atol: float = 1e-6
    method: SolverMethod = "both"

    # Quadrature
    quad_epsabs: float = 1e-10
    quad_epsrel: float = 1e-10

    # Model validation
    tol_model: float = 1e-8
    validation_grid: int = 201
    validation_span: float = 3.0  # Used when eps_max is infinite
    eps_clamp: float = 1e-6

    # Geometry verification
    fd_step: float = 1e-3

    # Sweep worker pool
    jobs: int = 1


def _parse_bool(value: str | None, default: bool) -> bool:
    """Parse a boolean from environment variable."""
    if value is None:
        return default
    return value.lower() == "true"


def load_config() -> SolverConfig:
    """Load configuration from environment variables."""
    config = SolverConfig(
        # Finite differences
        grid_size=int(os.getenv("WCS_DEFAULT_GRID", "1024")),
        richardson=_parse_bool(os.getenv("WCS_RICHARDSON"), True),
        # Shooting
        shooting_tol=float(os.getenv("WCS_SHOOTING_TOL", "1e-10")),
        shooting_rtol=float(os.getenv("WCS_SHOOTING_RTOL", "1e-10")),
        shooting_grid=int(os.getenv("WCS_SHOOTING_GRID", "513")),
        # Cross-method agreement
        agreement_rtol=float(os.getenv("WCS_AGREEMENT_RTOL", "1e-6")),
        agreement_atol=float(os.getenv("WCS_AGREEMENT_ATOL", "1e-6")),
        method=os.getenv("WCS_METHOD", "both"),  # type: ignore
        # Quadrature
        quad_epsabs=float(os.getenv("WCS_QUAD_EPSABS", "1e-10")),
        quad_epsrel=float(os.getenv("WCS_QUAD_EPSREL", "1e-10")),
        # Model validation
        tol_model=float(os.getenv("WCS_TOL_MODEL", "1e-8")),
        validation_grid=int(os.getenv("WCS_VALIDATION_GRID", "201")),
        validation_span=float(os.getenv("WCS_VALIDATION_SPAN", "3.0")),
        eps_clamp=float(os.getenv("WCS_EPS_CLAMP", "1e-6")),
        # Geometry verification
        fd_step=float(os.getenv("WCS_FD_STEP", "1e-3")),
        # Sweep worker pool
        jobs=int(os.getenv("WCS_JOBS", "1")),
    )
    return check_config(config)


def check_config(config: SolverConfig) -> SolverConfig:
    """Reject non-positive numeric settings and unknown solver methods."""
    if config.method not in VALID_METHODS:
        raise ConfigurationError(
            f"Unknown solver method {config.method!r}; expected one of {', '.join(VALID_METHODS)}"
        )
    for item in fields(config):
        value = getattr(config, item.name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            continue
        if value <= 0:
            raise ConfigurationError(f"Setting {item.name} must be positive, got {value}")
    if config.grid_size < 16:
        raise ConfigurationError(f"grid_size must be at least 16, got {config.grid_size}")
    return config


def config_field_names() -> set[str]:
    """Names accepted as keys of a run configuration file."""
    return {item.name for item in fields(SolverConfig)}


def load_run_file(path: str | Path) -> dict[str, Any]:
    """Read a JSON run configuration file into a plain dictionary."""
    path = Path(path)
    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigurationError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must contain a JSON object")
    return data


def apply_overrides(config: SolverConfig, overrides: dict[str, Any]) -> SolverConfig:
    """Return a copy of config with the recognised, non-None overrides applied."""
    known = config_field_names()
    updates = {k: v for k, v in overrides.items() if k in known and v is not None}
    if not updates:
        return config
    try:
        updated = replace(config, **updates)
    except TypeError as e:
        raise ConfigurationError(f"Invalid configuration override: {e}") from e
    return check_config(updated)
