"""
Pydantic schema for run configuration.

The on-disk form is a flat ``key = value`` file (dotenv syntax, ``#``
comments). Unknown keys are rejected.
"""
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..core.exceptions import ConfigError


class Scheme(str, Enum):
    ETD_RK2 = "etd_rk2"
    IMEX_BDF2 = "imex_bdf2"
    EXPLICIT_RK4 = "explicit_rk4"


class Mode(str, Enum):
    KINEMATIC = "kinematic"
    QUASILINEAR = "quasilinear"


class SolverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, use_enum_values=False)

    # Grid and regularity
    n_points: int = Field(64, ge=16, description="Grid size N (even)")
    sobolev_r: int = Field(4, ge=4, description="Sobolev index r of the energy")

    # Time stepping
    dt: float = Field(5e-3, gt=0, description="Time step")
    t_end: float = Field(1.0, ge=0, description="Final time")
    scheme: Scheme = Field(Scheme.ETD_RK2, description="Time integration scheme")
    mode: Mode = Field(Mode.KINEMATIC, description="Which theta equation drives the run")
    cfl_constant: float = Field(0.5, gt=0, description="c_cfl in dt <= c_cfl (L/N)^(3/2)")

    # Initial data
    init_mode: int = Field(2, ge=1, description="Wavenumber k of the initial traveling mode")
    init_amplitude: float = Field(1e-3, ge=0, description="Amplitude of the initial tangent angle")
    init_snapshot: Optional[str] = Field(None, description="Snapshot JSON to start from instead")

    # Physics
    gravity: int = Field(1, description="Gravity switch g in {0, 1}")

    # Tolerances
    closure_tol: float = Field(1e-10, gt=0)
    solver_tol: float = Field(1e-12, gt=0, le=1e-6)
    solver_max_iterations: int = Field(200, ge=10)
    chord_arc_floor: float = Field(0.1, gt=0, lt=1)
    enforce_taylor_sign: bool = True

    # Output
    snapshot_every: int = Field(10, ge=1, description="Steps between snapshots")
    diagnostics_every: int = Field(1, ge=1, description="Steps between diagnostics rows")
    diagnostics_path: str = "diagnostics.csv"
    snapshot_path: str = "trajectory.jsonl"

    # Audits
    seed: int = 0
    ensemble_size: int = Field(4, ge=1)
    debug_flip_hilbert: bool = False

    @field_validator("n_points")
    @classmethod
    def n_points_even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("n_points must be even")
        return v

    @field_validator("gravity")
    @classmethod
    def gravity_switch(cls, v: int) -> int:
        if v not in (0, 1):
            raise ValueError("gravity must be 0 or 1")
        return v

    @field_validator("init_snapshot", mode="before")
    @classmethod
    def empty_snapshot(cls, v: Any) -> Any:
        if isinstance(v, str) and not v.strip():
            return None
        return v

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def parse_config_text(values: Mapping[str, Optional[str]]) -> Dict[str, str]:
    """Check raw key-value pairs before model validation."""
    raw: Dict[str, str] = {}
    for key, value in values.items():
        if value is None:
            raise ConfigError(f"Key '{key}' has no value", extra={"key": key})
        raw[key.strip()] = value.strip()
    return raw


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> SolverConfig:
    """
    Load and validate a run configuration.

    Args:
        path: Key-value config file. If None, defaults are used
        overrides: Values applied on top of the file (command-line flags)

    Returns:
        SolverConfig: validated configuration

    Raises:
        ConfigError: missing file, unknown key or invalid value
    """
    values: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}", extra={"path": str(path)})
        values.update(parse_config_text(dotenv_values(path)))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    try:
        return SolverConfig.model_validate(values)
    except ValidationError as e:
        errors = [
            {"key": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in e.errors()
        ]
        raise ConfigError("Invalid configuration", extra={"errors": errors}) from e
