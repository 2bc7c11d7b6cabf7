"""
Snapshot schema: one JSON object {"n", "t", "L", "theta", "gamma"} per state.

Trajectories are JSON Lines files of snapshots. Readers reject NaN/Inf.
"""
import json
import math
from pathlib import Path
from typing import Iterable, List, Union

from pydantic import BaseModel, Field, ValidationError, model_validator

from ..core.exceptions import InputFormatError
from ..numerics.curve import CurveState
from ..numerics.spectral import PeriodicGrid, SpectralField


def _reject_constant(name: str):
    raise ValueError(f"non-finite literal {name}")


class Snapshot(BaseModel):
    n: int = Field(..., ge=16, description="Grid size N")
    t: float = Field(..., ge=0, description="Time")
    L: float = Field(..., gt=0, description="Arc length of one period")
    theta: List[float] = Field(..., description="Tangent angle samples")
    gamma: List[float] = Field(..., description="Vortex-sheet density samples")

    @model_validator(mode="after")
    def check_shape(self) -> "Snapshot":
        if self.n % 2:
            raise ValueError("n must be even")
        if len(self.theta) != self.n or len(self.gamma) != self.n:
            raise ValueError("theta and gamma must have n samples")
        values = [self.t, self.L, *self.theta, *self.gamma]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("snapshot contains NaN or Inf")
        return self

    @classmethod
    def from_state(cls, state: CurveState) -> "Snapshot":
        return cls(
            n=state.grid.n_points,
            t=float(state.time),
            L=float(state.length),
            theta=[float(v) for v in state.theta.samples],
            gamma=[float(v) for v in state.gamma.samples],
        )

    def to_state(self) -> CurveState:
        grid = PeriodicGrid(self.n)
        return CurveState(
            grid=grid,
            theta=SpectralField(grid, self.theta),
            gamma=SpectralField(grid, self.gamma),
            length=self.L,
            time=self.t,
        )

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "Snapshot":
        try:
            data = json.loads(text, parse_constant=_reject_constant)
            return cls.model_validate(data)
        except (ValueError, ValidationError) as e:
            raise InputFormatError(f"Invalid snapshot: {e}") from e


def read_snapshot(path: Union[str, Path]) -> Snapshot:
    path = Path(path)
    if not path.is_file():
        raise InputFormatError(f"Snapshot not found: {path}", extra={"path": str(path)})
    return Snapshot.from_json(path.read_text(encoding="utf-8"))


def write_snapshot(path: Union[str, Path], snapshot: Snapshot) -> None:
    Path(path).write_text(snapshot.to_json() + "\n", encoding="utf-8")


def read_trajectory(path: Union[str, Path]) -> List[Snapshot]:
    """Read a JSON Lines trajectory; any malformed line rejects the file."""
    path = Path(path)
    if not path.is_file():
        raise InputFormatError(f"Trajectory not found: {path}", extra={"path": str(path)})
    snapshots = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                snapshots.append(Snapshot.from_json(line))
            except InputFormatError as e:
                raise InputFormatError(
                    f"{path}:{lineno}: {e.detail}", extra={"line": lineno}
                ) from e
    if not snapshots:
        raise InputFormatError(f"Trajectory is empty: {path}")
    sizes = {s.n for s in snapshots}
    if len(sizes) != 1:
        raise InputFormatError("Trajectory mixes grid sizes", extra={"sizes": sorted(sizes)})
    return snapshots


def append_snapshots(path: Union[str, Path], snapshots: Iterable[Snapshot]) -> None:
    with Path(path).open("a", encoding="utf-8") as fh:
        for snapshot in snapshots:
            fh.write(snapshot.to_json() + "\n")
