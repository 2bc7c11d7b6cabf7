"""
Pydantic schemas for verification and audit reports.
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    name: str = Field(..., description="Identity or closed form being checked")
    error: float = Field(..., description="Measured error (NaN when the check raised)")
    tolerance: float = Field(..., description="Tolerance after resolution relaxation")
    passed: bool
    detail: Optional[str] = None


class SuiteResult(BaseModel):
    suite: str
    n_points: int
    passed: bool
    checks: List[CheckResult] = Field(default_factory=list)
    elapsed_seconds: float = 0.0
    error: Optional[Dict[str, Any]] = Field(None, description="Serialized exception if the suite crashed")


class VerifyReport(BaseModel):
    run_id: str
    n_points: int
    tolerance_scale: float
    passed: bool
    suites: List[SuiteResult]


class EnergyRateReport(BaseModel):
    samples: int
    max_ratio: float = Field(..., description="max dE/dt / (1 + E + E² + E³) over interior samples")
    relative_drift: float = Field(..., description="max |E(t) − E(0)| / E(0)")
    degree: Optional[int] = Field(None, description="Degree of the fitted bound, None if no fit exists")
    fitted_polynomial: List[float] = Field(default_factory=list, description="Coefficients c_0..c_d of C(E)")
    passed: bool


class AuditSummary(BaseModel):
    run_id: str
    trajectory: str
    sobolev_r: int
    energy_rate: EnergyRateReport
    estimates_passed: bool
    passed: bool
