"""
Custom exceptions for the wave solver.

Every error carries a machine-readable ``error_code``, free-form ``extra``
context and the process ``exit_code`` the command line maps it to.
"""
from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_RUNTIME_ABORT = 3


class WaveError(Exception):
    """Base exception for solver errors."""

    def __init__(
        self,
        detail: Any = None,
        error_code: Optional[str] = None,
        extra: Optional[Dict[str, Any]] = None,
        exit_code: int = EXIT_RUNTIME_ABORT,
    ) -> None:
        self.detail = detail or "An error occurred"
        self.error_code = error_code or "WAVE_ERROR"
        self.extra = extra or {}
        self.exit_code = exit_code
        super().__init__(self.detail)

    def to_dict(self) -> Dict[str, Any]:
        return {"error_code": self.error_code, "detail": str(self.detail), **self.extra}


class ConfigError(WaveError):
    """Invalid or unknown configuration."""
    def __init__(
        self,
        detail: Any = "Invalid configuration",
        error_code: str = "CONFIG_ERROR",
        **kwargs: Any,
    ) -> None:
        super().__init__(detail=detail, error_code=error_code, exit_code=EXIT_INPUT_ERROR, **kwargs)


class InputFormatError(WaveError):
    """Malformed snapshot, trajectory or other input file."""
    def __init__(
        self,
        detail: Any = "Malformed input",
        error_code: str = "INPUT_FORMAT",
        **kwargs: Any,
    ) -> None:
        super().__init__(detail=detail, error_code=error_code, exit_code=EXIT_INPUT_ERROR, **kwargs)


class GridError(WaveError):
    """Grid size violates the discretization invariants."""
    def __init__(
        self,
        detail: Any = "Grid size must be even and at least 16",
        error_code: str = "INVALID_GRID",
        **kwargs: Any,
    ) -> None:
        super().__init__(detail=detail, error_code=error_code, exit_code=EXIT_INPUT_ERROR, **kwargs)


class FieldError(WaveError):
    """Field on the wrong grid or of the wrong kind (e.g. complex where real is required)."""
    def __init__(
        self,
        detail: Any = "Field mismatch",
        error_code: str = "FIELD_ERROR",
        **kwargs: Any,
    ) -> None:
        super().__init__(detail=detail, error_code=error_code, **kwargs)


class UnderResolutionError(WaveError):
    """Spectral multiplier exceeds floating point range."""
    def __init__(
        self,
        detail: Any = "Derivative multiplier overflows float range",
        error_code: str = "UNDER_RESOLVED",
        **kwargs: Any,
    ) -> None:
        super().__init__(detail=detail, error_code=error_code, **kwargs)


class ClosureError(WaveError):
    """Closure defect too large to project away."""
    def __init__(
        self,
        detail: Any = "Closure defect too large",
        error_code: str = "CLOSURE_DEFECT",
        **kwargs: Any,
    ) -> None:
        super().__init__(detail=detail, error_code=error_code, **kwargs)


class KernelError(WaveError):
    """Kernel table cannot be built (near self-intersection)."""
    def __init__(
        self,
        detail: Any = "Chord-arc ratio below floor",
        error_code: str = "KERNEL_BLOWUP",
        **kwargs: Any,
    ) -> None:
        super().__init__(detail=detail, error_code=error_code, **kwargs)


class NonConvergence(WaveError):
    """Krylov solve did not reach its tolerance."""
    def __init__(
        self,
        detail: Any = "Second-kind solve did not converge",
        error_code: str = "NON_CONVERGENCE",
        residual: Optional[float] = None,
        iterations: Optional[int] = None,
        **kwargs: Any,
    ) -> None:
        extra = kwargs.pop("extra", {}) or {}
        extra.update({"residual": residual, "iterations": iterations})
        self.residual = residual
        self.iterations = iterations
        super().__init__(detail=detail, error_code=error_code, extra=extra, **kwargs)


class OperatorConsistencyError(WaveError):
    """Two routes to the same quantity disagree."""
    def __init__(
        self,
        detail: Any = "Operator routes disagree",
        error_code: str = "OPERATOR_MISMATCH",
        **kwargs: Any,
    ) -> None:
        super().__init__(detail=detail, error_code=error_code, **kwargs)


class SimulationAbort(WaveError):
    """Time integration stopped; ``reason`` is the label reported to the user."""
    reason = "abort"

    def __init__(
        self,
        detail: Any = "Simulation aborted",
        error_code: str = "SIMULATION_ABORT",
        t: Optional[float] = None,
        **kwargs: Any,
    ) -> None:
        extra = kwargs.pop("extra", {}) or {}
        extra.update({"reason": self.reason, "t": t})
        self.t = t
        super().__init__(detail=detail, error_code=error_code, extra=extra,
                         exit_code=EXIT_RUNTIME_ABORT, **kwargs)


class ChordArcAbort(SimulationAbort):
    reason = "chord-arc"

    def __init__(self, detail: Any = "Chord-arc ratio fell below floor", **kwargs: Any) -> None:
        super().__init__(detail=detail, error_code="CHORD_ARC", **kwargs)


class TaylorSignAbort(SimulationAbort):
    reason = "taylor-sign"

    def __init__(self, detail: Any = "Taylor sign a <= 0", **kwargs: Any) -> None:
        super().__init__(detail=detail, error_code="TAYLOR_SIGN", **kwargs)


class NonFiniteAbort(SimulationAbort):
    reason = "non-finite"

    def __init__(self, detail: Any = "NaN or Inf in state", **kwargs: Any) -> None:
        super().__init__(detail=detail, error_code="NON_FINITE", **kwargs)


class CFLViolation(SimulationAbort):
    reason = "cfl"

    def __init__(self, detail: Any = "Time step exceeds explicit stability limit", **kwargs: Any) -> None:
        super().__init__(detail=detail, error_code="CFL_VIOLATION", **kwargs)


class SolverAbort(SimulationAbort):
    reason = "non-convergence"

    def __init__(self, detail: Any = "Integral equation solve failed", **kwargs: Any) -> None:
        super().__init__(detail=detail, error_code="SOLVER_ABORT", **kwargs)


class VerificationFailure(WaveError):
    """One or more verification suites failed."""
    def __init__(
        self,
        detail: Any = "Verification failed",
        error_code: str = "VERIFICATION_FAILED",
        **kwargs: Any,
    ) -> None:
        super().__init__(detail=detail, error_code=error_code,
                         exit_code=EXIT_VERIFICATION_FAILED, **kwargs)
