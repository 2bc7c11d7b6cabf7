"""
Second-kind integral equations (I ± K*)x = b and (I ± K)x = b.

Solved matrix-free with restarted GMRES; the operators are applied through
the Cauchy transform of ``birkhoff_rott``.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.sparse.linalg import LinearOperator, gmres

from ..core.exceptions import FieldError, NonConvergence
from ..core.logging_config import get_logger
from .birkhoff_rott import KernelWorkspace, adjoint_double_layer, double_layer
from .curve import CurveState
from .spectral import SpectralField

logger = get_logger(__name__)

DEFAULT_TOLERANCE = 1e-12
DEFAULT_MAX_ITERATIONS = 200
RESTART = 50


class LayerSide(str, Enum):
    ADJOINT = "adjoint"
    DIRECT = "direct"


@dataclass(frozen=True)
class SecondKindProblem:
    sign: int
    side: LayerSide
    rhs: SpectralField
    tolerance: float = DEFAULT_TOLERANCE
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise FieldError("sign must be +1 or -1", extra={"sign": self.sign})
        if not 0.0 < self.tolerance <= 1e-6:
            raise FieldError("tolerance must lie in (0, 1e-6]", extra={"tolerance": self.tolerance})
        if self.max_iterations < 10:
            raise FieldError("max_iterations must be at least 10")
        if not self.rhs.is_real:
            raise FieldError("right-hand side must be real")


class SolveDiagnostics(BaseModel):
    residual: float = Field(..., description="Relative residual ||Ax - b|| / ||b||")
    iterations: int = Field(..., description="Inner GMRES iterations")
    condition_estimate: Optional[float] = Field(None, description="2-norm condition number of the quadrature matrix")


def _layer(side: LayerSide):
    return adjoint_double_layer if side == LayerSide.ADJOINT else double_layer


def apply_second_kind(p: SecondKindProblem, x: SpectralField, ws: KernelWorkspace) -> SpectralField:
    """(I ± K*)x or (I ± K)x."""
    return x + _layer(p.side)(x, ws) * float(p.sign)


def dense_operator(p: SecondKindProblem, ws: KernelWorkspace) -> np.ndarray:
    """Quadrature matrix of the second-kind operator (debug and condition estimates)."""
    C = ws.cauchy_matrix
    if p.side == LayerSide.ADJOINT:
        t = ws.points.tangent
        layer = -np.real(t[:, None] * C * np.conj(t)[None, :])
    else:
        layer = np.real(C)
    return np.eye(ws.n_points) + p.sign * layer


def solve_second_kind(
    p: SecondKindProblem,
    ws: KernelWorkspace,
    estimate_condition: bool = False,
) -> Tuple[SpectralField, SolveDiagnostics]:
    """
    Solve the second-kind equation with restarted GMRES.

    Raises:
        NonConvergence: relative residual above tolerance after max_iterations
    """
    grid = ws.grid
    b = np.array(p.rhs.samples, dtype=float)
    condition = float(np.linalg.cond(dense_operator(p, ws))) if estimate_condition else None
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return SpectralField(grid, np.zeros(grid.n_points)), SolveDiagnostics(
            residual=0.0, iterations=0, condition_estimate=condition
        )

    def matvec(v: np.ndarray) -> np.ndarray:
        # gmres updates the returned vector in place
        return np.array(apply_second_kind(p, SpectralField(grid, np.real(v)), ws).samples)

    operator = LinearOperator((grid.n_points, grid.n_points), matvec=matvec, dtype=float)
    iterations = 0

    def count(_residual_norm) -> None:
        nonlocal iterations
        iterations += 1

    restart = min(RESTART, grid.n_points)
    x, info = gmres(
        operator,
        b,
        rtol=0.5 * p.tolerance,
        atol=0.0,
        restart=restart,
        maxiter=max(1, int(np.ceil(p.max_iterations / restart))),
        callback=count,
        callback_type="pr_norm",
    )
    residual = float(np.linalg.norm(matvec(x) - b) / b_norm)
    logger.debug("%s solve sign %+d: %d iterations, residual %.2e", p.side.value, p.sign, iterations, residual)
    if residual > p.tolerance or not np.isfinite(residual):
        raise NonConvergence(residual=residual, iterations=iterations,
                             extra={"side": p.side.value, "sign": p.sign, "info": int(info)})
    return SpectralField(grid, x), SolveDiagnostics(
        residual=residual, iterations=iterations, condition_estimate=condition
    )


def recover_gamma(
    state: CurveState,
    ws: KernelWorkspace,
    delta: SpectralField,
    T: SpectralField,
    tolerance: float = DEFAULT_TOLERANCE,
) -> SpectralField:
    """γ from (I − K*)(γ/2) = δ + T."""
    problem = SecondKindProblem(sign=-1, side=LayerSide.ADJOINT, rhs=delta + T, tolerance=tolerance)
    half_gamma, _ = solve_second_kind(problem, ws)
    return half_gamma * 2.0
