"""
Singular integral operators on the periodic interface.

All kernels use the 2π-periodized Cauchy kernel (1/2)cot(z/2). Principal
value integrals use the alternate-point trapezoid rule; smooth difference
kernels use the plain trapezoid rule with analytic diagonal limits.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..core.exceptions import FieldError, KernelError
from ..core.logging_config import get_logger
from .curve import TWO_PI, CurvePoints, CurveState, chord_arc_monitor, reconstruct
from .spectral import SpectralField, alpha_derivative

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class KernelWorkspace:
    """Cotangent tables and derived quadrature matrices for one curve."""

    state: CurveState
    points: CurvePoints
    xi_alpha: np.ndarray
    theta_alpha: np.ndarray
    cot_table: np.ndarray
    flat_cot: np.ndarray
    chord_arc: float

    @property
    def grid(self):
        return self.state.grid

    @property
    def n_points(self) -> int:
        return self.state.grid.n_points

    @property
    def weight(self) -> float:
        return self.state.grid.spacing

    @cached_property
    def diagonal(self) -> dict:
        """Analytic diagonal limits of the smooth kernels (before quadrature weights)."""
        e2 = np.exp(2j * self.state.theta.samples)
        return {
            "remainder": -1j * self.theta_alpha,
            "commutator_exp2itheta": -(4j * self.theta_alpha * e2 / self.xi_alpha) / (2j * np.pi),
            "adjoint_double_layer": -self.theta_alpha / TWO_PI,
        }

    @cached_property
    def cauchy_matrix(self) -> np.ndarray:
        n = self.n_points
        idx = np.arange(n)
        opposite = ((idx[:, None] - idx[None, :]) % 2) == 1
        factor = 2.0 * self.weight / (2j * np.pi)
        return factor * np.where(opposite, self.cot_table, 0.0) * self.xi_alpha[None, :]

    @cached_property
    def remainder_matrix(self) -> np.ndarray:
        kernel = self.cot_table * self.xi_alpha[None, :] - self.flat_cot
        np.fill_diagonal(kernel, self.diagonal["remainder"])
        return (self.weight / TWO_PI) * kernel

    @cached_property
    def commutator_exp2itheta_matrix(self) -> np.ndarray:
        e2 = np.exp(2j * self.state.theta.samples)
        kernel = -(e2[:, None] - e2[None, :]) * self.cot_table / (2j * np.pi)
        np.fill_diagonal(kernel, self.diagonal["commutator_exp2itheta"])
        return self.weight * kernel

    @cached_property
    def adjoint_double_layer_matrix(self) -> np.ndarray:
        tangent = self.points.tangent
        kernel = -self.state.arc_scale * np.real(tangent[:, None] * self.cot_table / (2j * np.pi))
        np.fill_diagonal(kernel, self.diagonal["adjoint_double_layer"])
        return self.weight * kernel


def _cot_half(diff: np.ndarray) -> np.ndarray:
    n = diff.shape[0]
    safe = diff.copy()
    np.fill_diagonal(safe, 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        table = 1.0 / np.tan(safe / 2.0)
    table[np.arange(n), np.arange(n)] = 0.0
    return table


def build_workspace(state: CurveState, chord_arc_floor: float = 0.0) -> KernelWorkspace:
    """
    Precompute the kernel tables for ``state``.

    Raises:
        KernelError: chord-arc ratio below ``chord_arc_floor`` or non-finite table
    """
    points, _ = reconstruct(state)
    ratio = chord_arc_monitor(points)
    if ratio < chord_arc_floor:
        raise KernelError(extra={"chord_arc": ratio, "floor": chord_arc_floor, "t": state.time})
    xi = points.xi
    alpha = state.grid.alpha_nodes
    cot_table = _cot_half(xi[:, None] - xi[None, :])
    if not np.all(np.isfinite(cot_table)):
        raise KernelError("Non-finite cotangent table", extra={"chord_arc": ratio, "t": state.time})
    flat_cot = _cot_half((alpha[:, None] - alpha[None, :]).astype(complex)).real
    return KernelWorkspace(
        state=state,
        points=points,
        xi_alpha=state.arc_scale * points.tangent,
        theta_alpha=alpha_derivative(state.theta).samples,
        cot_table=cot_table,
        flat_cot=flat_cot,
        chord_arc=ratio,
    )


def _require_real(f: SpectralField, name: str) -> None:
    if not f.is_real:
        raise FieldError(f"{name} requires a real-valued field")


def cauchy_transform(f: SpectralField, ws: KernelWorkspace) -> SpectralField:
    """𝔥f(α) = (1/2πi) p.v.∫ f(β) ξ_β cot((ξ(α) − ξ(β))/2) dβ."""
    return SpectralField(ws.grid, ws.cauchy_matrix @ f.samples.astype(complex), real=False)


def birkhoff_rott_velocity(state: CurveState, ws: KernelWorkspace) -> SpectralField:
    """Conjugate interface velocity W̄ = (1/2)(I + 𝔥)(γ e^{-iθ})."""
    g = SpectralField(state.grid, state.gamma.samples * np.conj(ws.points.tangent))
    return (g + cauchy_transform(g, ws)) * 0.5


def far_field_velocity(state: CurveState) -> float:
    """W̄_∞ = (1/4π)∫γ ds, the constant (I − 𝔥)W̄."""
    return float(state.length * np.mean(state.gamma.samples) / (2.0 * TWO_PI))


def holomorphy_residual(state: CurveState, ws: KernelWorkspace, Wbar: SpectralField) -> float:
    """‖(I − 𝔥)W̄ − W̄_∞‖ in L²(ds)."""
    residual = Wbar - cauchy_transform(Wbar, ws) - far_field_velocity(state)
    return float(np.sqrt(state.length / state.grid.n_points * np.sum(np.abs(residual.samples) ** 2)))


def double_layer(f: SpectralField, ws: KernelWorkspace) -> SpectralField:
    """K f = Re 𝔥f."""
    _require_real(f, "double_layer")
    return cauchy_transform(f, ws).real


def adjoint_double_layer(f: SpectralField, ws: KernelWorkspace) -> SpectralField:
    """K* f = -Re(e^{iθ} 𝔥(e^{-iθ} f))."""
    _require_real(f, "adjoint_double_layer")
    tangent = ws.points.tangent
    rotated = SpectralField(ws.grid, np.conj(tangent) * f.samples)
    return SpectralField(ws.grid, -np.real(tangent * cauchy_transform(rotated, ws).samples))


def remainder_R(f: SpectralField, ws: KernelWorkspace) -> SpectralField:
    """R = i𝔥 − H as a smooth-kernel quadrature; vanishes on the flat curve."""
    return SpectralField(ws.grid, ws.remainder_matrix @ f.samples.astype(complex), real=False)


def commutator_exp2itheta(f: SpectralField, ws: KernelWorkspace) -> SpectralField:
    """[𝔥, e^{2iθ}](f_s/ξ_s)."""
    f_beta = alpha_derivative(f).samples.astype(complex)
    return SpectralField(ws.grid, ws.commutator_exp2itheta_matrix @ f_beta, real=False)


def commutator_velocity(W: SpectralField, f: SpectralField, ws: KernelWorkspace) -> SpectralField:
    """[W, 𝔥](f_s/ξ_s), using the curve cotangent."""
    w = W.samples.astype(complex)
    w_alpha = alpha_derivative(W).samples
    f_beta = alpha_derivative(f).samples.astype(complex)
    kernel = (w[:, None] - w[None, :]) * ws.cot_table / (2j * np.pi)
    np.fill_diagonal(kernel, (2.0 * w_alpha / ws.xi_alpha) / (2j * np.pi))
    return SpectralField(ws.grid, ws.weight * (kernel @ f_beta), real=False)


def apply_adjoint_double_layer_matrix(f: SpectralField, ws: KernelWorkspace) -> SpectralField:
    """K* f through the direct smooth kernel instead of 𝔥."""
    _require_real(f, "adjoint_double_layer")
    return SpectralField(ws.grid, ws.adjoint_double_layer_matrix @ f.samples)


def adjoint_double_layer_rate(
    ws: KernelWorkspace,
    velocity: np.ndarray,
    theta_t: np.ndarray,
    L_t: float,
) -> np.ndarray:
    """
    Quadrature matrix of ∂_t K* at fixed α.

    Nodes move with ``velocity`` = U n + T t, the tangent angle with
    ``theta_t`` and the period length with ``L_t``.
    """
    L = ws.state.length
    tangent = ws.points.tangent
    c = ws.cot_table
    dv = velocity[:, None] - velocity[None, :]
    rate = (
        L_t * tangent[:, None] * c
        + L * 1j * (theta_t * tangent)[:, None] * c
        - 0.5 * L * tangent[:, None] * (1.0 + c ** 2) * dv
    )
    kernel = -np.real(rate / (2j * np.pi)) / TWO_PI
    theta_t_alpha = alpha_derivative(SpectralField(ws.grid, theta_t)).samples
    np.fill_diagonal(kernel, -theta_t_alpha / TWO_PI)
    return ws.weight * kernel
