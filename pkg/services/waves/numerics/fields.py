"""
Derived interface quantities: velocities, stretching rates, Taylor sign
and the error terms of the quasilinear tangent-angle/stretching system.

Frame conventions. Time derivatives ``theta_t`` and ``u_t`` are taken at
fixed α on the equal-arclength grid. Fluid particles move along the
interface relative to the grid with speed δ, so the rate following a
particle is ∂_t + δ∂_s. The particle stretching rate is u + L_t/L.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import InputFormatError, OperatorConsistencyError
from ..core.logging_config import get_logger
from .birkhoff_rott import (
    KernelWorkspace,
    adjoint_double_layer,
    birkhoff_rott_velocity,
    build_workspace,
    cauchy_transform,
    commutator_exp2itheta,
    commutator_velocity,
    remainder_R,
)
from .curve import TWO_PI, CurveState, curvature_pressure
from .layer_solve import LayerSide, SecondKindProblem, SolveDiagnostics, solve_second_kind
from .spectral import (
    SpectralField,
    alpha_derivative,
    antiderivative,
    fourier_derivative,
    hilbert_transform,
    mean,
)

logger = get_logger(__name__)

ROUTE_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class DerivedFields:
    W: SpectralField
    Wbar: SpectralField
    U: SpectralField
    T: SpectralField
    delta: SpectralField
    u: SpectralField
    a: SpectralField
    theta_t: SpectralField
    L_t: float
    phi: Optional[SpectralField] = None
    psi: Optional[SpectralField] = None
    omega: Optional[SpectralField] = None
    provenance: Dict[str, str] = field(default_factory=dict)
    workspace: Optional[KernelWorkspace] = field(default=None, repr=False)

    @property
    def min_a(self) -> float:
        return float(np.min(self.a.samples))

    @property
    def stretching_rate(self) -> SpectralField:
        """u + L_t/L."""
        return stretching_rate(self.u, self.workspace.state.length, self.L_t)


def normal_velocity(state: CurveState, W: SpectralField) -> SpectralField:
    """U = Re(W̄ · i e^{iθ})."""
    normal = 1j * np.exp(1j * state.theta.samples)
    return SpectralField(state.grid, np.real(np.conj(W.samples) * normal))


def tangential_velocity(state: CurveState, U: SpectralField) -> Tuple[SpectralField, float]:
    """
    Equal-arclength tangential velocity.

    T_α = θ_α U − mean(θ_α U), mean(T) = 0, and L_t = −∫θ_α U dα.
    """
    source = alpha_derivative(state.theta) * U
    T, source_mean = antiderivative(source, TWO_PI)
    return T, float(-TWO_PI * source_mean)


def frame_theta_rate(state: CurveState, U: SpectralField, T: SpectralField) -> SpectralField:
    """θ_t = (2π/L)(U_α + T θ_α) at fixed α."""
    return (alpha_derivative(U) + T * alpha_derivative(state.theta)) * (TWO_PI / state.length)


def delta_u(
    state: CurveState,
    ws: KernelWorkspace,
    W: SpectralField,
    T: SpectralField,
    tolerance: float = ROUTE_TOLERANCE,
) -> Tuple[SpectralField, SpectralField]:
    """
    δ = (I − K*)(γ/2) − T and u = δ_s.

    Raises:
        OperatorConsistencyError: δ differs from Re(W̄e^{iθ}) − T by more than ``tolerance``
    """
    half_gamma = state.gamma * 0.5
    delta = half_gamma - adjoint_double_layer(half_gamma, ws) - T
    tangential = SpectralField(state.grid, np.real(np.conj(W.samples) * ws.points.tangent))
    mismatch = float(np.max(np.abs((tangential - T - delta).samples)))
    if mismatch > tolerance:
        raise OperatorConsistencyError(
            "delta routes disagree", extra={"mismatch": mismatch, "t": state.time}
        )
    return delta, fourier_derivative(delta, 1, state.length)


def material_theta_rate(theta_t: SpectralField, delta: SpectralField, state: CurveState) -> SpectralField:
    """θ_t + δθ_s, the rate following fluid particles."""
    return theta_t + delta * fourier_derivative(state.theta, 1, state.length)


def stretching_rate(u: SpectralField, L: float, L_t: float) -> SpectralField:
    return u + L_t / L


def taylor_sign(
    state: CurveState,
    ws: KernelWorkspace,
    W: SpectralField,
    gravity: int = 1,
    tolerance: float = 1e-12,
    max_iterations: int = 200,
) -> Tuple[SpectralField, SolveDiagnostics]:
    """
    Solve (I + K*)a = Re{ie^{iθ}([W, 𝔥](W̄_s/ξ_s) − ig(I − 𝔥)1 + (I − 𝔥)(P_s e^{−iθ}))}.
    """
    grid = state.grid
    tangent = ws.points.tangent
    Wbar = W.conj()
    one = SpectralField.constant(grid, 1.0 + 0j)
    P_s = fourier_derivative(curvature_pressure(state), 1, state.length)
    pressure_term = SpectralField(grid, P_s.samples * np.conj(tangent))

    bracket = commutator_velocity(W, Wbar, ws)
    if gravity:
        bracket = bracket - (one - cauchy_transform(one, ws)) * (1j * gravity)
    bracket = bracket + pressure_term - cauchy_transform(pressure_term, ws)
    rhs = SpectralField(grid, np.real(1j * tangent * bracket.samples))

    problem = SecondKindProblem(
        sign=1, side=LayerSide.ADJOINT, rhs=rhs, tolerance=tolerance, max_iterations=max_iterations
    )
    return solve_second_kind(problem, ws)


def phi_error(
    state: CurveState,
    ws: KernelWorkspace,
    W: SpectralField,
    u: SpectralField,
    theta_t: SpectralField,
    delta: SpectralField,
    L_t: float = 0.0,
) -> SpectralField:
    """
    φ̃ = Re R(u + L_t/L) + Im R(θ_t + δθ_s) + Im [𝔥, e^{2iθ}](W̄_s/ξ_s).

    ``theta_t`` is the kinematic rate at fixed α.
    """
    u_particle = stretching_rate(u, state.length, L_t)
    theta_particle = material_theta_rate(theta_t, delta, state)
    return (
        remainder_R(u_particle, ws).real
        + remainder_R(theta_particle, ws).imag
        + commutator_exp2itheta(W.conj(), ws).imag
    )


def lagrangian_phi(
    state: CurveState,
    ws: KernelWorkspace,
    W: SpectralField,
    u: SpectralField,
    theta_t: SpectralField,
    delta: SpectralField,
    L_t: float,
) -> SpectralField:
    """Complex φ with θ_t(particle) = i𝔥(u + L_t/L) + φ."""
    u_particle = stretching_rate(u, state.length, L_t)
    theta_particle = material_theta_rate(theta_t, delta, state)
    return (
        remainder_R(u_particle, ws).imag * (-1j)
        + remainder_R(theta_particle, ws).imag
        + commutator_exp2itheta(W.conj(), ws).imag
    )


def psi_error(
    state: CurveState,
    W: SpectralField,
    u: SpectralField,
    theta_t: SpectralField,
    delta: SpectralField,
    a: SpectralField,
    L_t: float = 0.0,
) -> SpectralField:
    """
    ψ̃ = −(u + L_t/L) Re(e^{−iθ}W_s) + (θ_t + δθ_s)² − c.

    The constant c = d/dt(L_t/L) keeps the fixed-α rate u_t mean-free.
    """
    L = state.length
    u_particle = stretching_rate(u, L, L_t)
    theta_particle = material_theta_rate(theta_t, delta, state)
    W_s = fourier_derivative(W, 1, L)
    stretch = SpectralField(state.grid, np.real(np.exp(-1j * state.theta.samples) * W_s.samples))
    psi_particle = theta_particle * theta_particle - u_particle * stretch
    theta_s = fourier_derivative(state.theta, 1, L)
    u_s = fourier_derivative(u, 1, L)
    correction = mean(psi_particle - a * theta_s - delta * u_s)
    return psi_particle - correction


def quasilinear_theta_rate(state: CurveState, derived: DerivedFields) -> SpectralField:
    """H(u) − δθ_s + φ̃."""
    theta_s = fourier_derivative(state.theta, 1, state.length)
    return hilbert_transform(derived.u) - derived.delta * theta_s + derived.phi


def quasilinear_u_rate(state: CurveState, derived: DerivedFields) -> SpectralField:
    """θ_sss − aθ_s − δu_s + ψ̃."""
    L = state.length
    theta_s = fourier_derivative(state.theta, 1, L)
    return (
        fourier_derivative(state.theta, 3, L)
        - derived.a * theta_s
        - derived.delta * fourier_derivative(derived.u, 1, L)
        + derived.psi
    )


def derive_fields(
    state: CurveState,
    ws: Optional[KernelWorkspace] = None,
    gravity: int = 1,
    solver_tol: float = 1e-12,
    max_iterations: int = 200,
    chord_arc_floor: float = 0.0,
    with_errors: bool = True,
) -> DerivedFields:
    """Assemble W, U, T, δ, u, a, θ_t and (optionally) φ̃, ψ̃ for one state."""
    if ws is None:
        ws = build_workspace(state, chord_arc_floor)
    Wbar = birkhoff_rott_velocity(state, ws)
    W = Wbar.conj()
    U = normal_velocity(state, W)
    T, L_t = tangential_velocity(state, U)
    delta, u = delta_u(state, ws, W, T)
    theta_t = frame_theta_rate(state, U, T)
    a, _ = taylor_sign(state, ws, W, gravity=gravity, tolerance=solver_tol, max_iterations=max_iterations)
    phi = psi = None
    provenance = {
        "W": "birkhoff_rott",
        "delta": "adjoint_double_layer",
        "a": "second_kind_solve",
        "theta_t": "frame_kinematics",
    }
    if with_errors:
        phi = phi_error(state, ws, W, u, theta_t, delta, L_t)
        psi = psi_error(state, W, u, theta_t, delta, a, L_t)
        provenance.update({"phi": "kinematic_theta_t", "psi": "kinematic_theta_t"})
    return DerivedFields(
        W=W, Wbar=Wbar, U=U, T=T, delta=delta, u=u, a=a, theta_t=theta_t, L_t=L_t,
        phi=phi, psi=psi, provenance=provenance, workspace=ws,
    )


# -- centered time windows ----------------------------------------------------

def check_window(times: Sequence[float], dt: float) -> None:
    """Three samples, uniformly spaced by ``dt``."""
    if len(times) != 3:
        raise InputFormatError("Window must hold exactly three samples", extra={"size": len(times)})
    gaps = np.diff(np.asarray(times, dtype=float))
    scale = max(abs(dt), 1e-300)
    if np.any(np.abs(gaps - dt) > 1e-9 * scale + 1e-12 * max(1.0, abs(times[-1]))):
        raise InputFormatError("Window spacing is not uniform", extra={"gaps": gaps.tolist(), "dt": dt})


def acceleration_taylor_sign(
    window: Sequence[Tuple[CurveState, DerivedFields]],
    dt: float,
    gravity: int = 1,
) -> SpectralField:
    """Momentum oracle a = Im(e^{−iθ}(z_tt + ig)), z_tt = ∂_tW + δW_s."""
    check_window([s.time for s, _ in window], dt)
    (_, before), (state, center), (_, after) = window
    W_t = (after.W - before.W) * (1.0 / (2.0 * dt))
    z_tt = W_t + center.delta * fourier_derivative(center.W, 1, state.length)
    values = np.imag(np.exp(-1j * state.theta.samples) * (z_tt.samples + 1j * gravity))
    return SpectralField(state.grid, values)


def omega_error(
    window: Sequence[Tuple[CurveState, DerivedFields]],
    dt: float,
) -> SpectralField:
    """
    ω̃ with a_s = H(u_t) + ω̃, u_t the fixed-α rate.

    Time derivatives are second-order centered differences over the window.
    """
    check_window([s.time for s, _ in window], dt)
    (s0, d0), (state, d1), (s2, d2) = window
    ws = d1.workspace if d1.workspace is not None else build_workspace(state)
    L = state.length
    scale = 1.0 / (2.0 * dt)

    u_t = (d2.u - d0.u) * scale
    phis = [
        lagrangian_phi(s, d.workspace if d.workspace is not None else build_workspace(s),
                       d.W, d.u, d.theta_t, d.delta, d.L_t)
        for s, d in ((s0, d0), (s2, d2))
    ]
    phi_center = lagrangian_phi(state, ws, d1.W, d1.u, d1.theta_t, d1.delta, d1.L_t)
    phi_material = (phis[1] - phis[0]) * scale + d1.delta * fourier_derivative(phi_center, 1, L)

    u_s = fourier_derivative(d1.u, 1, L)
    transport = d1.delta * u_s
    u_particle = stretching_rate(d1.u, L, d1.L_t)
    theta_particle = material_theta_rate(d1.theta_t, d1.delta, state)
    theta_s = fourier_derivative(state.theta, 1, L)
    theta_ss = fourier_derivative(state.theta, 2, L)
    W_s = fourier_derivative(d1.W, 1, L)
    rotation = SpectralField(state.grid, np.imag(np.exp(-1j * state.theta.samples) * W_s.samples))

    complex_part = (
        hilbert_transform(transport)
        + remainder_R(u_t + transport, ws)
        + phi_material
        + commutator_velocity(d1.W, d1.u, ws) * 1j
    )
    return (
        complex_part.real
        + u_particle * theta_particle
        + rotation * u_particle
        - theta_ss * theta_s
    )


def taylor_sign_gradient_residual(
    window: Sequence[Tuple[CurveState, DerivedFields]],
    dt: float,
) -> float:
    """‖a_s − (H(u_t) + ω̃)‖ in L²(ds) at the window center."""
    (_, d0), (state, d1), (_, d2) = window
    omega = omega_error(window, dt)
    u_t = (d2.u - d0.u) * (1.0 / (2.0 * dt))
    a_s = fourier_derivative(d1.a, 1, state.length)
    diff = a_s - hilbert_transform(u_t) - omega
    return float(np.sqrt(state.length / state.grid.n_points * np.sum(diff.samples ** 2)))
