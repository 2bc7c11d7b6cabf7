import numpy as np
import pytest

from services.waves.core.exceptions import FieldError, KernelError
from services.waves.numerics.birkhoff_rott import (
    adjoint_double_layer,
    adjoint_double_layer_rate,
    apply_adjoint_double_layer_matrix,
    birkhoff_rott_velocity,
    build_workspace,
    cauchy_transform,
    commutator_exp2itheta,
    commutator_velocity,
    double_layer,
    far_field_velocity,
    holomorphy_residual,
    remainder_R,
)
from services.waves.numerics.curve import CurveState, flat_state
from services.waves.numerics.fields import derive_fields
from services.waves.numerics.spectral import SpectralField, alpha_derivative, hilbert_transform, inner

from oracles import fine_cauchy, finite_difference_kernel_rate, wavy_state


def test_flat_cauchy_closed_forms(flat):
    ws = build_workspace(flat)
    grid = flat.grid
    e_minus = SpectralField.of(grid, lambda a: np.exp(-1j * a))
    assert (cauchy_transform(e_minus, ws) - e_minus).max_abs() <= 1e-10
    assert cauchy_transform(SpectralField.constant(grid, 1.0 + 0j), ws).max_abs() <= 1e-10


def test_flat_cauchy_is_minus_i_hilbert(flat):
    ws = build_workspace(flat)
    f = SpectralField.of(flat.grid, lambda a: np.cos(2 * a) + 0.3 * np.sin(5 * a))
    assert (cauchy_transform(f, ws) - hilbert_transform(f) * (-1j)).max_abs() <= 1e-10


def test_flat_velocities(grid64):
    constant = flat_state(grid64, gamma_value=0.7)
    Wbar = birkhoff_rott_velocity(constant, build_workspace(constant))
    assert (Wbar - 0.35).max_abs() <= 1e-10

    cos = SpectralField.of(grid64, np.cos)
    wave = CurveState(grid=grid64, theta=constant.theta, gamma=cos, length=constant.length)
    Wbar = birkhoff_rott_velocity(wave, build_workspace(wave))
    expected = SpectralField.of(grid64, lambda a: 0.5 * np.exp(-1j * a))
    assert (Wbar - expected).max_abs() <= 1e-10


def test_flat_layers_vanish(flat):
    ws = build_workspace(flat)
    f = SpectralField.of(flat.grid, np.cos)
    assert adjoint_double_layer(f, ws).max_abs() <= 1e-10
    assert remainder_R(f, ws).max_abs() <= 1e-14


def test_cauchy_matches_fine_quadrature():
    state = wavy_state(64)
    ws = build_workspace(state)
    func = lambda a: np.cos(a) + 0.5 * np.sin(2 * a)  # noqa: E731
    computed = cauchy_transform(SpectralField.of(state.grid, func), ws).samples
    assert np.max(np.abs(computed - fine_cauchy(state, func))) <= 1e-8


def test_cauchy_is_linear(wavy, wavy_ws):
    f = SpectralField.of(wavy.grid, np.cos)
    g = SpectralField.of(wavy.grid, lambda a: np.sin(3 * a))
    lhs = cauchy_transform(f * 2.0 + g * 1j, wavy_ws)
    rhs = cauchy_transform(f, wavy_ws) * 2.0 + cauchy_transform(g, wavy_ws) * 1j
    assert (lhs - rhs).max_abs() <= 1e-13


def test_remainder_relation(wavy, wavy_ws):
    f = SpectralField.of(wavy.grid, lambda a: np.cos(a) + 0.5 * np.sin(2 * a))
    h_f = cauchy_transform(f, wavy_ws)
    R_f = remainder_R(f, wavy_ws)
    assert (h_f.real - R_f.imag).max_abs() <= 1e-8
    assert (R_f - (h_f * 1j - hilbert_transform(f))).max_abs() <= 1e-8


def test_layer_routes_agree(wavy, wavy_ws):
    f = SpectralField.of(wavy.grid, lambda a: np.exp(np.sin(a)))
    g = SpectralField.of(wavy.grid, lambda a: np.cos(2 * a))
    via_h = adjoint_double_layer(f, wavy_ws)
    via_kernel = apply_adjoint_double_layer_matrix(f, wavy_ws)
    assert (via_h - via_kernel).max_abs() <= 1e-8
    L = wavy.length
    assert inner(double_layer(g, wavy_ws), f, L) == pytest.approx(inner(g, via_h, L), abs=1e-10)


def test_layers_reject_complex(wavy, wavy_ws):
    f = SpectralField.of(wavy.grid, lambda a: np.exp(1j * a))
    with pytest.raises(FieldError):
        double_layer(f, wavy_ws)
    with pytest.raises(FieldError):
        adjoint_double_layer(f, wavy_ws)


def test_derivative_commutes_with_cauchy(wavy, wavy_ws):
    f = SpectralField.of(wavy.grid, lambda a: np.cos(a) + 0.5 * np.sin(2 * a))
    xi_alpha = SpectralField(wavy.grid, wavy_ws.xi_alpha)
    lhs = alpha_derivative(cauchy_transform(f, wavy_ws))
    rhs = xi_alpha * cauchy_transform(alpha_derivative(f) / xi_alpha, wavy_ws)
    assert (lhs - rhs).max_abs() <= 1e-8


def test_holomorphy_residual_converges():
    residuals = []
    for n in (64, 128, 256):
        state = wavy_state(n, amplitude=0.05, gamma_amplitude=0.05)
        ws = build_workspace(state)
        residuals.append(holomorphy_residual(state, ws, birkhoff_rott_velocity(state, ws)))
    assert residuals[-1] <= 1e-6
    for coarse, fine in zip(residuals, residuals[1:]):
        assert fine <= max(0.1 * coarse, 1e-12)


def test_far_field_is_mean_circulation(grid64):
    state = flat_state(grid64, gamma_value=0.4)
    assert far_field_velocity(state) == pytest.approx(2 * np.pi * 0.4 / (4 * np.pi))


def test_commutators_vanish_for_constant_data(wavy, wavy_ws):
    const = SpectralField.constant(wavy.grid, 0.3 + 0j)
    assert commutator_exp2itheta(const, wavy_ws).max_abs() <= 1e-12
    W = SpectralField.constant(wavy.grid, 0.2 - 0.1j)
    f = SpectralField.of(wavy.grid, np.cos)
    assert commutator_velocity(W, f, wavy_ws).max_abs() <= 1e-12


def test_kernel_rate_matches_finite_difference():
    state = wavy_state(64, amplitude=0.05, gamma_amplitude=0.2)
    ws = build_workspace(state)
    derived = derive_fields(state, ws, with_errors=False)
    velocity = (1j * derived.U.samples + derived.T.samples) * ws.points.tangent
    analytic = adjoint_double_layer_rate(ws, velocity, derived.theta_t.samples, derived.L_t)
    fd = finite_difference_kernel_rate(state, derived.theta_t, derived.L_t, eps=1e-5)
    half_gamma = 0.5 * state.gamma.samples
    reference = analytic @ half_gamma
    assert np.linalg.norm(reference) >= 1e-4
    assert np.linalg.norm(reference - fd @ half_gamma) <= 1e-6 * np.linalg.norm(reference)


def test_workspace_rejects_near_self_intersection():
    steep = wavy_state(64, amplitude=0.8)
    with pytest.raises(KernelError):
        build_workspace(steep, chord_arc_floor=0.99)
