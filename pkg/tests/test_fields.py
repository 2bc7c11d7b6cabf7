import numpy as np
import pytest

from services.waves.core.exceptions import InputFormatError, OperatorConsistencyError
from services.waves.numerics.birkhoff_rott import adjoint_double_layer, build_workspace
from services.waves.numerics.curve import flat_state, initial_state
from services.waves.numerics.dynamics import TimeStepper
from services.waves.numerics.fields import (
    acceleration_taylor_sign,
    check_window,
    delta_u,
    derive_fields,
    quasilinear_theta_rate,
    stretching_rate,
    taylor_sign,
)
from services.waves.numerics.spectral import PeriodicGrid, SpectralField, alpha_derivative, mean
from services.waves.schemas.config import SolverConfig


def test_flat_rest(flat):
    derived = derive_fields(flat)
    assert derived.a.max_abs() == pytest.approx(1.0, abs=1e-10)
    assert derived.U.max_abs() <= 1e-14
    assert derived.delta.max_abs() <= 1e-14
    assert derived.L_t == 0.0


def test_flat_uniform_vorticity(grid64):
    state = flat_state(grid64, gamma_value=0.6)
    derived = derive_fields(state)
    assert (derived.Wbar - 0.3).max_abs() <= 1e-10
    assert (derived.delta - 0.3).max_abs() <= 1e-10
    assert derived.U.max_abs() <= 1e-10


def test_flat_without_gravity_has_zero_taylor_sign(flat):
    ws = build_workspace(flat)
    derived = derive_fields(flat, ws, gravity=0, with_errors=False)
    assert derived.a.max_abs() <= 1e-12


def test_tangential_velocity_frame(wavy):
    derived = derive_fields(wavy, with_errors=False)
    assert abs(mean(derived.T)) <= 1e-14
    source = alpha_derivative(wavy.theta) * derived.U
    assert derived.L_t == pytest.approx(-2 * np.pi * mean(source), abs=1e-14)


def test_delta_routes(wavy, wavy_ws):
    derived = derive_fields(wavy, wavy_ws, with_errors=False)
    half_gamma = wavy.gamma * 0.5
    via_layer = half_gamma - adjoint_double_layer(half_gamma, wavy_ws)
    via_velocity = SpectralField(wavy.grid, np.real(derived.Wbar.samples * wavy_ws.points.tangent))
    assert (via_layer - via_velocity).max_abs() <= 1e-10
    assert (derived.delta + derived.T - via_layer).max_abs() <= 1e-10


def test_delta_routes_detect_inconsistent_velocity(wavy, wavy_ws):
    derived = derive_fields(wavy, wavy_ws, with_errors=False)
    with pytest.raises(OperatorConsistencyError):
        delta_u(wavy, wavy_ws, derived.W + 1e-3, derived.T)


def test_stretching_rate_adds_length_rate(grid64):
    u = SpectralField.of(grid64, np.cos)
    assert (stretching_rate(u, 2.0, 0.5) - u - 0.25).max_abs() <= 1e-15


def test_taylor_sign_positive_on_small_wave(small_wave):
    ws = build_workspace(small_wave)
    derived = derive_fields(small_wave, ws, with_errors=False)
    a, diag = taylor_sign(small_wave, ws, derived.W)
    assert float(np.min(a.samples)) > 0.0
    assert diag.residual <= 1e-12


def test_quasilinear_theta_rate_matches_kinematics():
    state = initial_state(PeriodicGrid(256), 1, 0.05, 1)
    derived = derive_fields(state)
    mismatch = derived.theta_t - quasilinear_theta_rate(state, derived)
    assert np.linalg.norm(mismatch.samples) <= 1e-4 * np.linalg.norm(derived.theta_t.samples)


def test_provenance_records_error_terms(small_wave):
    assert "phi" not in derive_fields(small_wave, with_errors=False).provenance
    assert derive_fields(small_wave).provenance["psi"] == "kinematic_theta_t"


@pytest.mark.parametrize(
    "times",
    [
        [0.0, 0.1],
        [0.0, 0.1, 0.25],
        [0.0, 0.1, 0.2, 0.3],
    ],
)
def test_check_window_rejects(times):
    with pytest.raises(InputFormatError):
        check_window(times, 0.1)


def test_check_window_accepts_uniform():
    check_window([1.0, 1.1, 1.2], 0.1)


@pytest.mark.slow
def test_taylor_sign_matches_momentum_balance(small_wave):
    dt = 1e-4
    stepper = TimeStepper(SolverConfig(n_points=64, dt=dt, enforce_taylor_sign=False))
    states = [small_wave]
    for _ in range(2):
        states.append(stepper.advance(states[-1]).state)
    window = [(s, derive_fields(s, with_errors=False)) for s in states]
    oracle = acceleration_taylor_sign(window, dt)
    assert (oracle - window[1][1].a).max_abs() <= 1e-5
