import numpy as np
import pytest

from services.waves.core.exceptions import ClosureError, FieldError
from services.waves.numerics.curve import (
    TWO_PI,
    CurveState,
    chord_arc_monitor,
    closure_defect,
    closure_project,
    curvature_pressure,
    geometric_curvature,
    initial_state,
    reconstruct,
    solve_length,
)
from services.waves.numerics.spectral import PeriodicGrid, SpectralField

from oracles import wavy_state


def test_flat_reconstruction_is_the_axis(flat):
    points, defect = reconstruct(flat)
    assert abs(defect) <= 1e-14
    assert np.allclose(points.xi, flat.grid.alpha_nodes, atol=1e-13)
    assert chord_arc_monitor(points) == pytest.approx(1.0, abs=1e-12)


def test_initial_state_is_closed(grid64):
    state = initial_state(grid64, 2, 0.05, 1)
    assert abs(closure_defect(state.theta, state.length)) <= 1e-12
    assert state.length >= TWO_PI
    points, defect = reconstruct(state)
    assert abs(defect) <= 1e-12
    assert abs(points.xi[0]) == 0.0


def test_initial_gamma_matches_linear_eigenvector(grid64):
    eps = 1e-3
    state = initial_state(grid64, 2, eps, 1)
    k_s = TWO_PI * 2 / state.length
    omega = np.sqrt(k_s * (k_s ** 2 + 1))
    assert state.gamma.max_abs() == pytest.approx(2 * omega / k_s * eps, rel=1e-10)


def test_solve_length_closes_real_part(grid64):
    theta = SpectralField.of(grid64, lambda a: 0.3 * np.cos(a))
    L = solve_length(theta)
    assert L * np.mean(np.cos(theta.samples)) == pytest.approx(TWO_PI, rel=1e-14)


def test_closure_project_rejects_large_defect(grid64):
    with pytest.raises(ClosureError):
        closure_project(SpectralField.constant(grid64, 0.0), 10.0)


def test_closure_project_resets_flat_length(grid64):
    flat = SpectralField.constant(grid64, 0.0)
    projected, L = closure_project(flat, TWO_PI + 1e-3)
    assert L == pytest.approx(TWO_PI, abs=1e-13)
    assert projected.max_abs() <= 1e-15


def test_closure_project_keeps_closed_state():
    state = wavy_state(64)
    projected, L = closure_project(state.theta, state.length)
    assert (projected - state.theta).max_abs() <= 1e-13
    assert L == pytest.approx(state.length, abs=1e-13)


def test_closure_project_removes_rotation(grid64):
    theta = SpectralField.of(grid64, lambda a: 0.01 + 0.1 * np.cos(a))
    projected, L = closure_project(theta, solve_length(theta))
    assert abs(closure_defect(projected, L)) <= 1e-12


def test_state_rejects_bad_length(grid64):
    zero = SpectralField.constant(grid64, 0.0)
    with pytest.raises(FieldError):
        CurveState(grid=grid64, theta=zero, gamma=zero, length=-1.0)


def test_curvature_pressure_matches_polygon_curvature():
    state = wavy_state(256, amplitude=0.1)
    points, _ = reconstruct(state)
    kappa = geometric_curvature(points)
    assert np.max(np.abs(curvature_pressure(state).samples + kappa)) <= 1e-3


def test_chord_arc_drops_for_steep_waves():
    mild = wavy_state(64, amplitude=0.05)
    steep = wavy_state(64, amplitude=0.8)
    r_mild = chord_arc_monitor(reconstruct(mild)[0])
    r_steep = chord_arc_monitor(reconstruct(steep)[0])
    assert r_steep < r_mild <= 1.0 + 1e-12
    assert r_steep < 0.99


def test_translation_along_grid_keeps_closure():
    state = wavy_state(64)
    shifted = state.replace(theta=SpectralField(state.grid, np.roll(state.theta.samples, 5)))
    assert abs(closure_defect(shifted.theta, shifted.length)) <= 1e-12
    assert PeriodicGrid(64) == state.grid
