import math

import numpy as np
import pytest

from services.waves.core.exceptions import CFLViolation, ChordArcAbort
from services.waves.numerics.curve import closure_defect, initial_state
from services.waves.numerics.dynamics import (
    WINDOW_COLUMNS,
    _phi_coefficients,
    dispersion_frequency,
    iterate,
    kinematic_rhs,
    linear_block,
    run,
    step,
)
from services.waves.numerics.energy import energy_rate_audit
from services.waves.numerics.spectral import PeriodicGrid
from services.waves.schemas.config import Mode, Scheme, SolverConfig

from oracles import mode_phase


def test_dispersion_frequency():
    assert dispersion_frequency(2) == pytest.approx(math.sqrt(10.0))
    assert dispersion_frequency(2, gravity=0) == pytest.approx(math.sqrt(8.0))


def test_flat_rest_stays_flat(flat):
    after = step(flat, 1e-2)
    assert after.theta.max_abs() <= 1e-14
    assert after.gamma.max_abs() <= 1e-14
    assert after.length == pytest.approx(2 * np.pi, abs=1e-14)
    assert after.time == pytest.approx(1e-2)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_step_keeps_curve_closed(small_wave, scheme):
    after = step(small_wave, 1e-3, scheme)
    assert abs(closure_defect(after.theta, after.length)) <= 1e-10
    assert after.is_finite()


def test_rk4_rejects_large_step(small_wave):
    with pytest.raises(CFLViolation) as info:
        step(small_wave, 1.0, Scheme.EXPLICIT_RK4)
    assert info.value.reason == "cfl"


def test_steep_wave_aborts_on_chord_arc():
    config = SolverConfig(n_points=32, init_mode=1, init_amplitude=0.8, chord_arc_floor=0.99,
                          dt=1e-3, t_end=1e-2)
    with pytest.raises(ChordArcAbort) as info:
        list(iterate(config))
    assert info.value.t == 0.0


def test_phi_coefficients_are_continuous_at_series_switch():
    mu = np.array([1e-2 * (1 - 1e-9), 1e-2 * (1 + 1e-9)])
    c = _phi_coefficients(mu)
    for values in c.values():
        assert abs(values[0] - values[1]) <= 1e-8
    zero = _phi_coefficients(np.array([0.0]))
    assert zero["mu_minus_sin"][0] == pytest.approx(1.0 / 6.0)
    assert zero["one_minus_cos"][0] == pytest.approx(0.5)


def test_iterate_fills_window_residuals():
    config = SolverConfig(n_points=32, dt=1e-3, t_end=4e-3, init_amplitude=1e-3)
    records = list(iterate(config))
    assert [r.step for r in records] == [0, 1, 2, 3, 4]
    for record in records[1:-1]:
        assert all(np.isfinite(record.row[c]) for c in WINDOW_COLUMNS)
    assert all(np.isnan(records[0].row[c]) for c in WINDOW_COLUMNS)
    assert all(np.isnan(records[-1].row[c]) for c in WINDOW_COLUMNS)


def test_window_residuals_are_second_order():
    def residual_u(dt):
        config = SolverConfig(n_points=256, dt=dt, t_end=2 * dt)
        records = list(iterate(config))
        return records[1].row["residual_u"]

    coarse, fine = residual_u(4e-4), residual_u(2e-4)
    assert fine > 0.0
    assert math.log2(coarse / fine) >= 1.8


def test_run_keeps_uniform_snapshots():
    config = SolverConfig(n_points=32, dt=1e-3, t_end=5e-3, snapshot_every=2)
    result = run(config)
    times = [s.time for s in result.snapshots]
    assert times == pytest.approx([0.0, 2e-3, 4e-3])
    assert result.final_state.time == pytest.approx(5e-3)
    assert len(result.diagnostics) == 6


def test_quasilinear_mode_runs():
    config = SolverConfig(n_points=32, dt=1e-3, t_end=3e-3, mode=Mode.QUASILINEAR, init_amplitude=1e-2)
    result = run(config)
    assert result.final_state.time == pytest.approx(3e-3)
    assert result.final_state.is_finite()
    assert result.diagnostics["min_a"].min() > 0.0


@pytest.mark.slow
def test_linear_dispersion_and_energy():
    k, eps, dt = 2, 1e-3, 1e-2
    config = SolverConfig(n_points=64, dt=dt, t_end=10.0, init_mode=k, init_amplitude=eps, snapshot_every=5)
    result = run(config)
    times = np.array([s.time for s in result.snapshots])
    phases = np.unwrap([mode_phase(s.theta.samples, k) for s in result.snapshots])
    slope = np.polyfit(times, phases, 1)[0]
    omega = dispersion_frequency(k, result.snapshots[0].length)
    assert abs(abs(slope) - omega) <= 1e-2 * omega

    report, _ = energy_rate_audit(result.snapshots)
    assert report.relative_drift <= 1e-2
    assert report.passed


@pytest.mark.slow
def test_etd_rk2_is_second_order():
    start = initial_state(PeriodicGrid(32), 1, 0.2, 1)
    t_end = 0.16

    def integrate(dt):
        state = start
        for _ in range(int(round(t_end / dt))):
            state = step(state, dt)
        return state.theta.samples

    coarse, medium, fine = (integrate(dt) for dt in (0.04, 0.02, 0.01))
    e1 = np.max(np.abs(coarse - medium))
    e2 = np.max(np.abs(medium - fine))
    assert e2 > 1e-11
    assert math.log2(e1 / e2) >= 1.9


@pytest.mark.slow
def test_schemes_agree_on_small_wave(small_wave):
    rk4 = etd = small_wave
    for _ in range(10):
        rk4 = step(rk4, 1e-2, Scheme.EXPLICIT_RK4)
        etd = step(etd, 1e-2, Scheme.ETD_RK2)
    assert (rk4.theta - etd.theta).max_abs() <= 1e-6
    assert rk4.length == pytest.approx(etd.length, abs=1e-10)


def test_kinematic_rates_match_linear_block():
    state = initial_state(PeriodicGrid(64), 2, 1e-6, 1)
    rhs, _ = kinematic_rhs(state)
    k_s = 2 * np.pi * 2 / state.length
    b, e = linear_block(np.array([k_s]), 1)
    theta_hat, gamma_hat = state.theta.hat[2], state.gamma.hat[2]
    assert rhs.theta_t.hat[2] == pytest.approx(b[0] * gamma_hat, rel=1e-2)
    assert rhs.gamma_t.hat[2] == pytest.approx(-e[0] * theta_hat, rel=1e-2)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_flat_rest_is_a_fixed_point(scheme):
    config = SolverConfig(n_points=16, dt=1e-2, t_end=1.0, init_amplitude=0.0, scheme=scheme,
                          snapshot_every=100)
    final = run(config).final_state
    assert final.theta.max_abs() <= 1e-12
    assert final.gamma.max_abs() <= 1e-12
    assert final.length == pytest.approx(2 * np.pi, abs=1e-12)
