"""
Verification suites run by ``waves verify``.

Each suite is listed by name in ``SUITES`` and returns a list of
``(check name, measured error, base tolerance)``. Base tolerances hold for
N >= 128 and are relaxed on coarser grids by ``tolerance_scale``.
"""
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from services.waves.core.exceptions import WaveError
from services.waves.core.logging_config import get_logger
from services.waves.numerics.birkhoff_rott import (
    adjoint_double_layer,
    adjoint_double_layer_rate,
    apply_adjoint_double_layer_matrix,
    birkhoff_rott_velocity,
    build_workspace,
    cauchy_transform,
    double_layer,
    holomorphy_residual,
    remainder_R,
)
from services.waves.numerics.curve import CurveState, closure_project, flat_state, initial_state, solve_length
from services.waves.numerics.fields import derive_fields, quasilinear_theta_rate, taylor_sign
from services.waves.numerics.layer_solve import (
    LayerSide,
    SecondKindProblem,
    apply_second_kind,
    recover_gamma,
    solve_second_kind,
)
from services.waves.numerics.spectral import (
    PeriodicGrid,
    SpectralField,
    alpha_derivative,
    apply_D,
    dealias,
    hilbert_transform,
    inner,
    mean,
)
from services.waves.schemas.config import SolverConfig
from services.waves.schemas.reports import CheckResult, SuiteResult, VerifyReport

from .main import WorkerPool

logger = get_logger(__name__)

Check = Tuple[str, float, float]
SuiteFn = Callable[[SolverConfig], List[Check]]

FD_STEP = 1e-5


def tolerance_scale(n_points: int) -> float:
    """Tolerance relaxation: x1e4 below N = 64, x1e2 below N = 128."""
    if n_points < 64:
        return 1e4
    if n_points < 128:
        return 1e2
    return 1.0


def _max_abs(f: SpectralField) -> float:
    return float(np.max(np.abs(f.samples)))


def _wavy_state(grid: PeriodicGrid, amplitude: float = 0.1) -> CurveState:
    """θ = ε cos α, γ = ε sin α, closed."""
    alpha = grid.alpha_nodes
    theta = SpectralField(grid, amplitude * np.cos(alpha))
    theta, L = closure_project(theta, solve_length(theta))
    return CurveState(grid=grid, theta=theta, gamma=SpectralField(grid, amplitude * np.sin(alpha)), length=L)


def hilbert_suite(config: SolverConfig) -> List[Check]:
    grid = PeriodicGrid(config.n_points)
    alpha = grid.alpha_nodes
    f = SpectralField(grid, np.exp(np.cos(alpha)) + 0.3 * np.sin(3 * alpha))
    g = SpectralField(grid, np.exp(np.sin(2 * alpha)))
    L = 2.0 * np.pi
    Hf = hilbert_transform(f)
    fd = dealias(f)
    return [
        ("H(cos 2a) = sin 2a",
         _max_abs(hilbert_transform(SpectralField(grid, np.cos(2 * alpha))) - np.sin(2 * alpha)), 1e-12),
        ("H^2 = -(I - mean)", _max_abs(hilbert_transform(hilbert_transform(fd)) + fd - mean(fd)), 1e-12),
        ("H skew-adjoint", abs(inner(Hf, g, L) + inner(f, hilbert_transform(g), L)), 1e-12),
        ("D positive", max(0.0, -float(np.real(inner(f, apply_D(f, L), L)))), 1e-12),
        ("d/da commutes with H",
         _max_abs(alpha_derivative(Hf) - hilbert_transform(alpha_derivative(f))), 1e-11),
    ]


def flat_closed_forms_suite(config: SolverConfig) -> List[Check]:
    grid = PeriodicGrid(config.n_points)
    alpha = grid.alpha_nodes
    ws = build_workspace(flat_state(grid))
    e_minus = SpectralField(grid, np.exp(-1j * alpha))
    one = SpectralField.constant(grid, 1.0 + 0j)
    cos = SpectralField(grid, np.cos(alpha))

    constant = flat_state(grid, gamma_value=0.7)
    W_const = birkhoff_rott_velocity(constant, build_workspace(constant))
    wave = CurveState(grid=grid, theta=constant.theta, gamma=cos, length=constant.length)
    W_wave = birkhoff_rott_velocity(wave, build_workspace(wave))
    return [
        ("h(e^{-ia}) = e^{-ia}", _max_abs(cauchy_transform(e_minus, ws) - e_minus), 1e-10),
        ("h(1) = 0", _max_abs(cauchy_transform(one, ws)), 1e-10),
        ("K* = 0", _max_abs(adjoint_double_layer(cos, ws)), 1e-10),
        ("W = gamma/2 for constant gamma", _max_abs(W_const - 0.35), 1e-10),
        ("W = e^{-is}/2 for gamma = cos", _max_abs(W_wave - e_minus * 0.5), 1e-10),
    ]


def operator_identities_suite(config: SolverConfig) -> List[Check]:
    grid = PeriodicGrid(config.n_points)
    state = _wavy_state(grid)
    ws = build_workspace(state)
    alpha = grid.alpha_nodes
    f = SpectralField(grid, np.cos(alpha) + 0.5 * np.sin(2 * alpha))
    g = SpectralField(grid, np.sin(alpha) ** 2)
    L = state.length
    h_f = cauchy_transform(f, ws)
    R_f = remainder_R(f, ws)
    f_alpha = alpha_derivative(f)
    commuted = SpectralField(grid, ws.xi_alpha) * cauchy_transform(
        SpectralField(grid, f_alpha.samples / ws.xi_alpha), ws
    )
    return [
        ("Re h f = Im R f", _max_abs(h_f.real - R_f.imag), 1e-8),
        ("R = ih - H", _max_abs(R_f - (h_f * 1j - hilbert_transform(f))), 1e-8),
        ("K* adjoint of K", abs(inner(double_layer(f, ws), g, L) - inner(f, adjoint_double_layer(g, ws), L)), 1e-8),
        ("K* via h = K* kernel",
         _max_abs(adjoint_double_layer(f, ws) - apply_adjoint_double_layer_matrix(f, ws)), 1e-8),
        ("d/da h f = z_a h(f_a/z_a)", _max_abs(alpha_derivative(h_f) - commuted), 1e-8),
    ]


def holomorphy_suite(config: SolverConfig) -> List[Check]:
    grid = PeriodicGrid(config.n_points)
    state = _wavy_state(grid, amplitude=0.05)
    ws = build_workspace(state)
    Wbar = birkhoff_rott_velocity(state, ws)
    return [("(I - h)W = W_inf", holomorphy_residual(state, ws, Wbar), 1e-6)]


def taylor_sign_suite(config: SolverConfig) -> List[Check]:
    grid = PeriodicGrid(config.n_points)
    flat = flat_state(grid)
    a_flat, _ = taylor_sign(flat, build_workspace(flat), SpectralField.constant(grid, 0j), gravity=1)
    wave = _wavy_state(grid, amplitude=0.05)
    ws = build_workspace(wave)
    W = birkhoff_rott_velocity(wave, ws).conj()
    a_wave, _ = taylor_sign(wave, ws, W, gravity=config.gravity, tolerance=config.solver_tol)
    checks = [("a = 1 on flat rest", _max_abs(a_flat - 1.0), 1e-10)]
    if config.gravity:
        checks.append(("a > 0 on small wave", max(0.0, -float(np.min(a_wave.samples))), 0.0))
    return checks


def delta_routes_suite(config: SolverConfig) -> List[Check]:
    grid = PeriodicGrid(config.n_points)
    state = _wavy_state(grid, amplitude=0.05)
    ws = build_workspace(state)
    derived = derive_fields(state, ws, gravity=config.gravity, solver_tol=config.solver_tol, with_errors=False)
    half_gamma = state.gamma * 0.5
    via_layer = half_gamma - adjoint_double_layer(half_gamma, ws)
    via_velocity = SpectralField(grid, np.real(derived.Wbar.samples * ws.points.tangent))
    problem = SecondKindProblem(sign=-1, side=LayerSide.ADJOINT, rhs=derived.delta + derived.T,
                                tolerance=config.solver_tol)
    x, _ = solve_second_kind(problem, ws)
    round_trip = apply_second_kind(problem, x, ws) - problem.rhs
    gamma = recover_gamma(state, ws, derived.delta, derived.T, config.solver_tol)
    return [
        ("delta + T routes agree", _max_abs(via_layer - via_velocity), 1e-10),
        ("second-kind round trip", float(np.linalg.norm(round_trip.samples) / np.linalg.norm(problem.rhs.samples)),
         1e-11),
        ("gamma recovered from delta", _max_abs(gamma - state.gamma), 1e-10),
    ]


def quasilinear_suite(config: SolverConfig) -> List[Check]:
    grid = PeriodicGrid(config.n_points)
    state = initial_state(grid, 1, 0.05, config.gravity)
    derived = derive_fields(state, gravity=config.gravity, solver_tol=config.solver_tol, with_errors=True)
    mismatch = derived.theta_t - quasilinear_theta_rate(state, derived)
    relative = float(np.linalg.norm(mismatch.samples) / np.linalg.norm(derived.theta_t.samples))
    return [("theta_t = H(u) - delta theta_s + phi", relative, 1e-4)]


def commutator_rate_suite(config: SolverConfig) -> List[Check]:
    grid = PeriodicGrid(config.n_points)
    state = _wavy_state(grid, amplitude=0.05)
    ws = build_workspace(state)
    derived = derive_fields(state, ws, gravity=config.gravity, solver_tol=config.solver_tol, with_errors=False)
    velocity = (1j * derived.U.samples + derived.T.samples) * ws.points.tangent
    analytic = adjoint_double_layer_rate(ws, velocity, derived.theta_t.samples, derived.L_t)

    def moved(sign: float) -> np.ndarray:
        shifted = state.replace(
            theta=state.theta + derived.theta_t * (sign * FD_STEP),
            length=state.length + sign * FD_STEP * derived.L_t,
        )
        return build_workspace(shifted).adjoint_double_layer_matrix

    fd = (moved(1.0) - moved(-1.0)) / (2.0 * FD_STEP)
    half_gamma = 0.5 * state.gamma.samples
    reference = analytic @ half_gamma
    relative = float(np.linalg.norm(reference - fd @ half_gamma) / np.linalg.norm(reference))
    return [("(d/dt K*)(gamma/2) = finite difference", relative, 1e-6)]


# Run order of ``waves verify``.
SUITES: Dict[str, SuiteFn] = {
    "hilbert": hilbert_suite,
    "flat_closed_forms": flat_closed_forms_suite,
    "operator_identities": operator_identities_suite,
    "holomorphy": holomorphy_suite,
    "taylor_sign": taylor_sign_suite,
    "delta_routes": delta_routes_suite,
    "quasilinear": quasilinear_suite,
    "commutator_rate": commutator_rate_suite,
}


def run_suite(name: str, config: SolverConfig) -> SuiteResult:
    """Run one registered suite; a crash is reported as a failed suite."""
    scale = tolerance_scale(config.n_points)
    start = time.perf_counter()
    try:
        logger.info("Starting suite %s at N=%d", name, config.n_points)
        raw = SUITES[name](config)
        checks = [
            CheckResult(name=check, error=error, tolerance=tol * scale,
                        passed=bool(np.isfinite(error) and error <= tol * scale))
            for check, error, tol in raw
        ]
        passed = all(c.passed for c in checks)
        for c in checks:
            if not c.passed:
                logger.warning("suite %s: %s error %.3e > %.3e", name, c.name, c.error, c.tolerance)
        return SuiteResult(suite=name, n_points=config.n_points, passed=passed, checks=checks,
                           elapsed_seconds=time.perf_counter() - start)
    except WaveError as e:
        logger.error("Error in suite %s: %s", name, e.detail)
        return SuiteResult(suite=name, n_points=config.n_points, passed=False,
                           elapsed_seconds=time.perf_counter() - start, error=e.to_dict())


def batch_verify(
    config: SolverConfig,
    run_id: str = "-",
    names: Optional[Sequence[str]] = None,
    pool: Optional[WorkerPool] = None,
) -> VerifyReport:
    """Run suites (all by default) on the pool; results in suite order."""
    names = list(names) if names is not None else list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"Unknown suites: {unknown}")

    def one(name: str) -> SuiteResult:
        return run_suite(name, config)

    results = pool.map(one, names) if pool is not None else [one(n) for n in names]
    report = VerifyReport(
        run_id=run_id,
        n_points=config.n_points,
        tolerance_scale=tolerance_scale(config.n_points),
        passed=all(r.passed for r in results),
        suites=results,
    )
    logger.info("Verification %s: %d/%d suites passed", "passed" if report.passed else "failed",
                sum(r.passed for r in results), len(results))
    return report
