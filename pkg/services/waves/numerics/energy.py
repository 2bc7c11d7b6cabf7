"""
A priori energy of the arc-length system and its audits.

For r >= 4 and s0 = ‖θ_s(0)‖_∞ (frozen at the start of a run)

    E = ‖θ‖² + ‖δ‖² + ‖γ‖² + ‖u‖² + L² + Σ_{k=1}^{r-1} ⟨∂^kγ, ∂^kγ⟩
        + Σ_{k=1}^{r} (E¹_k + E²_k + E³_k)

    E¹_k = ½(⟨∂^{k+1}θ, ∂^{k+1}θ⟩ + ⟨a∂^kθ, ∂^kθ⟩ + ⟨∂^{k-1}u, D∂^{k-1}u⟩)
    E²_k = ⟨∂^{k-1}u, (10 s0 − θ_s)∂^{k-1}u⟩
    E³_k = 10 s0 ⟨∂^kθ, D∂^kθ⟩

with ∂ = ∂_s, D = H∂_s and ⟨f, g⟩ = ∫ f ḡ ds. The norms are L²(ds).
"""
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import linprog

from ..core.exceptions import FieldError, InputFormatError
from ..core.logging_config import get_logger
from ..schemas.config import Scheme, SolverConfig
from ..schemas.reports import EnergyRateReport
from .birkhoff_rott import commutator_exp2itheta, commutator_velocity, remainder_R
from .curve import CurveState, closure_project, solve_length
from .dynamics import TimeStepper
from .fields import DerivedFields, derive_fields, omega_error
from .spectral import (
    PeriodicGrid,
    SpectralField,
    apply_D,
    fourier_derivative,
    hilbert_transform,
    inner,
    resample,
    sobolev_norm,
)

logger = get_logger(__name__)

BASE_TERMS = ("theta_l2", "delta_l2", "gamma_l2", "u_l2", "length_sq")
MIN_RATE_SAMPLES = 20
MAX_POLYNOMIAL_DEGREE = 3
MAX_COEFFICIENT = 1e6
MAX_REFINEMENT_GROWTH = 2.0
RATIO_NOISE_FLOOR = 1e-10
LHS_NOISE_FLOOR = 1e-13
WEIGHT_FACTOR = 10.0

MapFn = Callable[[Callable, Iterable], Iterable]


def energy_columns(r: int) -> List[str]:
    """CSV column order: total, base terms, γ terms, then E¹, E², E³ by k."""
    columns = ["total", *BASE_TERMS]
    columns += [f"gamma_d{k}" for k in range(1, r)]
    for name in ("e1", "e2", "e3"):
        columns += [f"{name}_{k}" for k in range(1, r + 1)]
    return columns


ENERGY_COLUMNS = tuple(energy_columns(4))


@dataclass(frozen=True)
class EnergyReport:
    t: float
    r: int
    base_terms: Dict[str, float]
    gamma_terms: np.ndarray
    ek1: np.ndarray
    ek2: np.ndarray
    ek3: np.ndarray
    theta_s0_sup: float
    total: float

    def parts(self) -> List[float]:
        return [
            *(self.base_terms[name] for name in BASE_TERMS),
            *self.gamma_terms.tolist(),
            *self.ek1.tolist(),
            *self.ek2.tolist(),
            *self.ek3.tolist(),
        ]

    def as_row(self, prefix: str = "") -> Dict[str, float]:
        values = [self.total, *self.parts()]
        return {f"{prefix}{name}": float(v) for name, v in zip(energy_columns(self.r), values)}


def energy_row(report: EnergyReport) -> Dict[str, float]:
    row = {"t": report.t}
    row.update(report.as_row())
    return row


def theta_s_sup(state: CurveState) -> float:
    """‖θ_s‖_∞ over the grid nodes."""
    return float(np.max(np.abs(fourier_derivative(state.theta, 1, state.length).samples)))


def energy(
    state: CurveState,
    derived: DerivedFields,
    r: int = 4,
    theta_s0_sup: Optional[float] = None,
) -> EnergyReport:
    """
    Evaluate E and every sub-term for one state.

    Inner products use the trapezoid rule in s, which is exact for the
    band-limited products involved.
    """
    if r < 4:
        raise FieldError("Sobolev index r must be at least 4", extra={"r": r})
    L = state.length
    s0 = theta_s_sup(state) if theta_s0_sup is None else float(theta_s0_sup)

    def d(f: SpectralField, m: int) -> SpectralField:
        return fourier_derivative(f, m, L)

    def ip(f: SpectralField, g: SpectralField) -> float:
        return float(np.real(inner(f, g, L)))

    theta, gamma, delta, u, a = state.theta, state.gamma, derived.delta, derived.u, derived.a
    base = {
        "theta_l2": ip(theta, theta),
        "delta_l2": ip(delta, delta),
        "gamma_l2": ip(gamma, gamma),
        "u_l2": ip(u, u),
        "length_sq": L * L,
    }
    gamma_terms = np.array([ip(d(gamma, k), d(gamma, k)) for k in range(1, r)])

    weight_constant = WEIGHT_FACTOR * s0
    weight = weight_constant - d(theta, 1)
    if np.min(weight.samples) < 0.0:
        logger.warning("E2 weight 10 s0 - theta_s changed sign at t=%g (min %.3e)",
                       state.time, float(np.min(weight.samples)))

    ek1, ek2, ek3 = np.zeros(r), np.zeros(r), np.zeros(r)
    for k in range(1, r + 1):
        theta_k, theta_k1, u_k = d(theta, k), d(theta, k + 1), d(u, k - 1)
        ek1[k - 1] = 0.5 * (ip(theta_k1, theta_k1) + ip(a * theta_k, theta_k) + ip(u_k, apply_D(u_k, L)))
        ek2[k - 1] = ip(u_k, weight * u_k)
        ek3[k - 1] = weight_constant * ip(theta_k, apply_D(theta_k, L))

    parts = [*base.values(), *gamma_terms, *ek1, *ek2, *ek3]
    return EnergyReport(
        t=state.time, r=r, base_terms=base, gamma_terms=gamma_terms,
        ek1=ek1, ek2=ek2, ek3=ek3, theta_s0_sup=s0, total=math.fsum(parts),
    )


def energy_series(
    trajectory: Sequence[CurveState],
    r: int = 4,
    gravity: int = 1,
    solver_tol: float = 1e-12,
    map_fn: MapFn = map,
) -> pd.DataFrame:
    """Energy rows of a trajectory, s0 frozen at its first state."""
    if not trajectory:
        raise InputFormatError("Empty trajectory")
    s0 = theta_s_sup(trajectory[0])

    def evaluate(state: CurveState) -> Dict[str, float]:
        derived = derive_fields(state, gravity=gravity, solver_tol=solver_tol, with_errors=False)
        return energy_row(energy(state, derived, r, s0))

    return pd.DataFrame(list(map_fn(evaluate, trajectory)))


# -- dE/dt <= C(E) -------------------------------------------------------------

def _check_uniform(times: np.ndarray) -> float:
    gaps = np.diff(times)
    dt = float(np.mean(gaps))
    if not dt > 0 or np.any(np.abs(gaps - dt) > 1e-8 * dt):
        raise InputFormatError("Trajectory output spacing is not uniform",
                               extra={"min_gap": float(np.min(gaps)), "max_gap": float(np.max(gaps))})
    return dt


def fit_rate_bound(E: np.ndarray, dEdt: np.ndarray) -> Tuple[Optional[int], List[float]]:
    """
    Smallest degree d <= 3 and coefficients c >= 0 with Σ c_i E^i >= dE/dt.

    Each degree is a linear program minimizing Σ c_i; a fit is accepted
    when every coefficient is at most 1e6.
    """
    for degree in range(MAX_POLYNOMIAL_DEGREE + 1):
        V = np.vander(E, degree + 1, increasing=True)
        result = linprog(
            c=np.ones(degree + 1),
            A_ub=-V,
            b_ub=-dEdt,
            bounds=[(0.0, None)] * (degree + 1),
            method="highs",
        )
        if result.status == 0 and np.max(result.x) <= MAX_COEFFICIENT:
            return degree, [float(c) for c in result.x]
    return None, []


def audit_energy_series(times: Sequence[float], energies: Sequence[float]) -> EnergyRateReport:
    """Centered dE/dt over interior samples and the polynomial bound fit."""
    t = np.asarray(times, dtype=float)
    E = np.asarray(energies, dtype=float)
    if t.shape != E.shape or t.ndim != 1:
        raise InputFormatError("times and energies must be matching 1-D sequences")
    if t.size < MIN_RATE_SAMPLES:
        raise InputFormatError(f"Energy audit needs at least {MIN_RATE_SAMPLES} samples",
                               extra={"samples": int(t.size)})
    if not (np.all(np.isfinite(E)) and np.all(np.isfinite(t))):
        raise InputFormatError("Trajectory energies contain NaN or Inf")
    dt = _check_uniform(t)

    dEdt = (E[2:] - E[:-2]) / (2.0 * dt)
    interior = E[1:-1]
    ratio = dEdt / (1.0 + interior + interior ** 2 + interior ** 3)
    drift = float(np.max(np.abs(E - E[0])) / abs(E[0])) if E[0] != 0 else float(np.max(np.abs(E)))
    degree, coefficients = fit_rate_bound(interior, dEdt)
    report = EnergyRateReport(
        samples=int(t.size),
        max_ratio=float(np.max(ratio)),
        relative_drift=drift,
        degree=degree,
        fitted_polynomial=coefficients,
        passed=degree is not None,
    )
    logger.info("energy rate audit: degree=%s, max_ratio=%.3e, drift=%.3e",
                degree, report.max_ratio, drift)
    return report


def energy_rate_audit(
    trajectory: Sequence[CurveState],
    r: int = 4,
    gravity: int = 1,
    solver_tol: float = 1e-12,
    map_fn: MapFn = map,
) -> Tuple[EnergyRateReport, pd.DataFrame]:
    """Audit dE/dt <= C(E) along ``trajectory``; returns the report and the energy table."""
    if len(trajectory) < MIN_RATE_SAMPLES:
        raise InputFormatError(f"Energy audit needs at least {MIN_RATE_SAMPLES} samples",
                               extra={"samples": len(trajectory)})
    table = energy_series(trajectory, r, gravity, solver_tol, map_fn)
    return audit_energy_series(table["t"].to_numpy(), table["total"].to_numpy()), table


# -- error-term estimates -------------------------------------------------------

def random_state(
    grid: PeriodicGrid,
    rng: np.random.Generator,
    amplitude: float = 1e-2,
    modes: int = 4,
) -> CurveState:
    """Band-limited random (θ, γ) with decaying mode amplitudes, closed by projection."""
    alpha = grid.alpha_nodes
    theta = np.zeros(grid.n_points)
    gamma = np.zeros(grid.n_points)
    for k in range(1, modes + 1):
        a_theta, a_gamma = amplitude * rng.uniform(0.2, 1.0, size=2) / k ** 2
        p_theta, p_gamma = rng.uniform(0.0, 2.0 * np.pi, size=2)
        theta += a_theta * np.cos(k * alpha + p_theta)
        gamma += a_gamma * np.cos(k * alpha + p_gamma)
    theta_field = SpectralField(grid, theta)
    theta_field, L = closure_project(theta_field, solve_length(theta_field))
    return CurveState(grid=grid, theta=theta_field, gamma=SpectralField(grid, gamma), length=L)


def refine(state: CurveState, n_points: int) -> CurveState:
    """Spectral interpolation of a state onto another grid, re-closed."""
    grid = PeriodicGrid(n_points)
    theta, L = closure_project(resample(state.theta, n_points), state.length)
    return CurveState(grid=grid, theta=theta, gamma=resample(state.gamma, n_points), length=L, time=state.time)


def _window(state: CurveState, gravity: int, dt: float, solver_tol: float) -> List[Tuple[CurveState, DerivedFields]]:
    config = SolverConfig(
        n_points=state.grid.n_points, dt=dt, t_end=2 * dt, scheme=Scheme.ETD_RK2,
        gravity=gravity, solver_tol=solver_tol, enforce_taylor_sign=False,
    )
    stepper = TimeStepper(config)
    window = []
    current = state
    for _ in range(2):
        result = stepper.advance(current)
        window.append((current, result.derived))
        current = result.state
    _, last = stepper.evaluate(current, with_errors=True)
    window.append((current, last))
    return window


def _ratio(lhs: float, rhs: float) -> float:
    if lhs <= LHS_NOISE_FLOOR:
        return 0.0
    return lhs / rhs if rhs > 0.0 else math.inf


def estimate_ratios(
    state: CurveState,
    r: int = 4,
    gravity: int = 1,
    dt: float = 1e-3,
    solver_tol: float = 1e-12,
) -> Dict[str, float]:
    """
    (left side)/(right side) of each error-term estimate, C(E) read as E.
    """
    window = _window(state, gravity, dt, solver_tol)
    _, derived = window[0]
    L = state.length
    E = energy(state, derived, r).total
    ws = derived.workspace
    u, delta, theta = derived.u, derived.delta, state.theta

    def hs(f: SpectralField, order: float) -> float:
        return sobolev_norm(f, order, L)

    hilbert_delta = (
        hilbert_transform(delta * fourier_derivative(u, r, L))
        - delta * hilbert_transform(fourier_derivative(u, r, L))
    )
    smoothing = hilbert_transform(theta * u) - theta * hilbert_transform(u)
    product = theta * delta

    return {
        "remainder_R": _ratio(hs(remainder_R(u, ws), r + 1), E),
        "commutator_exp2itheta": _ratio(hs(commutator_exp2itheta(derived.Wbar, ws), r + 1), E),
        "commutator_velocity": _ratio(hs(commutator_velocity(derived.W, u, ws), r), E),
        "phi": _ratio(hs(derived.phi, r + 1), E),
        "psi": _ratio(hs(derived.psi, r - 0.5), E),
        "omega": _ratio(hs(omega_error(window, dt), r - 1.5), E),
        "hilbert_delta_commutator": _ratio(hs(hilbert_delta, 0.5), hs(delta, r + 0.5) * hs(u, r - 0.5)),
        "algebra": _ratio(hs(product, 1), hs(theta, r) * hs(delta, 1)),
        "hilbert_smoothing": _ratio(hs(smoothing, r - 1), hs(u, 0) * hs(theta, r)),
    }


def estimate_audit(
    states: Sequence[CurveState],
    r: int = 4,
    gravity: int = 1,
    dt: float = 1e-3,
    solver_tol: float = 1e-12,
    map_fn: MapFn = map,
) -> pd.DataFrame:
    """
    Estimate ratios over an ensemble at N and 2N.

    Returns one row per estimate with the ensemble maxima at both
    resolutions, their growth factor and the pass flag (finite and growth
    at most 2).
    """
    if not states:
        raise InputFormatError("Estimate audit needs at least one state")
    n = states[0].grid.n_points

    def evaluate(state: CurveState) -> Tuple[Dict[str, float], Dict[str, float]]:
        coarse = estimate_ratios(state, r, gravity, dt, solver_tol)
        fine = estimate_ratios(refine(state, 2 * n), r, gravity, dt, solver_tol)
        return coarse, fine

    results = list(map_fn(evaluate, states))
    rows = []
    for name in results[0][0]:
        coarse = max(c[name] for c, _ in results)
        fine = max(f[name] for _, f in results)
        if max(coarse, fine) < RATIO_NOISE_FLOOR:
            growth = 1.0
        elif coarse > 0.0:
            growth = fine / coarse
        else:
            growth = math.inf
        passed = bool(np.isfinite(coarse) and np.isfinite(fine) and growth <= MAX_REFINEMENT_GROWTH)
        rows.append({
            "estimate": name,
            "n_points": n,
            "max_ratio": coarse,
            "max_ratio_refined": fine,
            "growth": growth,
            "passed": passed,
        })
        if not passed:
            logger.warning("estimate %s failed: ratio %.3e -> %.3e", name, coarse, fine)
    return pd.DataFrame(rows)
