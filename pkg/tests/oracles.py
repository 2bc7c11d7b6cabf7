"""
Independent reference computations used only by the tests.
"""
from typing import Callable

import numpy as np

from services.waves.numerics.birkhoff_rott import build_workspace
from services.waves.numerics.curve import CurveState, closure_project, reconstruct, solve_length
from services.waves.numerics.spectral import PeriodicGrid, SpectralField, alpha_derivative, resample


def fine_cauchy(state: CurveState, f: Callable[[np.ndarray], np.ndarray], factor: int = 8) -> np.ndarray:
    """
    𝔥f at the nodes of ``state`` by singularity subtraction on a finer grid.

    Uses 𝔥1 = 0, so 𝔥f(α) = (1/2πi)∫(f(β) − f(α)) ξ_β cot((ξ(α) − ξ(β))/2) dβ,
    whose integrand is smooth with limit −2f_α(α) on the diagonal.
    """
    n = state.grid.n_points
    m = factor * n
    grid = PeriodicGrid(m)
    fine = CurveState(grid=grid, theta=resample(state.theta, m), gamma=resample(state.gamma, m),
                      length=state.length)
    points, _ = reconstruct(fine)
    xi = points.xi
    xi_beta = fine.arc_scale * points.tangent
    values = np.asarray(f(grid.alpha_nodes), dtype=complex)
    f_alpha = alpha_derivative(SpectralField(grid, values)).samples
    out = np.empty(n, dtype=complex)
    for i, j in enumerate(range(0, m, factor)):
        diff = xi[j] - xi
        diff[j] = 1.0
        integrand = (values - values[j]) * xi_beta / np.tan(diff / 2.0)
        integrand[j] = -2.0 * f_alpha[j]
        out[i] = grid.spacing * np.sum(integrand) / (2j * np.pi)
    return out


def neumann_solve(apply_layer: Callable[[SpectralField], SpectralField], rhs: SpectralField,
                  sign: int, terms: int = 200) -> SpectralField:
    """x = Σ (−sign·K)^n b, the Neumann series of (I + sign·K)x = b."""
    term = rhs
    total = rhs
    for _ in range(terms):
        term = apply_layer(term) * float(-sign)
        total = total + term
        if np.max(np.abs(term.samples)) < 1e-17:
            break
    return total


def finite_difference_kernel_rate(state: CurveState, theta_t: SpectralField, L_t: float,
                                  eps: float = 1e-5) -> np.ndarray:
    """Centered difference of the K* quadrature matrix along (θ_t, L_t)."""
    def moved(sign: float) -> np.ndarray:
        shifted = state.replace(theta=state.theta + theta_t * (sign * eps), length=state.length + sign * eps * L_t)
        return build_workspace(shifted).adjoint_double_layer_matrix
    return (moved(1.0) - moved(-1.0)) / (2.0 * eps)


def mode_phase(theta: np.ndarray, k: int) -> float:
    """Phase of the k-th Fourier coefficient of real samples."""
    return float(np.angle(np.fft.fft(theta)[k]))


def wavy_state(n_points: int, amplitude: float = 0.1, gamma_amplitude: float = 0.1) -> CurveState:
    """θ = ε cos α, γ = ε' sin α on a closed curve."""
    grid = PeriodicGrid(n_points)
    alpha = grid.alpha_nodes
    theta = SpectralField(grid, amplitude * np.cos(alpha))
    theta, L = closure_project(theta, solve_length(theta))
    gamma = SpectralField(grid, gamma_amplitude * np.sin(alpha))
    return CurveState(grid=grid, theta=theta, gamma=gamma, length=L)
