"""
Interface geometry from (θ, L) on the equal-arclength grid.

The horizontal period is 2π and s = αL/2π, so ξ_α = (L/2π)e^{iθ}.
"""
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from ..core.exceptions import ClosureError, FieldError
from ..core.logging_config import get_logger
from .spectral import PeriodicGrid, SpectralField, alpha_derivative, antiderivative, fourier_derivative

logger = get_logger(__name__)

TWO_PI = 2.0 * np.pi
MAX_PROJECTABLE_DEFECT = 0.1


@dataclass(frozen=True)
class CurveState:
    grid: PeriodicGrid
    theta: SpectralField
    gamma: SpectralField
    length: float
    time: float = 0.0

    def __post_init__(self) -> None:
        if self.theta.grid != self.grid or self.gamma.grid != self.grid:
            raise FieldError("theta and gamma must live on the state grid")
        if not self.theta.is_real or not self.gamma.is_real:
            raise FieldError("theta and gamma must be real")
        if not self.length > 0:
            raise FieldError("Length must be positive", extra={"L": self.length})

    def replace(self, **changes) -> "CurveState":
        return replace(self, **changes)

    @property
    def arc_scale(self) -> float:
        """s_α = L/2π."""
        return self.length / TWO_PI

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.length)
            and np.all(np.isfinite(self.theta.samples))
            and np.all(np.isfinite(self.gamma.samples))
        )


@dataclass(frozen=True)
class CurvePoints:
    xi: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    length: float

    @property
    def n_points(self) -> int:
        return self.xi.shape[0]


def closure_defect(theta: SpectralField, L: float) -> complex:
    """(L/2π)∫₀^{2π} e^{iθ} dα − 2π."""
    return complex(L * np.mean(np.exp(1j * theta.samples)) - TWO_PI)


def reconstruct(state: CurveState) -> Tuple[CurvePoints, complex]:
    """Positions ξ(α) = (L/2π)∫₀^α e^{iθ}, anchored at ξ(0) = 0."""
    grid = state.grid
    tangent = np.exp(1j * state.theta.samples)
    e = SpectralField(grid, tangent)
    F, c0 = antiderivative(e, TWO_PI)
    xi = state.arc_scale * (c0 * grid.alpha_nodes + F.samples - F.samples[0])
    points = CurvePoints(xi=xi, tangent=tangent, normal=1j * tangent, length=state.length)
    return points, complex(state.length * c0 - TWO_PI)


def closure_project(theta: SpectralField, L: float) -> Tuple[SpectralField, float]:
    """
    Enforce both closure integrals exactly.

    The mean of θ is rotated so that ∫e^{iθ}dα is real and positive, then L
    is set to 4π²/|∫e^{iθ}dα|. Raises ClosureError for defects >= 0.1.
    """
    defect = closure_defect(theta, L)
    if not abs(defect) < MAX_PROJECTABLE_DEFECT:
        raise ClosureError(extra={"defect": abs(defect), "L": L})
    c0 = np.mean(np.exp(1j * theta.samples))
    rotation = float(np.angle(c0))
    projected = theta - rotation if rotation != 0.0 else theta
    new_L = float(TWO_PI / np.abs(c0))
    if abs(defect) > 1e-8:
        logger.debug("closure projection: defect %.3e, rotation %.3e", abs(defect), rotation)
    return projected, new_L


def solve_length(theta: SpectralField) -> float:
    """L making the real closure defect vanish, by bracketed root finding."""
    c_real = float(np.mean(np.cos(theta.samples)))
    if c_real <= 0:
        raise ClosureError("Tangent angle too large for a graph-like period", extra={"mean_cos": c_real})

    def real_defect(L: float) -> float:
        return L * c_real - TWO_PI

    upper = 2.0 * TWO_PI / c_real
    if real_defect(TWO_PI) >= 0.0:
        return TWO_PI
    return float(brentq(real_defect, TWO_PI, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def curvature_pressure(state: CurveState) -> SpectralField:
    """P = -θ_s."""
    return -fourier_derivative(state.theta, 1, state.length)


def geometric_curvature(points: CurvePoints) -> np.ndarray:
    """Curvature of the node polygon by centered second differences in s."""
    n = points.n_points
    h = points.length / n
    xi = points.xi
    ahead = np.concatenate([xi[1:], [xi[0] + TWO_PI]])
    behind = np.concatenate([[xi[-1] - TWO_PI], xi[:-1]])
    d1 = (ahead - behind) / (2.0 * h)
    d2 = (ahead - 2.0 * xi + behind) / h ** 2
    return np.imag(np.conj(d1) * d2) / np.abs(d1) ** 3


def chord_arc_monitor(points: CurvePoints) -> float:
    """
    min over node pairs of chord/arc, periodized with the matching winding.

    For Δα ≤ π the chord is |ξ_j − ξ_k|; otherwise the image one period
    over is used, |ξ_k + 2π − ξ_j| against arc (2π − Δα)L/2π.
    """
    n = points.n_points
    xi = points.xi
    j, k = np.triu_indices(n, k=1)
    dalpha = (j - k) * (TWO_PI / n)
    dalpha = np.abs(dalpha)
    chord_direct = np.abs(xi[j] - xi[k])
    chord_wrapped = np.abs(xi[np.minimum(j, k)] + TWO_PI - xi[np.maximum(j, k)])
    wrapped = dalpha > np.pi
    chord = np.where(wrapped, chord_wrapped, chord_direct)
    arc = np.where(wrapped, TWO_PI - dalpha, dalpha) * (points.length / TWO_PI)
    return float(np.min(chord / arc))


def initial_state(grid: PeriodicGrid, mode: int, amplitude: float, gravity: int = 1) -> CurveState:
    """
    Right-moving linear traveling mode.

    θ = ε cos(kα), L closes the curve, γ = (2ω/|k_s|) ε sin(kα) with
    ω² = |k_s|(k_s² + g).
    """
    alpha = grid.alpha_nodes
    theta = SpectralField(grid, amplitude * np.cos(mode * alpha))
    L = solve_length(theta)
    theta, L = closure_project(theta, L)
    k_s = TWO_PI * mode / L
    omega = np.sqrt(abs(k_s) * (k_s ** 2 + gravity))
    gamma = SpectralField(grid, (2.0 * omega / abs(k_s)) * amplitude * np.sin(mode * alpha))
    return CurveState(grid=grid, theta=theta, gamma=gamma, length=L, time=0.0)


def flat_state(grid: PeriodicGrid, gamma_value: float = 0.0) -> CurveState:
    return CurveState(
        grid=grid,
        theta=SpectralField.constant(grid, 0.0),
        gamma=SpectralField.constant(grid, gamma_value),
        length=TWO_PI,
    )


def theta_alpha(state: CurveState) -> SpectralField:
    return alpha_derivative(state.theta)
