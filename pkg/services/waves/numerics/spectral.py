"""
Fourier calculus on the 2π-periodic reference grid.

Convention: f(α) = Σ f̂_k e^{ikα}, k = -N/2..N/2-1, so f̂ = fft(f)/N.
Arc-length derivatives use ∂_s = (2π/L)∂_α.
"""
import math
from contextlib import contextmanager
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterator, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.fft as sfft

from ..core.exceptions import FieldError, GridError, UnderResolutionError

ArrayLike = Union[Sequence[float], Sequence[complex], np.ndarray]

_LOG_FLOAT_MAX = math.log(np.finfo(float).max)

# Debug hook for mutation checks of the verification suites.
_hilbert_sign = 1.0


@contextmanager
def flipped_hilbert(enabled: bool = True) -> Iterator[None]:
    """Temporarily negate the Hilbert multiplier."""
    global _hilbert_sign
    previous = _hilbert_sign
    _hilbert_sign = -1.0 if enabled else 1.0
    try:
        yield
    finally:
        _hilbert_sign = previous


@dataclass(frozen=True)
class PeriodicGrid:
    n_points: int

    def __post_init__(self) -> None:
        if self.n_points < 16 or self.n_points % 2:
            raise GridError(extra={"n_points": self.n_points})

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n_points

    @cached_property
    def alpha_nodes(self) -> np.ndarray:
        return self.spacing * np.arange(self.n_points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in FFT order."""
        return np.fft.fftfreq(self.n_points, d=1.0 / self.n_points)

    @cached_property
    def nyquist_index(self) -> int:
        return self.n_points // 2


class SpectralField:
    """Samples on a PeriodicGrid with lazily synchronized Fourier coefficients."""

    __slots__ = ("grid", "_samples", "_hat", "_real")

    def __init__(
        self,
        grid: PeriodicGrid,
        samples: Optional[ArrayLike] = None,
        *,
        hat: Optional[np.ndarray] = None,
        real: Optional[bool] = None,
    ) -> None:
        if (samples is None) == (hat is None):
            raise FieldError("Provide exactly one of samples or hat")
        self.grid = grid
        if samples is not None:
            arr = np.asarray(samples)
            if arr.shape != (grid.n_points,):
                raise FieldError(
                    f"Expected {grid.n_points} samples, got shape {arr.shape}",
                    extra={"n_points": grid.n_points},
                )
            if real is None:
                real = not np.iscomplexobj(arr)
            arr = arr.astype(float if real else complex, copy=True)
            arr.setflags(write=False)
            self._samples = arr
            self._hat = None
        else:
            h = np.asarray(hat, dtype=complex)
            if h.shape != (grid.n_points,):
                raise FieldError(f"Expected {grid.n_points} coefficients, got shape {h.shape}")
            self._hat = h.copy()
            self._hat.setflags(write=False)
            self._samples = None
            if real is None:
                real = False
        self._real = bool(real)

    # -- synchronization ---------------------------------------------------

    @property
    def samples(self) -> np.ndarray:
        if self._samples is None:
            values = sfft.ifft(self._hat) * self.grid.n_points
            values = values.real if self._real else values
            values.setflags(write=False)
            self._samples = values
        return self._samples

    @property
    def hat(self) -> np.ndarray:
        """Coefficients in FFT order."""
        if self._hat is None:
            h = sfft.fft(self._samples) / self.grid.n_points
            h.setflags(write=False)
            self._hat = h
        return self._hat

    @property
    def coefficients(self) -> np.ndarray:
        """Coefficients ordered k = -N/2..N/2-1."""
        return np.fft.fftshift(self.hat)

    @property
    def is_real(self) -> bool:
        return self._real

    @classmethod
    def from_modes(cls, grid: PeriodicGrid, modes: Dict[int, complex], real: bool = False) -> "SpectralField":
        hat = np.zeros(grid.n_points, dtype=complex)
        for k, c in modes.items():
            hat[int(k) % grid.n_points] += c
        return cls(grid, hat=hat, real=real)

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: Union[float, complex]) -> "SpectralField":
        return cls(grid, np.full(grid.n_points, value))

    @classmethod
    def of(cls, grid: PeriodicGrid, func) -> "SpectralField":
        return cls(grid, func(grid.alpha_nodes))

    # -- arithmetic ----------------------------------------------------------

    def _values(self, other) -> Union[np.ndarray, float, complex]:
        if isinstance(other, SpectralField):
            if other.grid != self.grid:
                raise FieldError("Fields live on different grids")
            return other.samples
        return other

    def __add__(self, other) -> "SpectralField":
        return SpectralField(self.grid, self.samples + self._values(other))

    __radd__ = __add__

    def __sub__(self, other) -> "SpectralField":
        return SpectralField(self.grid, self.samples - self._values(other))

    def __rsub__(self, other) -> "SpectralField":
        return SpectralField(self.grid, self._values(other) - self.samples)

    def __mul__(self, other) -> "SpectralField":
        return SpectralField(self.grid, self.samples * self._values(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "SpectralField":
        return SpectralField(self.grid, self.samples / self._values(other))

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.samples)

    def conj(self) -> "SpectralField":
        return SpectralField(self.grid, np.conj(self.samples), real=self._real)

    @property
    def real(self) -> "SpectralField":
        return SpectralField(self.grid, self.samples.real)

    @property
    def imag(self) -> "SpectralField":
        return SpectralField(self.grid, self.samples.imag)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def __repr__(self) -> str:
        kind = "real" if self._real else "complex"
        return f"SpectralField(n={self.grid.n_points}, {kind})"


def _apply_multiplier(f: SpectralField, multiplier: np.ndarray) -> SpectralField:
    return SpectralField(f.grid, hat=f.hat * multiplier, real=f.is_real)


def fourier_derivative(f: SpectralField, m: int, L: float) -> SpectralField:
    """∂_s^m f via the multiplier (i k 2π/L)^m."""
    if m < 0:
        raise FieldError("Derivative order must be nonnegative")
    if L <= 0:
        raise FieldError("Length must be positive", extra={"L": L})
    if m == 0:
        return f
    grid = f.grid
    kmax_s = grid.nyquist_index * 2.0 * np.pi / L
    if kmax_s > 1.0 and m * math.log(kmax_s) >= _LOG_FLOAT_MAX:
        raise UnderResolutionError(extra={"m": m, "L": L, "n_points": grid.n_points})
    ks = grid.wavenumbers * (2.0 * np.pi / L)
    multiplier = (1j * ks) ** m
    if m % 2:
        multiplier[grid.nyquist_index] = 0.0
    return _apply_multiplier(f, multiplier)


def alpha_derivative(f: SpectralField, m: int = 1) -> SpectralField:
    """∂_α^m f."""
    return fourier_derivative(f, m, 2.0 * np.pi)


def hilbert_transform(f: SpectralField) -> SpectralField:
    """
    Periodic Hilbert transform, multiplier -i sgn(k); k = 0 and Nyquist annihilated.

    H(Hf) = -(f - mean f) holds only for f without a Nyquist mode; pass
    such fields through ``dealias`` first.
    """
    grid = f.grid
    multiplier = -1j * np.sign(grid.wavenumbers) * _hilbert_sign
    multiplier[grid.nyquist_index] = 0.0
    return _apply_multiplier(f, multiplier)


def apply_D(f: SpectralField, L: float) -> SpectralField:
    """D = H∂_s, multiplier |k|·2π/L."""
    grid = f.grid
    multiplier = np.abs(grid.wavenumbers) * (2.0 * np.pi / L)
    multiplier[grid.nyquist_index] = 0.0
    return _apply_multiplier(f, multiplier.astype(complex))


def sobolev_norm(f: SpectralField, r: float, L: float) -> float:
    """(Σ_k (1 + k_s²)^r L |f̂_k|²)^{1/2}; r = 0 is the L²(ds) norm."""
    ks = f.grid.wavenumbers * (2.0 * np.pi / L)
    weights = (1.0 + ks ** 2) ** r
    return float(np.sqrt(L * np.sum(weights * np.abs(f.hat) ** 2)))


def mean(f: SpectralField) -> Union[float, complex]:
    value = f.hat[0]
    return float(value.real) if f.is_real else complex(value)


def inner(f: SpectralField, g: SpectralField, L: float) -> Union[float, complex]:
    """⟨f, g⟩ = ∫ f ḡ ds by the trapezoid rule."""
    value = (L / f.grid.n_points) * np.sum(f.samples * np.conj(g.samples))
    return float(value.real) if (f.is_real and g.is_real) else complex(value)


def antiderivative(f: SpectralField, L: float) -> Tuple[SpectralField, Union[float, complex]]:
    """
    Zero-mean s-antiderivative of the mean-free part of f.

    Returns:
        (F, mean) with ∂_s F = f - mean and mean(F) = 0.
    """
    grid = f.grid
    ks = grid.wavenumbers * (2.0 * np.pi / L)
    hat = np.zeros_like(f.hat)
    nonzero = ks != 0
    hat[nonzero] = f.hat[nonzero] / (1j * ks[nonzero])
    hat[grid.nyquist_index] = 0.0
    return SpectralField(grid, hat=hat, real=f.is_real), mean(f)


def dealias(f: SpectralField) -> SpectralField:
    """2/3-rule truncation: zero every mode with |k| > N/3."""
    grid = f.grid
    keep = np.abs(grid.wavenumbers) <= grid.n_points / 3.0
    return _apply_multiplier(f, keep.astype(complex))


def resample(f: SpectralField, n_points: int) -> SpectralField:
    """Spectral interpolation onto an N'-point grid (Nyquist dropped)."""
    target = PeriodicGrid(n_points)
    n_old = f.grid.n_points
    keep = min(n_old, n_points) // 2
    hat = np.zeros(n_points, dtype=complex)
    hat[:keep] = f.hat[:keep]
    hat[n_points - keep + 1:] = f.hat[n_old - keep + 1:]
    return SpectralField(target, hat=hat, real=f.is_real)
