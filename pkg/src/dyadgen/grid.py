"""Functions sampled on a uniform grid over [0, 1] and their truncated spectra.

Sample ``i`` of a function at resolution ``n`` sits at ``t_i = i / n``. Every
quadrature in the package uses the weight ``1/n`` per sample, so the domain has
unit measure.

Spectra follow the numpy convention: the forward transform is unnormalized and
the inverse divides by the resolution of the grid the spectrum came from. That
way an inverse evaluated on a different grid reproduces function values rather
than coefficients, which is what makes spectral resampling work.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModesExceedNyquist, ResolutionBelowModeSupport, ResolutionMismatch

__all__ = [
    "GridFunction",
    "SpectrumTensor",
    "concat_channels",
    "forward_spectrum",
    "grid_points",
    "inverse_spectrum",
    "max_modes",
    "quadrature_l2_norm",
    "resample",
    "resample_array",
]


def grid_points(resolution: int) -> np.ndarray:
    """Left-endpoint sample coordinates ``i / resolution``."""
    return np.arange(resolution, dtype=np.float64) / resolution


def max_modes(resolution: int) -> int:
    """Number of non-negative frequencies a real signal of this length carries."""
    return resolution // 2 + 1


@dataclass(frozen=True)
class GridFunction:
    """A vector-valued function on [0, 1] stored as a ``(resolution, channels)`` array."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"values must be (resolution, channels), got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("GridFunction values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def points(self) -> np.ndarray:
        return grid_points(self.resolution)

    @classmethod
    def from_callable(cls, fn, resolution: int) -> "GridFunction":
        """Sample ``fn(t)`` on the grid; ``fn`` may return shape (n,) or (n, channels)."""
        return cls(fn(grid_points(resolution)))

    @classmethod
    def constant(cls, value, resolution: int, channels: int = 1) -> "GridFunction":
        return cls(np.full((resolution, channels), float(value)))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        if other.resolution != self.resolution:
            raise ResolutionMismatch(f"{self.resolution} vs {other.resolution}")
        return GridFunction(self.values + other.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectrumTensor:
    """Lowest ``modes`` rFFT coefficients per channel of a grid function.

    ``source_resolution`` is the length of the grid the coefficients were taken
    from; the inverse transform needs it to normalize.
    """

    coefficients: np.ndarray  # (modes, channels), complex
    source_resolution: int

    @property
    def modes(self) -> int:
        return self.coefficients.shape[0]

    @property
    def channels(self) -> int:
        return self.coefficients.shape[1]


def quadrature_l2_norm(f: GridFunction) -> float:
    """Discrete L2([0,1]) norm: ``sqrt((1/n) * sum_i sum_ch f[i, ch]**2)``."""
    return float(np.sqrt(np.sum(f.values**2) / f.resolution))


def forward_spectrum(f: GridFunction, modes: int) -> SpectrumTensor:
    if modes < 1 or modes > max_modes(f.resolution):
        raise ModesExceedNyquist(
            f"{modes} modes requested from a resolution-{f.resolution} function "
            f"(at most {max_modes(f.resolution)})"
        )
    coeffs = np.fft.rfft(f.values, axis=0)[:modes]
    return SpectrumTensor(coeffs, f.resolution)


def inverse_spectrum(s: SpectrumTensor, resolution: int) -> GridFunction:
    """Zero-pad ``s`` to ``resolution`` and transform back to samples.

    A coefficient landing exactly on the target Nyquist bin keeps only its real
    part, as for any real-valued inverse transform.
    """
    if resolution < 1 or s.modes > max_modes(resolution):
        raise ResolutionBelowModeSupport(
            f"resolution {resolution} cannot carry {s.modes} modes"
        )
    padded = np.zeros((max_modes(resolution), s.channels), dtype=np.complex128)
    padded[: s.modes] = s.coefficients
    values = np.fft.irfft(padded, n=resolution, axis=0) * (resolution / s.source_resolution)
    return GridFunction(values)


def resample_array(values: np.ndarray, new_resolution: int, axis: int = 0) -> np.ndarray:
    """Band-limited (Fourier) resampling of real samples along ``axis``.

    An even-length Nyquist bin is split evenly between +/- frequency when
    upsampling and folded back when downsampling, so the map is the exact
    trigonometric interpolant and stays linear.
    """
    if new_resolution < 2:
        raise ValueError(f"new_resolution must be >= 2, got {new_resolution}")
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[axis]
    if n == new_resolution:
        return values.copy()
    x = np.moveaxis(values, axis, 0)
    spec = np.fft.rfft(x, axis=0)
    shared = min(n, new_resolution)
    keep = shared // 2 + 1
    out = np.zeros((max_modes(new_resolution),) + spec.shape[1:], dtype=np.complex128)
    out[:keep] = spec[:keep]
    if shared % 2 == 0:
        k = shared // 2
        if new_resolution > n:
            out[k] = 0.5 * spec[k]
        else:
            out[k] = 2.0 * spec[k].real
    y = np.fft.irfft(out, n=new_resolution, axis=0) * (new_resolution / n)
    return np.moveaxis(y, 0, axis)


def resample(f: GridFunction, new_resolution: int) -> GridFunction:
    return GridFunction(resample_array(f.values, new_resolution, axis=0))


def concat_channels(a: GridFunction, c: GridFunction) -> GridFunction:
    """Stack ``c``'s channels after ``a``'s on their shared grid."""
    if a.resolution != c.resolution:
        raise ResolutionMismatch(
            f"cannot concatenate resolution {a.resolution} with {c.resolution}; resample first"
        )
    return GridFunction(np.concatenate([a.values, c.values], axis=1))
