"""Gaussian random field sampling and Gaussian-process moment matching."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ChannelCountNotOne, CholeskyFailure, TooFewSamples
from .grid import GridFunction, grid_points, resample_array

__all__ = [
    "GaussianProcessEstimate",
    "GrfSpec",
    "Kernel",
    "covariance_operator_matrix",
    "fit_gp",
    "grf_cholesky",
    "sample_grf",
    "sample_grf_batch",
]

_JITTERS = (1e-8, 1e-6)


class Kernel(str, enum.Enum):
    SQUARED_EXPONENTIAL = "squared_exponential"
    WHITE_NOISE = "white_noise"


@dataclass(frozen=True)
class GrfSpec:
    kernel: Kernel = Kernel.SQUARED_EXPONENTIAL
    length_scale: float = 0.1
    variance: float = 1.0
    channels: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kernel", Kernel(self.kernel))
        if not self.length_scale > 0:
            raise ValueError(f"length_scale must be positive, got {self.length_scale}")
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        if self.channels < 1:
            raise ValueError(f"channels must be >= 1, got {self.channels}")

    def gram(self, resolution: int) -> np.ndarray:
        if self.kernel is Kernel.WHITE_NOISE:
            return self.variance * np.eye(resolution)
        t = grid_points(resolution)
        d = t[:, None] - t[None, :]
        return self.variance * np.exp(-0.5 * (d / self.length_scale) ** 2)


@lru_cache(maxsize=32)
def _cholesky_cached(kernel: Kernel, length_scale: float, variance: float, resolution: int):
    spec = GrfSpec(kernel, length_scale, variance)
    if kernel is Kernel.WHITE_NOISE:
        factor = np.sqrt(variance) * np.eye(resolution)
        factor.setflags(write=False)
        return factor
    gram = spec.gram(resolution)
    for jitter in _JITTERS:
        try:
            factor = np.linalg.cholesky(gram + jitter * variance * np.eye(resolution))
        except np.linalg.LinAlgError:
            continue
        factor.setflags(write=False)
        return factor
    raise CholeskyFailure(
        f"kernel Gram matrix not positive definite at resolution {resolution} "
        f"even with jitter {_JITTERS[-1]} * variance"
    )


def grf_cholesky(spec: GrfSpec, resolution: int) -> np.ndarray:
    """Lower Cholesky factor of the (jittered) kernel Gram matrix; cached, read-only."""
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    return _cholesky_cached(spec.kernel, float(spec.length_scale), float(spec.variance), resolution)


def sample_grf_batch(
    spec: GrfSpec, resolution: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` fields as an array of shape ``(count, resolution, channels)``."""
    factor = grf_cholesky(spec, resolution)
    z = rng.standard_normal((count, spec.channels, resolution))
    if spec.kernel is Kernel.WHITE_NOISE:
        out = z * np.sqrt(spec.variance)
    else:
        out = z @ factor.T
    return np.ascontiguousarray(np.swapaxes(out, 1, 2))


def sample_grf(spec: GrfSpec, resolution: int, seed: int) -> GridFunction:
    rng = np.random.default_rng(seed)
    return GridFunction(sample_grf_batch(spec, resolution, 1, rng)[0])


@dataclass(frozen=True)
class GaussianProcessEstimate:
    """Empirical mean and covariance of scalar functions on an ``r``-point grid."""

    mean: np.ndarray  # (r,)
    covariance: np.ndarray  # (r, r)

    @property
    def grid_size(self) -> int:
        return self.mean.shape[0]


def fit_gp(features: Sequence[GridFunction], grid_size: int) -> GaussianProcessEstimate:
    """Moment-match a GP to scalar feature functions.

    Each feature is resampled to ``grid_size`` first. The covariance uses the
    population normalization (divide by ``n``).
    """
    if len(features) < 2:
        raise TooFewSamples(f"need at least 2 features, got {len(features)}")
    rows = []
    for f in features:
        if f.channels != 1:
            raise ChannelCountNotOne(f"features must be scalar functions, got {f.channels} channels")
        rows.append(resample_array(f.values[:, 0], grid_size))
    return fit_gp_array(np.stack(rows))


def fit_gp_array(samples: np.ndarray) -> GaussianProcessEstimate:
    """Same as :func:`fit_gp` for an ``(n, r)`` array already on a common grid."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise TooFewSamples(f"need an (n>=2, r) array, got shape {samples.shape}")
    mean = samples.mean(axis=0)
    centered = samples - mean
    cov = centered.T @ centered / samples.shape[0]
    cov = 0.5 * (cov + cov.T)
    return GaussianProcessEstimate(mean, cov)


def covariance_operator_matrix(gp: GaussianProcessEstimate) -> np.ndarray:
    """Covariance operator in the unit-norm piecewise-constant basis: ``k(x_i, x_j) / r``."""
    return gp.covariance / gp.grid_size
