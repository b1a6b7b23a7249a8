"""Synthetic dyadic task with a known conditional law.

Actor A moves as a random mixture of low-frequency sinusoids around a rest
pose. Actor B copies A mirrored through the plane x = 0, delayed by ``delay``
seconds (circular, band-limited shift), plus squared-exponential GRF noise of
scale ``noise``. Given A, B is Gaussian with mean = delayed mirror of A.
"""
from __future__ import annotations

import numpy as np

from ..errors import BadDelay
from ..random_fields import GrfSpec, sample_grf_batch
from .motion import DyadicPair, MotionSequence

__all__ = ["delayed_mirror", "rest_pose", "spectral_delay", "synth_coupled"]

MAX_FREQ = 3
NOISE_LENGTH_SCALE = 0.1


def rest_pose(joints: int) -> np.ndarray:
    if joints == 4:
        # root, head, left foot, right foot
        return np.array([[1.0, 0.0, 1.0], [1.0, 0.0, 1.6], [1.0, 0.2, 0.0], [1.0, -0.2, 0.0]])
    pose = np.zeros((joints, 3))
    pose[:, 0] = 1.0
    pose[:, 2] = 0.3 * np.arange(joints)
    return pose


def spectral_delay(values: np.ndarray, fraction: float) -> np.ndarray:
    """Circularly delay ``(T, ...)`` samples by ``fraction`` of the window."""
    n = values.shape[0]
    spec = np.fft.rfft(values, axis=0)
    k = np.arange(spec.shape[0]).reshape((-1,) + (1,) * (values.ndim - 1))
    return np.fft.irfft(spec * np.exp(-2j * np.pi * k * fraction), n=n, axis=0)


def delayed_mirror(a: MotionSequence, delay: float, mirror: bool = True) -> np.ndarray:
    """Noise-free responder positions for leader ``a``, shape ``(T, J, 3)``."""
    pos = spectral_delay(a.positions, delay / a.duration) if delay else a.positions.copy()
    if mirror:
        pos = pos * np.array([-1.0, 1.0, 1.0])
    return pos


def synth_coupled(
    n_pairs: int,
    joints: int = 4,
    frames: int = 64,
    dt: float = 1.0 / 30,
    delay: float = 0.1,
    noise: float = 0.05,
    seed: int = 0,
    mirror: bool = True,
) -> list[DyadicPair]:
    """Generate ``n_pairs`` leader/responder pairs; deterministic in ``seed``.

    Positions stay in float64 so the delayed-mirror identity holds to rounding
    error; PMO files store them as float32. ``dt`` is rounded to float32 up
    front so that it survives a file round trip unchanged.
    """
    dt = float(np.float32(dt))
    if not 0 <= delay < frames * dt:
        raise BadDelay(f"delay {delay} outside [0, {frames * dt})")
    rng = np.random.default_rng(seed)
    s = np.arange(frames) / frames
    base = rest_pose(joints)
    grf = GrfSpec(length_scale=NOISE_LENGTH_SCALE, variance=1.0, channels=3 * joints)
    pairs = []
    for _ in range(n_pairs):
        freqs = np.arange(1, MAX_FREQ + 1)
        # shared body sway (1, 3 coords) plus a smaller per-joint wiggle (J, 3)
        amp = rng.uniform(0.0, 0.3, size=(MAX_FREQ, 3)) / freqs[:, None]
        phase = rng.uniform(0.0, 2 * np.pi, size=(MAX_FREQ, 3))
        sway = np.einsum("fc,tfc->tc", amp, np.sin(2 * np.pi * freqs[None, :, None] * s[:, None, None] + phase))
        w_amp = rng.uniform(0.0, 0.05, size=(MAX_FREQ, joints, 3))
        w_phase = rng.uniform(0.0, 2 * np.pi, size=(MAX_FREQ, joints, 3))
        arg = 2 * np.pi * freqs[None, :, None, None] * s[:, None, None, None] + w_phase[None]
        wiggle = np.sum(w_amp[None] * np.sin(arg), axis=1)
        a = MotionSequence(base[None] + sway[:, None, :] + wiggle, dt)
        b = delayed_mirror(a, delay, mirror)
        if noise > 0:
            eps = sample_grf_batch(grf, frames, 1, rng)[0].reshape(frames, joints, 3)
            b = b + noise * eps
        pairs.append(DyadicPair(a, MotionSequence(b, dt)))
    return pairs
