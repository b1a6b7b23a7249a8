"""Sampling responders from a trained generator at any resolution."""
from __future__ import annotations

from typing import Sequence

import numpy as np
import torch

from .data.dataset import NormStats
from .data.motion import DyadicPair, MotionSequence
from .grid import resample_array
from .neural_op.spectral import DTYPE
from .neural_op.uno import UnoModel
from .random_fields import GrfSpec, sample_grf_batch

__all__ = ["generate", "generate_for_pairs"]


def _noise_spec(meta: dict, channels: int) -> GrfSpec:
    noise = meta.get("noise", {})
    return GrfSpec(length_scale=noise.get("length_scale", 0.1), variance=noise.get("variance", 1.0), channels=channels)


def generate(
    generator: UnoModel,
    meta: dict,
    condition: MotionSequence,
    resolution: int | None = None,
    samples: int = 1,
    seed: int = 0,
) -> list[DyadicPair]:
    """Draw ``samples`` responders for one condition motion.

    The condition is resampled to ``resolution`` frames (default: its own), the
    GRF noise is drawn directly on that grid, and the output keeps the
    condition's duration, so ``dt`` shrinks as ``resolution`` grows. Each
    returned pair is ``(condition, generated)``. ``seed`` is anything
    ``numpy.random.default_rng`` accepts, e.g. an int or a list of ints.
    """
    n = resolution or condition.frames
    stats = NormStats.from_dict(meta["norm"]) if "norm" in meta else NormStats.identity(condition.joints)
    c = 3 * condition.joints
    cond = (condition.positions - stats.mean) / stats.std
    cond = resample_array(cond.reshape(condition.frames, c), n, axis=0).T
    rng = np.random.default_rng(seed)
    noise = sample_grf_batch(_noise_spec(meta, c), n, samples, rng).transpose(0, 2, 1)
    x = np.concatenate([noise, np.broadcast_to(cond, (samples, c, n))], axis=1)
    with torch.no_grad():
        out = generator(torch.as_tensor(x, dtype=DTYPE)).numpy()
    dt = condition.duration / n
    cond_motion = MotionSequence(cond.T.reshape(n, -1, 3) * stats.std + stats.mean, dt)
    pairs = []
    for y in out:
        pos = y.T.reshape(n, -1, 3) * stats.std + stats.mean
        pairs.append(DyadicPair(cond_motion, MotionSequence(pos, dt)))
    return pairs


def generate_for_pairs(
    generator: UnoModel, meta: dict, pairs: Sequence[DyadicPair], seed: int = 0
) -> list[DyadicPair]:
    """One generated responder per pair, conditioned on actor A at native resolution."""
    return [generate(generator, meta, p.actor_a, samples=1, seed=seed + i)[0] for i, p in enumerate(pairs)]
