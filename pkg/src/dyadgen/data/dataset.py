"""Corpus-level operations: split, normalization, augmentation, directory I/O."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import EmptyDataset
from ..grid import resample_array
from .formats import read_pair, write_pair
from .motion import DyadicPair, MotionSequence

__all__ = [
    "NormStats",
    "denormalize",
    "fit_norm_stats",
    "load_corpus",
    "normalize",
    "pairs_to_arrays",
    "save_corpus",
    "split",
    "swap_augment",
]


def split(pairs: Sequence, ratio: float = 0.8, seed: int = 0):
    """Seeded shuffle followed by a prefix split into ``(train, eval)``."""
    if not pairs:
        raise EmptyDataset("cannot split an empty dataset")
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    order = np.random.default_rng(seed).permutation(len(pairs))
    cut = int(round(ratio * len(pairs)))
    return [pairs[i] for i in order[:cut]], [pairs[i] for i in order[cut:]]


@dataclass(frozen=True)
class NormStats:
    """Per joint-coordinate mean and std, shared by both actors."""

    mean: np.ndarray  # (J, 3)
    std: np.ndarray  # (J, 3)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64))

    @classmethod
    def identity(cls, joints: int) -> "NormStats":
        return cls(np.zeros((joints, 3)), np.ones((joints, 3)))


def fit_norm_stats(pairs: Sequence[DyadicPair]) -> NormStats:
    if not pairs:
        raise EmptyDataset("no pairs to fit normalization on")
    frames = np.concatenate([m.positions for p in pairs for m in (p.actor_a, p.actor_b)], axis=0)
    mean = frames.mean(axis=0)
    std = frames.std(axis=0)
    # constant coordinates pass through unscaled
    std = np.where(std > 1e-12, std, 1.0)
    return NormStats(mean, std)


def _map(m: MotionSequence, fn) -> MotionSequence:
    return MotionSequence(fn(m.positions), m.dt)


def normalize(pairs: Sequence[DyadicPair], stats: NormStats | None = None):
    """Standardize with ``stats`` (fitted on ``pairs`` when omitted); returns ``(pairs', stats)``."""
    stats = stats or fit_norm_stats(pairs)
    fn = lambda x: (x - stats.mean) / stats.std
    return [DyadicPair(_map(p.actor_a, fn), _map(p.actor_b, fn), p.label) for p in pairs], stats


def denormalize(pairs: Sequence[DyadicPair], stats: NormStats):
    fn = lambda x: x * stats.std + stats.mean
    return [DyadicPair(_map(p.actor_a, fn), _map(p.actor_b, fn), p.label) for p in pairs]


def swap_augment(pair: DyadicPair, coin: bool) -> DyadicPair:
    return pair.swapped() if coin else pair


def pairs_to_arrays(pairs: Sequence[DyadicPair], resolution: int, stats: NormStats | None = None):
    """Stack actors as ``(N, 3J, resolution)`` float arrays, optionally standardized.

    Each motion is Fourier-resampled from its native length, so corpora with
    varying T collate into one batch.
    """
    a_rows, b_rows = [], []
    for p in pairs:
        for m, rows in ((p.actor_a, a_rows), (p.actor_b, b_rows)):
            pos = m.positions if stats is None else (m.positions - stats.mean) / stats.std
            flat = pos.reshape(m.frames, -1)
            rows.append(resample_array(flat, resolution, axis=0).T)
    return np.stack(a_rows), np.stack(b_rows)


def save_corpus(out_dir, pairs: Sequence[DyadicPair], names: Sequence[str] | None = None, meta: dict | None = None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = names or [f"pair_{i:05d}" for i in range(len(pairs))]
    for name, p in zip(names, pairs):
        write_pair(out / f"{name}.pmo2", p)
    if meta is not None:
        (out / "corpus.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def load_corpus(in_dir) -> tuple[list[str], list[DyadicPair]]:
    """All ``*.pmo2`` files of a directory in name order, as ``(names, pairs)``."""
    paths = sorted(Path(in_dir).glob("*.pmo2"))
    if not paths:
        raise EmptyDataset(f"no .pmo2 files in {in_dir}")
    return [p.stem for p in paths], [read_pair(p) for p in paths]
