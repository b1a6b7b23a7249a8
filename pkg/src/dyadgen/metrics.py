"""Evaluation metrics: F2ID, diversity, MMD-A/MMD-S, APE and AVE.

F2ID follows the finite-basis recipe: moment-match a Gaussian process to each
feature population on an ``r``-point grid, represent both covariance operators
as ``k(x_i, x_j) / r`` matrices, and take the squared 2-Wasserstein distance
between the two Gaussians (no outer square root).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from .data.dataset import NormStats
from .data.motion import DyadicPair, MotionSequence
from .errors import EmptySet, LengthMismatch, NotSymmetric, OddCount, TooFewSamples
from .grid import GridFunction, resample_array
from .neural_op.spectral import DTYPE
from .neural_op.uno import UnoModel
from .random_fields import GaussianProcessEstimate, covariance_operator_matrix, fit_gp, fit_gp_array

__all__ = [
    "FeatureSet",
    "METRICS",
    "ape",
    "ave",
    "diversity_score",
    "evaluate_suite",
    "extract_features",
    "f2id",
    "f2id_from_gps",
    "median_bandwidth",
    "mmd_a",
    "mmd_s",
    "mmd_squared",
    "pair_tensor",
    "psd_sqrt",
    "read_report",
]

METRICS = ("f2id", "diversity", "mmd_a", "mmd_s", "ape_root", "ave_root")


@dataclass
class FeatureSet:
    features: list  # of 1-channel GridFunction
    source: str = "real"

    def __len__(self):
        return len(self.features)

    def as_array(self, grid_size: int) -> np.ndarray:
        """Every feature resampled onto a common ``grid_size`` grid, ``(n, grid_size)``."""
        return np.stack([resample_array(f.values[:, 0], grid_size) for f in self.features])


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric square root via eigendecomposition, negative eigenvalues clamped to 0."""
    m = np.asarray(m, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if m.ndim != 2 or m.shape[0] != m.shape[1] or np.max(np.abs(m - m.T), initial=0.0) > 1e-8 * scale:
        raise NotSymmetric("psd_sqrt needs a symmetric square matrix")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    s = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return 0.5 * (s + s.T)


def f2id_from_gps(gp_real: GaussianProcessEstimate, gp_gen: GaussianProcessEstimate) -> float:
    r = gp_real.grid_size
    m_t = covariance_operator_matrix(gp_real)
    m_g = covariance_operator_matrix(gp_gen)
    root_t = psd_sqrt(m_t)
    cross = root_t @ m_g @ root_t
    lmat = m_t + m_g - 2.0 * psd_sqrt(0.5 * (cross + cross.T))
    mean_term = np.sum((gp_real.mean - gp_gen.mean) ** 2) / r
    return float(mean_term + np.trace(lmat))


def f2id(real: FeatureSet, gen: FeatureSet, grid_size: int = 64) -> float:
    """Raw score; may dip a hair below zero from rounding (reports clamp it)."""
    if len(real) < 2 or len(gen) < 2:
        raise TooFewSamples("each feature set needs at least 2 members")
    if grid_size < 2:
        raise ValueError(f"grid_size must be >= 2, got {grid_size}")
    return f2id_from_gps(fit_gp(real.features, grid_size), fit_gp(gen.features, grid_size))


def diversity_score(features: FeatureSet, seed: Optional[int] = None) -> float:
    """Mean squared L2 distance between the two halves of a (shuffled) feature set.

    Without a seed the halves are the even- and odd-indexed members.
    """
    n = len(features)
    if n == 0 or n % 2:
        raise OddCount(f"need an even, nonzero number of features, got {n}")
    res = features.features[0].resolution
    arr = np.stack([resample_array(f.values[:, 0], res) for f in features.features])
    if seed is not None:
        arr = arr[np.random.default_rng(seed).permutation(n)]
    s, s_prime = arr[0::2], arr[1::2]
    return float(np.mean(np.sum((s - s_prime) ** 2, axis=1) / res))


def _sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = np.sum(x * x, axis=1)[:, None] + np.sum(y * y, axis=1)[None, :] - 2.0 * x @ y.T
    return np.clip(d, 0.0, None)


def median_bandwidth(x: np.ndarray, y: np.ndarray) -> float:
    """Median pairwise Euclidean distance over the pooled sample (1.0 if degenerate)."""
    z = np.concatenate([np.atleast_2d(x), np.atleast_2d(y)])
    iu = np.triu_indices(len(z), k=1)
    if len(iu[0]) == 0:
        return 1.0
    med = float(np.median(np.sqrt(_sq_dists(z, z)[iu])))
    return med if med > 0 else 1.0


def mmd_squared(x, y, bandwidth: float) -> float:
    """Biased (V-statistic) MMD^2 with kernel ``exp(-|a-b|^2 / (2 bandwidth^2))``."""
    if len(x) == 0 or len(y) == 0:
        raise EmptySet("MMD needs two nonempty samples")
    x = np.asarray(x, dtype=np.float64).reshape(len(x), -1)
    y = np.asarray(y, dtype=np.float64).reshape(len(y), -1)
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    g = lambda a, b: np.exp(-_sq_dists(a, b) / (2.0 * bandwidth**2)).mean()
    return float(g(x, x) + g(y, y) - 2.0 * g(x, y))


def _motion_stack(motions: Sequence[MotionSequence], resolution: Optional[int] = None) -> np.ndarray:
    """``(N, T, 3J)`` after resampling every motion to ``resolution`` (default: first's T)."""
    if not motions:
        raise EmptySet("empty motion corpus")
    res = resolution or motions[0].frames
    return np.stack([resample_array(m.flat(), res, axis=0) for m in motions])


def mmd_a(real: Sequence[MotionSequence], gen: Sequence[MotionSequence], resolution: Optional[int] = None) -> float:
    """Mean over time steps of MMD^2 between per-frame pose vectors."""
    res = resolution or real[0].frames
    r, g = _motion_stack(real, res), _motion_stack(gen, res)
    return _mmd_a_arrays(r, g)


def mmd_s(real: Sequence[MotionSequence], gen: Sequence[MotionSequence], resolution: Optional[int] = None) -> float:
    """MMD^2 between whole flattened sequences."""
    res = resolution or real[0].frames
    return mmd_s_arrays(_motion_stack(real, res), _motion_stack(gen, res))


def _check_paired(gen, real):
    if len(gen) != len(real):
        raise LengthMismatch(f"{len(gen)} generated vs {len(real)} real motions")
    if not gen:
        raise EmptySet("no motion pairs")
    for g, r in zip(gen, real):
        if g.frames != r.frames or g.joints != r.joints:
            raise LengthMismatch(f"pair shapes differ: {g.positions.shape} vs {r.positions.shape}")


def ape(gen: Sequence[MotionSequence], real: Sequence[MotionSequence], joint: int = 0) -> float:
    """Average over pairs of the per-frame mean Euclidean error of one joint."""
    _check_paired(gen, real)
    errs = [np.mean(np.linalg.norm(g.positions[:, joint] - r.positions[:, joint], axis=1)) for g, r in zip(gen, real)]
    return float(np.mean(errs))


def ave(gen: Sequence[MotionSequence], real: Sequence[MotionSequence], joint: int = 0) -> float:
    """Average over pairs of the distance between per-axis temporal variances of one joint."""
    _check_paired(gen, real)
    errs = [
        np.linalg.norm(np.var(g.positions[:, joint], axis=0) - np.var(r.positions[:, joint], axis=0))
        for g, r in zip(gen, real)
    ]
    return float(np.mean(errs))


def pair_tensor(condition: np.ndarray, responder: np.ndarray) -> torch.Tensor:
    """Model input for a pair: responder channels first, then the condition's."""
    return torch.as_tensor(np.concatenate([responder, condition], axis=-2), dtype=DTYPE)


def extract_features(
    ae: UnoModel,
    pairs: Sequence[DyadicPair],
    stats: Optional[NormStats] = None,
    resolution: Optional[int] = None,
    source: str = "real",
) -> FeatureSet:
    """Channel-averaged bottleneck activations of the autoencoder, one per pair.

    Pairs are fed at their native frame count unless ``resolution`` is given.
    """
    feats = []
    with torch.no_grad():
        for p in pairs:
            n = resolution or p.actor_a.frames
            cond, resp = (
                resample_array(_standardize(m, stats), n, axis=0).T for m in (p.actor_a, p.actor_b)
            )
            z = ae.encode(pair_tensor(cond, resp)[None])
            feats.append(GridFunction(z[0].mean(dim=0).numpy()))
    return FeatureSet(feats, source)


def _standardize(m: MotionSequence, stats: Optional[NormStats]) -> np.ndarray:
    pos = m.positions if stats is None else (m.positions - stats.mean) / stats.std
    return pos.reshape(m.frames, -1)


@dataclass
class SuiteReport:
    reps: list = field(default_factory=list)  # one {metric: value} dict per repetition

    def summary(self) -> dict:
        out = {}
        for name in METRICS:
            vals = np.array([r[name] for r in self.reps], dtype=np.float64)
            out[f"{name}.mean"] = float(np.mean(vals))
            out[f"{name}.std"] = float(np.std(vals))
        return out

    def write(self, path) -> Path:
        """Key-value summary at ``path`` and the raw table at ``<stem>.reps.tsv`` beside it.

        Returns the table's path.
        """
        path = Path(path)
        lines = [f"{k} = {v!r}" for k, v in self.summary().items()]
        lines.append(f"repetitions = {len(self.reps)}")
        path.write_text("\n".join(lines) + "\n")
        rows = ["rep\t" + "\t".join(METRICS)]
        rows += [f"{i}\t" + "\t".join(repr(r[m]) for m in METRICS) for i, r in enumerate(self.reps)]
        table = path.with_suffix(".reps.tsv")
        table.write_text("\n".join(rows) + "\n")
        return table


def read_report(path) -> dict:
    """Parse the key-value file written by :meth:`SuiteReport.write` into ``{key: float}``."""
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, value = line.partition("=")
        out[key.strip()] = float(value)
    return out


def evaluate_suite(
    real: Sequence[DyadicPair],
    gen: Sequence[DyadicPair],
    ae: UnoModel,
    stats: Optional[NormStats] = None,
    matches: Optional[Sequence[tuple[int, int]]] = None,
    reps: int = 5,
    sample: int = 1000,
    seed: int = 0,
    grid_size: int = 64,
    root_joint: int = 0,
) -> SuiteReport:
    """Run every metric ``reps`` times on with-replacement resamples of both corpora.

    Actor B is the responder in both corpora. ``matches`` lists
    ``(gen_index, real_index)`` pairs that share a condition; APE and AVE use
    those (NaN when there are none). Index draws use the same seed for both
    corpora, so equal-size corpora are resampled identically.
    """
    if not real or not gen:
        raise EmptySet("both corpora must be nonempty")
    if sample % 2:
        raise OddCount(f"sample size must be even for the diversity split, got {sample}")
    frames = int(np.median([p.actor_b.frames for p in real]))
    real_feats = extract_features(ae, real, stats).features
    gen_feats = extract_features(ae, gen, stats, source="generated").features
    real_arr = FeatureSet(real_feats).as_array(grid_size)
    gen_arr = FeatureSet(gen_feats).as_array(grid_size)
    real_mot = _motion_stack([p.actor_b for p in real], frames)
    gen_mot = _motion_stack([p.actor_b for p in gen], frames)
    matches = list(matches) if matches is not None else []

    report = SuiteReport()
    for rep in range(reps):
        ri = np.random.default_rng([seed, rep, 0]).integers(len(real), size=sample)
        gi = np.random.default_rng([seed, rep, 0]).integers(len(gen), size=sample)
        row = {
            "f2id": max(0.0, f2id_from_gps(fit_gp_array(real_arr[ri]), fit_gp_array(gen_arr[gi]))),
            "diversity": diversity_score(FeatureSet([gen_feats[i] for i in gi], "generated"), seed=seed + rep),
            "mmd_a": _mmd_a_arrays(real_mot[ri], gen_mot[gi]),
            "mmd_s": mmd_s_arrays(real_mot[ri], gen_mot[gi]),
        }
        if matches:
            mi = np.random.default_rng([seed, rep, 1]).integers(len(matches), size=sample)
            g_m, r_m = [], []
            for k in mi:
                gidx, ridx = matches[k]
                r_m.append(real[ridx].actor_b)
                g_m.append(_resample_motion(gen[gidx].actor_b, real[ridx].actor_b.frames))
            row["ape_root"] = ape(g_m, r_m, root_joint)
            row["ave_root"] = ave(g_m, r_m, root_joint)
        else:
            row["ape_root"] = row["ave_root"] = float("nan")
        report.reps.append(row)
    return report


def _resample_motion(m: MotionSequence, frames: int) -> MotionSequence:
    if m.frames == frames:
        return m
    flat = resample_array(m.flat(), frames, axis=0)
    return MotionSequence(flat.reshape(frames, m.joints, 3), m.duration / frames)


def _mmd_a_arrays(r: np.ndarray, g: np.ndarray) -> float:
    return float(np.mean([mmd_squared(r[:, t], g[:, t], median_bandwidth(r[:, t], g[:, t])) for t in range(r.shape[1])]))


def mmd_s_arrays(r: np.ndarray, g: np.ndarray) -> float:
    r = r.reshape(len(r), -1)
    g = g.reshape(len(g), -1)
    return mmd_squared(r, g, median_bandwidth(r, g))
