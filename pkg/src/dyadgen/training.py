"""Function-space WGAN-GP training for the conditional generator, plus autoencoder fitting.

The critic scores a pair ``concat(responder, condition)``; the generator maps
``concat(noise, condition)`` to a responder. Both are U-NOs on a shared time
grid, so every loss below is a quadrature over [0, 1].
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from .data.dataset import NormStats, fit_norm_stats, pairs_to_arrays
from .data.motion import DyadicPair, MotionSequence
from .data.skeleton import SkeletonSpec, get_preset
from .errors import BadJointIndex, ConfigError, NonFiniteLoss, ShapeMismatch
from .metrics import pair_tensor
from .neural_op.checkpoint import save_model
from .neural_op.spectral import DTYPE
from .neural_op.uno import ArchConfig, UnoModel, functional_gradient_norm, init_params
from .random_fields import GrfSpec, Kernel, sample_grf_batch

log = logging.getLogger(__name__)

__all__ = [
    "AdamState",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "critic_loss",
    "critic_objective",
    "generator_loss",
    "generator_objective",
    "lr_at",
    "read_config",
    "symmetry_penalty",
    "symmetry_penalty_t",
    "train",
    "train_autoencoder",
    "write_config",
]


@dataclass
class TrainConfig:
    epochs: int = 200
    lr0: float = 1e-4
    lr_halving_period: int = 50
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lambda_gp: float = 10.0
    lambda_sym: float = 0.1
    critic_steps_per_gen: int = 5
    batch_size: int = 32
    seed: int = 0
    train_resolution: int = 64
    # architecture and plumbing
    width: int = 64
    max_modes: int = 16
    head_hidden: int = 32
    noise_length_scale: float = 0.1
    noise_variance: float = 1.0
    swap_augment: bool = True
    checkpoint_every: int = 10
    skeleton: str = "toy4"
    ae_epochs: int = 50
    ae_lr: float = 1e-3

    def __post_init__(self):
        positive = [
            "epochs", "lr0", "lr_halving_period", "eps", "critic_steps_per_gen", "batch_size",
            "train_resolution", "width", "max_modes", "head_hidden", "noise_length_scale",
            "noise_variance", "checkpoint_every", "ae_epochs", "ae_lr",
        ]
        bad = [k for k in positive if not getattr(self, k) > 0]
        bad += [k for k in ("lambda_gp", "lambda_sym") if getattr(self, k) < 0]
        bad += [k for k in ("beta1", "beta2") if not 0 <= getattr(self, k) < 1]
        if bad:
            raise ConfigError(f"invalid values for {', '.join(bad)}")

    def noise_spec(self, channels: int) -> GrfSpec:
        return GrfSpec(Kernel.SQUARED_EXPONENTIAL, self.noise_length_scale, self.noise_variance, channels)

    def generator_arch(self, joints: int) -> ArchConfig:
        c = 3 * joints
        return ArchConfig(2 * c, c, self.width, max_modes=self.max_modes, reference_resolution=self.train_resolution)

    def critic_arch(self, joints: int) -> ArchConfig:
        return ArchConfig(
            6 * joints, 1, self.width, max_modes=self.max_modes,
            reference_resolution=self.train_resolution, head_hidden=self.head_hidden,
        )

    def autoencoder_arch(self, joints: int) -> ArchConfig:
        c = 6 * joints
        return ArchConfig(c, c, self.width, max_modes=self.max_modes, reference_resolution=self.train_resolution, skips=False)


def _parse_value(kind, text: str):
    if kind is bool:
        if text.lower() in ("true", "1", "yes", "on"):
            return True
        if text.lower() in ("false", "0", "no", "off"):
            return False
        raise ValueError(text)
    return kind(text)


def read_config(path, **overrides) -> TrainConfig:
    """Parse a flat ``key = value`` file whose keys are TrainConfig field names."""
    types = {f.name: type(f.default) for f in dataclasses.fields(TrainConfig)}
    values = {}
    text = Path(path).read_text() if path is not None else ""
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in types:
            raise ConfigError(f"{path}:{lineno}: unknown or malformed entry {line!r}")
        try:
            values[key] = _parse_value(types[key], value.strip())
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: cannot parse {key} = {value.strip()!r}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


def write_config(path, config: TrainConfig) -> None:
    lines = [f"{k} = {v}" for k, v in dataclasses.asdict(config).items()]
    Path(path).write_text("\n".join(lines) + "\n")


def lr_at(epoch: int, config: TrainConfig) -> float:
    """Initial rate halved after every ``lr_halving_period`` epochs."""
    return config.lr0 * 2.0 ** (-(epoch // config.lr_halving_period))


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[torch.Tensor]) -> "AdamState":
        return cls([torch.zeros_like(p) for p in params], [torch.zeros_like(p) for p in params], 0)


def adam_step(params, grads, state: AdamState, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; returns ``(new_params, new_state)`` without mutating inputs."""
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeMismatch("params, grads and moments have different lengths")
    t = state.t + 1
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeMismatch(f"shape {tuple(g.shape)} does not match parameter {tuple(p.shape)}")
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        new_p.append(p - lr * m_hat / (torch.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(new_m, new_v, t)


class _Optimizer:
    """Applies :func:`adam_step` to a module's parameters in place."""

    def __init__(self, model: torch.nn.Module, config: TrainConfig):
        self.params = list(model.parameters())
        self.state = AdamState.zeros_like([p.detach() for p in self.params])
        self.config = config

    def step(self, grads, lr):
        c = self.config
        cur = [p.detach() for p in self.params]
        new, self.state = adam_step(cur, [g.detach() for g in grads], self.state, lr, c.beta1, c.beta2, c.eps)
        with torch.no_grad():
            for p, q in zip(self.params, new):
                p.copy_(q)


# losses --------------------------------------------------------------------

def _bones(skeleton: SkeletonSpec):
    if not skeleton.mirrored:
        return None
    for pair in skeleton.mirrored:
        for a, b in pair:
            if not (0 <= a < skeleton.joints and 0 <= b < skeleton.joints):
                raise BadJointIndex(f"bone ({a}, {b}) outside skeleton of {skeleton.joints} joints")
    left = np.array([l for l, _ in skeleton.mirrored])
    right = np.array([r for _, r in skeleton.mirrored])
    return left, right


def symmetry_penalty_t(positions: torch.Tensor, skeleton: SkeletonSpec) -> torch.Tensor:
    """Batched penalty for ``(B, T, J, 3)`` positions; mean over batch, time and mirrored pairs."""
    bones = _bones(skeleton)
    if bones is None:
        return positions.new_zeros(())
    if positions.shape[-2] != skeleton.joints:
        raise BadJointIndex(f"motion has {positions.shape[-2]} joints, skeleton {skeleton.joints}")
    left, right = bones
    lv = positions[..., left[:, 1], :] - positions[..., left[:, 0], :]
    rv = positions[..., right[:, 1], :] - positions[..., right[:, 0], :]
    # smooth norm so the penalty stays differentiable at zero-length bones
    ll = torch.sqrt(torch.sum(lv * lv, dim=-1) + 1e-24)
    rl = torch.sqrt(torch.sum(rv * rv, dim=-1) + 1e-24)
    return torch.mean((ll - rl) ** 2)


def symmetry_penalty(motion: MotionSequence, skeleton: SkeletonSpec) -> float:
    pos = torch.tensor(motion.positions, dtype=DTYPE)[None]
    return float(symmetry_penalty_t(pos, skeleton))


def _denormalized_positions(x: torch.Tensor, stats: Optional[NormStats]) -> torch.Tensor:
    """``(B, 3J, n)`` model output -> ``(B, n, J, 3)`` positions in original units."""
    b, c, n = x.shape
    pos = x.transpose(1, 2).reshape(b, n, c // 3, 3)
    if stats is not None:
        pos = pos * torch.as_tensor(stats.std, dtype=DTYPE) + torch.as_tensor(stats.mean, dtype=DTYPE)
    return pos


def critic_objective(critic: UnoModel, generator: UnoModel, condition, target, noise, mix, lambda_gp: float):
    """Critic loss tensor and its parts for one batch.

    ``mix`` holds one U(0,1) weight per sample for the interpolated pairs at
    which the gradient penalty is evaluated.
    """
    with torch.no_grad():
        fake = generator(torch.cat([noise, condition], dim=1))
    real_pair = torch.cat([target, condition], dim=1)
    fake_pair = torch.cat([fake, condition], dim=1)
    d_real = critic(real_pair)
    d_fake = critic(fake_pair)
    w = mix[:, None, None]
    interp = (w * fake_pair + (1 - w) * real_pair).detach().requires_grad_(True)
    grad_norm = functional_gradient_norm(critic, interp, create_graph=True)
    penalty = torch.mean((grad_norm - 1.0) ** 2)
    loss = d_fake.mean() - d_real.mean() + lambda_gp * penalty
    return loss, {
        "wasserstein": float((d_real.mean() - d_fake.mean()).detach()),
        "penalty": float(penalty.detach()),
        "grad_norm": float(grad_norm.mean().detach()),
    }


def generator_objective(critic, generator, condition, noise, skeleton, lambda_sym, stats=None):
    fake = generator(torch.cat([noise, condition], dim=1))
    adv = -critic(torch.cat([fake, condition], dim=1)).mean()
    sym = symmetry_penalty_t(_denormalized_positions(fake, stats), skeleton) if lambda_sym else fake.new_zeros(())
    return adv + lambda_sym * sym, {"symmetry": float(sym.detach())}


def _as_batch(x) -> torch.Tensor:
    return torch.as_tensor(np.asarray(x, dtype=np.float64), dtype=DTYPE)


def critic_loss(critic, generator, condition, target, noise, mix, lambda_gp):
    """Numpy-friendly wrapper: ``(loss, {param name: grad})`` for the critic."""
    loss, _ = critic_objective(critic, generator, _as_batch(condition), _as_batch(target), _as_batch(noise), _as_batch(mix), lambda_gp)
    names, params = zip(*critic.named_parameters())
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return loss.item(), {n: (g if g is not None else torch.zeros_like(p)).numpy() for n, p, g in zip(names, params, grads)}


def generator_loss(critic, generator, condition, noise, skeleton, lambda_sym, stats=None):
    """Numpy-friendly wrapper: ``(loss, {param name: grad})`` for the generator."""
    loss, _ = generator_objective(critic, generator, _as_batch(condition), _as_batch(noise), skeleton, lambda_sym, stats)
    names, params = zip(*generator.named_parameters())
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return loss.item(), {n: (g if g is not None else torch.zeros_like(p)).numpy() for n, p, g in zip(names, params, grads)}


# loops ---------------------------------------------------------------------

@dataclass
class TrainResult:
    generator: UnoModel
    critic: UnoModel
    stats: NormStats
    history: list = field(default_factory=list)


LOG_COLUMNS = ("epoch", "lr", "critic_loss", "gen_loss", "penalty_mean", "grad_norm_mean")


def _check_finite(value: float, what: str, out_dir: Optional[Path], context: dict):
    if math.isfinite(value):
        return
    if out_dir is not None:
        (out_dir / "nonfinite_dump.json").write_text(json.dumps({"what": what, **context}, indent=2, default=str))
    raise NonFiniteLoss(f"{what} became {value} ({context})")


def generator_meta(config: TrainConfig, stats: NormStats, joints: int) -> dict:
    return {
        "kind": "generator",
        "joints": joints,
        "norm": stats.to_dict(),
        "noise": {"length_scale": config.noise_length_scale, "variance": config.noise_variance},
        "train_resolution": config.train_resolution,
        "skeleton": config.skeleton,
    }


def train(
    config: TrainConfig,
    pairs: Sequence[DyadicPair],
    out_dir=None,
    skeleton: Optional[SkeletonSpec] = None,
) -> TrainResult:
    """Adversarial training on already-split training pairs (actor A conditions actor B).

    Writes ``metrics.tsv`` and checkpoints to ``out_dir`` when given. Every
    random draw comes from one generator seeded with ``config.seed``.
    """
    if not pairs:
        raise ConfigError("no training pairs")
    joints = pairs[0].actor_a.joints
    skeleton = skeleton or get_preset(config.skeleton)
    if skeleton.joints != joints:
        raise BadJointIndex(f"skeleton {skeleton.name} has {skeleton.joints} joints, data has {joints}")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    stats = fit_norm_stats(pairs)
    cond_all, resp_all = pairs_to_arrays(pairs, config.train_resolution, stats)
    rng = np.random.default_rng(config.seed)
    generator = init_params(config.generator_arch(joints), config.seed)
    critic = init_params(config.critic_arch(joints), config.seed + 1)
    g_opt, d_opt = _Optimizer(generator, config), _Optimizer(critic, config)
    noise_spec = config.noise_spec(3 * joints)
    n = len(pairs)
    meta = generator_meta(config, stats, joints)
    history = []
    log_lines = ["\t".join(LOG_COLUMNS)]
    iteration = 0

    for epoch in range(config.epochs):
        lr = lr_at(epoch, config)
        order = rng.permutation(n)
        coins = rng.random(n) < 0.5 if config.swap_augment else np.zeros(n, dtype=bool)
        cond = np.where(coins[:, None, None], resp_all, cond_all)[order]
        resp = np.where(coins[:, None, None], cond_all, resp_all)[order]
        sums = {"critic_loss": 0.0, "gen_loss": 0.0, "penalty_mean": 0.0, "grad_norm_mean": 0.0}
        d_steps = g_steps = 0
        for start in range(0, n, config.batch_size):
            c_b = _as_batch(cond[start : start + config.batch_size])
            r_b = _as_batch(resp[start : start + config.batch_size])
            bsz = c_b.shape[0]
            noise = _as_batch(sample_grf_batch(noise_spec, config.train_resolution, bsz, rng).transpose(0, 2, 1))
            mix = _as_batch(rng.random(bsz))
            loss, parts = critic_objective(critic, generator, c_b, r_b, noise, mix, config.lambda_gp)
            _check_finite(loss.item(), "critic_loss", out, {"epoch": epoch, "iteration": iteration, **parts})
            grads = torch.autograd.grad(loss, list(critic.parameters()))
            d_opt.step(grads, lr)
            sums["critic_loss"] += loss.item()
            sums["penalty_mean"] += parts["penalty"]
            sums["grad_norm_mean"] += parts["grad_norm"]
            d_steps += 1
            iteration += 1
            if iteration % config.critic_steps_per_gen == 0:
                noise = _as_batch(sample_grf_batch(noise_spec, config.train_resolution, bsz, rng).transpose(0, 2, 1))
                g_loss, _ = generator_objective(critic, generator, c_b, noise, skeleton, config.lambda_sym, stats)
                _check_finite(g_loss.item(), "gen_loss", out, {"epoch": epoch, "iteration": iteration})
                grads = torch.autograd.grad(g_loss, list(generator.parameters()))
                g_opt.step(grads, lr)
                sums["gen_loss"] += g_loss.item()
                g_steps += 1
        row = {
            "epoch": epoch,
            "lr": lr,
            "critic_loss": sums["critic_loss"] / d_steps,
            "gen_loss": sums["gen_loss"] / g_steps if g_steps else float("nan"),
            "penalty_mean": sums["penalty_mean"] / d_steps,
            "grad_norm_mean": sums["grad_norm_mean"] / d_steps,
        }
        history.append(row)
        log_lines.append("\t".join(repr(row[k]) for k in LOG_COLUMNS))
        log.info("epoch %d lr %.3g critic %.5g gen %.5g", epoch, lr, row["critic_loss"], row["gen_loss"])
        if out is not None:
            (out / "metrics.tsv").write_text("\n".join(log_lines) + "\n")
            if (epoch + 1) % config.checkpoint_every == 0 or epoch + 1 == config.epochs:
                tag = f"e{epoch + 1:04d}"
                save_model(out / f"generator_{tag}.uno", generator, {**meta, "epoch": epoch + 1})
                save_model(out / f"critic_{tag}.uno", critic, {"kind": "critic", "epoch": epoch + 1})
    if out is not None:
        save_model(out / "generator.uno", generator, {**meta, "epoch": config.epochs})
        save_model(out / "critic.uno", critic, {"kind": "critic", "epoch": config.epochs})
        write_config(out / "config.txt", config)
    return TrainResult(generator, critic, stats, history)


def reconstruction_loss(ae: UnoModel, x: torch.Tensor) -> torch.Tensor:
    """Batch mean of the quadrature-weighted squared L2 reconstruction error."""
    err = ae(x) - x
    return torch.mean(torch.sum(err * err, dim=(1, 2)) / x.shape[-1])


def train_autoencoder(config: TrainConfig, pairs: Sequence[DyadicPair], out_dir=None):
    """Fit the feature autoencoder on dyadic pairs; returns ``(model, stats, losses)``.

    Uses ``ae_epochs`` and ``ae_lr`` (same halving schedule) and the same
    swap augmentation as adversarial training.
    """
    if not pairs:
        raise ConfigError("no training pairs")
    joints = pairs[0].actor_a.joints
    stats = fit_norm_stats(pairs)
    cond_all, resp_all = pairs_to_arrays(pairs, config.train_resolution, stats)
    rng = np.random.default_rng(config.seed)
    ae = init_params(config.autoencoder_arch(joints), config.seed)
    opt = _Optimizer(ae, config)
    schedule = dataclasses.replace(config, lr0=config.ae_lr)
    n = len(pairs)
    losses = []
    out = Path(out_dir) if out_dir is not None else None
    for epoch in range(config.ae_epochs):
        lr = lr_at(epoch, schedule)
        order = rng.permutation(n)
        coins = rng.random(n) < 0.5 if config.swap_augment else np.zeros(n, dtype=bool)
        cond = np.where(coins[:, None, None], resp_all, cond_all)[order]
        resp = np.where(coins[:, None, None], cond_all, resp_all)[order]
        total = 0.0
        for start in range(0, n, config.batch_size):
            x = pair_tensor(cond[start : start + config.batch_size], resp[start : start + config.batch_size])
            loss = reconstruction_loss(ae, x)
            _check_finite(loss.item(), "reconstruction_loss", out, {"epoch": epoch})
            opt.step(torch.autograd.grad(loss, list(ae.parameters())), lr)
            total += loss.item() * x.shape[0]
        losses.append(total / n)
        log.info("ae epoch %d loss %.5g", epoch, losses[-1])
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        meta = {"kind": "autoencoder", "joints": joints, "norm": stats.to_dict(), "epochs": config.ae_epochs}
        save_model(out / "autoencoder.uno", ae, meta)
        (out / "ae_loss.tsv").write_text("epoch\tloss\n" + "".join(f"{i}\t{l!r}\n" for i, l in enumerate(losses)))
    return ae, stats, losses
