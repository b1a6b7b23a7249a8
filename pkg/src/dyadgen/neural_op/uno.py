"""U-shaped Fourier neural operator used for generator, critic and autoencoder.

Seven spectral integral layers: three encoder layers that shrink the grid and
widen the channels, one bottleneck, and three decoder layers that restore the
grid. Decoder layer ``6 - i`` receives encoder layer ``i``'s output through a
channel concatenation when skips are enabled. A pointwise lift precedes the
stack and a pointwise projection follows it; critics add a functional head
that integrates the projected function against a learned weight function.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
import torch
from torch import nn

from ..errors import ChannelMismatch, InvalidArchitecture, NoFunctionalHead, TapeMismatch
from ..grid import GridFunction
from .spectral import DTYPE, activation, band_limit_t, pointwise, resample_t, spectral_conv

N_LAYERS = 7
SKIP_PAIRS = {4: 2, 5: 1, 6: 0}  # decoder layer -> encoder layer
OVERSAMPLE = 4  # activation grid points per retained mode in anti-aliased layers

__all__ = [
    "ArchConfig",
    "FunctionalHead",
    "PointwiseLayer",
    "SpectralLayer",
    "Tape",
    "UnoModel",
    "backward",
    "functional_gradient_norm",
    "functional_head_forward",
    "init_params",
    "input_gradient_norm",
    "pointwise_apply",
    "spectral_layer_forward",
    "uno_forward",
]


@dataclass(frozen=True)
class ArchConfig:
    """Shape of a U-NO. ``channel_mults`` scale ``width`` for each layer's output."""

    in_channels: int
    out_channels: int
    width: int = 64
    channel_mults: tuple = (2, 4, 8, 8, 4, 2, 1)
    factors: tuple = ("1/2", "1/2", "1/2", "1", "2", "2", "2")
    max_modes: int = 16
    reference_resolution: int = 64
    skips: bool = True
    head_hidden: Optional[int] = None
    activation: str = "gelu"
    anti_alias: bool = True

    def __post_init__(self):
        object.__setattr__(self, "channel_mults", tuple(int(c) for c in self.channel_mults))
        object.__setattr__(self, "factors", tuple(str(Fraction(f)) for f in self.factors))
        self.validate()

    @property
    def fractions(self) -> tuple:
        return tuple(Fraction(f) for f in self.factors)

    @property
    def has_head(self) -> bool:
        return self.head_hidden is not None

    def validate(self) -> None:
        problems = []
        if len(self.channel_mults) != N_LAYERS or len(self.factors) != N_LAYERS:
            problems.append(f"need exactly {N_LAYERS} layers")
        if min(self.in_channels, self.out_channels, self.width, self.max_modes) < 1:
            problems.append("channels, width and max_modes must be positive")
        if any(c < 1 for c in self.channel_mults):
            problems.append("channel multipliers must be positive")
        fr = self.fractions
        if any(f <= 0 for f in fr):
            problems.append("resolution factors must be positive")
        elif math.prod(fr) != 1:
            problems.append(f"resolution factors multiply to {math.prod(fr)}, not 1")
        if len(fr) == N_LAYERS:
            for dec, enc in SKIP_PAIRS.items():
                # decoder must land on the grid the mirrored encoder started from
                if math.prod(fr[: dec + 1]) != math.prod(fr[:enc]):
                    problems.append(f"layer {dec} does not mirror layer {enc}'s input grid")
                if self.skips and math.prod(fr[:dec]) != math.prod(fr[: enc + 1]):
                    problems.append(f"layer {dec} input grid differs from layer {enc}'s output grid")
        if self.head_hidden is not None and self.head_hidden < 1:
            problems.append("head_hidden must be positive")
        if self.activation not in ("gelu", "identity"):
            problems.append(f"unknown activation {self.activation!r}")
        if self.reference_resolution < 8:
            problems.append("reference_resolution must be >= 8")
        if problems:
            raise InvalidArchitecture("; ".join(problems))

    def layer_channels(self) -> list[tuple[int, int]]:
        outs = [self.width * m for m in self.channel_mults]
        chans = []
        prev = self.width
        for i in range(N_LAYERS):
            cin = prev + (outs[SKIP_PAIRS[i]] if self.skips and i in SKIP_PAIRS else 0)
            chans.append((cin, outs[i]))
            prev = outs[i]
        return chans

    def resolutions(self, n: int) -> list[tuple[int, int]]:
        """(input, output) grid size for every layer when fed an ``n``-point input."""
        res = []
        cur = n
        for i, f in enumerate(self.fractions):
            out = res[SKIP_PAIRS[i]][0] if i in SKIP_PAIRS else max(1, round(cur * f))
            res.append((cur, out))
            cur = out
        return res

    def layer_modes(self) -> list[int]:
        return [
            max(1, min(self.max_modes, (min(a, b) + 1) // 2))
            for a, b in self.resolutions(self.reference_resolution)
        ]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ArchConfig":
        d = dict(d)
        d["channel_mults"] = tuple(d["channel_mults"])
        d["factors"] = tuple(d["factors"])
        return cls(**d)


class PointwiseLayer(nn.Module):
    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.weight = nn.Parameter(torch.zeros(in_channels, out_channels, dtype=DTYPE))
        self.bias = nn.Parameter(torch.zeros(out_channels, dtype=DTYPE))

    @property
    def in_channels(self) -> int:
        return self.weight.shape[0]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.in_channels:
            raise ChannelMismatch(f"expected {self.in_channels} channels, got {x.shape[1]}")
        return pointwise(x, self.weight, self.bias)


class SpectralLayer(nn.Module):
    """``act(K v + W v + b)`` with ``K`` applied on the lowest ``modes`` frequencies.

    The output grid is ``round(n * factor)`` unless given explicitly. With
    ``anti_alias`` the pointwise path is restricted to the same ``modes`` band
    as the kernel path, and the activation is evaluated on a grid of at least
    ``OVERSAMPLE * modes`` points before resampling to the output grid. The
    layer then acts on functions rather than on a particular grid: inputs at
    different resolutions see the same pre-activation and the same sampled
    nonlinearity. Without it, the pointwise path keeps everything the output
    grid can hold and the activation runs on the output grid directly.
    """

    def __init__(self, in_channels: int, out_channels: int, modes: int, factor=Fraction(1), act="gelu", anti_alias=True):
        super().__init__()
        self.modes = modes
        self.factor = Fraction(factor)
        self.act_name = act
        self.anti_alias = anti_alias
        self.kernel = nn.Parameter(torch.zeros(modes, in_channels, out_channels, 2, dtype=DTYPE))
        self.weight = nn.Parameter(torch.zeros(in_channels, out_channels, dtype=DTYPE))
        self.bias = nn.Parameter(torch.zeros(out_channels, dtype=DTYPE))

    @property
    def in_channels(self) -> int:
        return self.weight.shape[0]

    def forward(self, x: torch.Tensor, out_resolution: Optional[int] = None) -> torch.Tensor:
        if x.shape[1] != self.in_channels:
            raise ChannelMismatch(f"expected {self.in_channels} channels, got {x.shape[1]}")
        if out_resolution is None:
            out_resolution = max(1, round(x.shape[-1] * self.factor))
        act = activation(self.act_name)
        if not self.anti_alias:
            pre = spectral_conv(x, self.kernel, out_resolution)
            pre = pre + resample_t(pointwise(x, self.weight, self.bias), out_resolution)
            return act(pre)
        work = max(out_resolution, OVERSAMPLE * self.modes)
        pre = spectral_conv(x, self.kernel, work)
        pre = pre + band_limit_t(pointwise(x, self.weight, self.bias), self.modes, work)
        return resample_t(act(pre), out_resolution)


class FunctionalHead(nn.Module):
    """Maps a function to a scalar, ``(1/n) sum_i <kappa(t_i), v(t_i)>``.

    ``kappa`` is a two-layer GELU network of ``(cos 2 pi t, sin 2 pi t)``: it is
    defined at every resolution and periodic, so the rectangle rule over the
    grid converges spectrally for smooth inputs.
    """

    def __init__(self, channels: int, hidden: int):
        super().__init__()
        self.hidden = PointwiseLayer(2, hidden)
        self.out = PointwiseLayer(hidden, channels)

    @property
    def channels(self) -> int:
        return self.out.weight.shape[1]

    def kappa(self, resolution: int) -> torch.Tensor:
        t = torch.arange(resolution, dtype=DTYPE) * (2 * math.pi / resolution)
        t = torch.stack([torch.cos(t), torch.sin(t)])[None]
        return self.out(activation("gelu")(self.hidden(t)))  # (1, channels, n)

    def forward(self, v: torch.Tensor) -> torch.Tensor:
        if v.shape[1] != self.channels:
            raise ChannelMismatch(f"head expects {self.channels} channels, got {v.shape[1]}")
        return torch.sum(self.kappa(v.shape[-1]) * v, dim=(1, 2)) / v.shape[-1]


class UnoModel(nn.Module):
    def __init__(self, config: ArchConfig):
        super().__init__()
        self.config = config
        self.lift = PointwiseLayer(config.in_channels, config.width)
        modes = config.layer_modes()
        self.layers = nn.ModuleList(
            SpectralLayer(cin, cout, modes[i], config.fractions[i], config.activation, config.anti_alias)
            for i, (cin, cout) in enumerate(config.layer_channels())
        )
        last = config.layer_channels()[-1][1]
        self.project = PointwiseLayer(last, config.out_channels)
        self.head = FunctionalHead(config.out_channels, config.head_hidden) if config.has_head else None

    def _trunk(self, x: torch.Tensor, stop_after: Optional[int] = None) -> torch.Tensor:
        if x.shape[1] != self.config.in_channels:
            raise ChannelMismatch(f"model takes {self.config.in_channels} channels, got {x.shape[1]}")
        res = self.config.resolutions(x.shape[-1])
        h = self.lift(x)
        saved = {}
        for i, layer in enumerate(self.layers):
            if self.config.skips and i in SKIP_PAIRS:
                skip = saved[SKIP_PAIRS[i]]
                if skip.shape[-1] != h.shape[-1]:
                    skip = resample_t(skip, h.shape[-1])
                h = torch.cat([h, skip], dim=1)
            h = layer(h, res[i][1])
            saved[i] = h
            if stop_after == i:
                return h
        return self.project(h)

    def function(self, x: torch.Tensor) -> torch.Tensor:
        """Operator output before any functional head, ``(batch, out, n)``."""
        return self._trunk(x)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """Bottleneck activations, ``(batch, width * mult[3], n_bottleneck)``."""
        return self._trunk(x, stop_after=3)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self._trunk(x)
        return self.head(out) if self.head is not None else out


def init_params(config: ArchConfig, seed: int) -> UnoModel:
    """Build a model with seeded random weights.

    Spectral kernels are complex Gaussian with standard deviation
    ``1/(in*out)``; pointwise weights are Gaussian with std ``sqrt(2/in)``;
    biases start at zero.
    """
    model = UnoModel(config)
    gen = torch.Generator().manual_seed(int(seed))
    with torch.no_grad():
        for module in model.modules():
            if isinstance(module, SpectralLayer):
                cin, cout = module.weight.shape
                std = 1.0 / (cin * cout)
                module.kernel.copy_(torch.randn(module.kernel.shape, generator=gen, dtype=DTYPE) * std / math.sqrt(2))
                module.weight.copy_(torch.randn(module.weight.shape, generator=gen, dtype=DTYPE) * math.sqrt(2.0 / cin))
            elif isinstance(module, PointwiseLayer):
                cin = module.weight.shape[0]
                module.weight.copy_(torch.randn(module.weight.shape, generator=gen, dtype=DTYPE) * math.sqrt(2.0 / cin))
    return model


# GridFunction-level API -----------------------------------------------------

def _to_batch(v: GridFunction) -> torch.Tensor:
    return torch.tensor(v.values.T, dtype=DTYPE)[None]


def _from_batch(x: torch.Tensor) -> GridFunction:
    return GridFunction(x[0].detach().numpy().T)


def pointwise_apply(p: PointwiseLayer, v: GridFunction) -> GridFunction:
    with torch.no_grad():
        return _from_batch(p(_to_batch(v)))


def spectral_layer_forward(layer: SpectralLayer, v: GridFunction, out_resolution: Optional[int] = None) -> GridFunction:
    with torch.no_grad():
        return _from_batch(layer(_to_batch(v), out_resolution))


def functional_head_forward(h: FunctionalHead, v: GridFunction) -> float:
    with torch.no_grad():
        return float(h(_to_batch(v))[0])


@dataclass
class Tape:
    """Everything :func:`backward` needs from one recorded forward pass."""

    model: UnoModel = field(repr=False)
    inputs: torch.Tensor = field(repr=False)
    outputs: torch.Tensor = field(repr=False)
    used: bool = False


def uno_forward(model: UnoModel, v: GridFunction, record_tape: bool = False):
    """Evaluate on one function. Returns ``(output, tape)``; tape is None unless requested.

    The output is a GridFunction, or a float for models with a functional head.
    """
    x = _to_batch(v)
    if record_tape:
        x.requires_grad_(True)
        y = model(x)
        tape = Tape(model, x, y)
    else:
        with torch.no_grad():
            y = model(x)
        tape = None
    out = float(y[0]) if model.head is not None else _from_batch(y)
    return out, tape


def backward(model: UnoModel, tape: Tape, cotangent=1.0):
    """Reverse pass for a recorded evaluation.

    Returns ``(param_grads, input_grad)``: gradients of ``<cotangent, output>``
    with respect to every named parameter (numpy arrays) and to the input
    samples. ``input_grad`` is the plain discrete gradient; multiply by the
    resolution to get the L2 Riesz representative (see
    :func:`input_gradient_norm`).
    """
    if tape.model is not model:
        raise TapeMismatch("tape was recorded by a different model")
    if tape.used:
        raise TapeMismatch("tape already consumed by a previous backward")
    if isinstance(cotangent, GridFunction):
        ct = _to_batch(cotangent)
    else:
        ct = torch.as_tensor(np.asarray(cotangent, dtype=np.float64), dtype=DTYPE)
    if ct.numel() != tape.outputs.numel() and ct.numel() != 1:
        raise TapeMismatch(f"cotangent size {ct.numel()} does not match output size {tape.outputs.numel()}")
    ct = ct.reshape(tape.outputs.shape) if ct.numel() == tape.outputs.numel() else ct.expand_as(tape.outputs)
    names, params = zip(*model.named_parameters())
    grads = torch.autograd.grad(tape.outputs, (tape.inputs,) + params, grad_outputs=ct, allow_unused=True)
    tape.used = True
    param_grads = {
        name: (g if g is not None else torch.zeros_like(p)).detach().numpy().copy()
        for name, p, g in zip(names, params, grads[1:])
    }
    return param_grads, _from_batch(grads[0])


def functional_gradient_norm(model: UnoModel, x: torch.Tensor, create_graph: bool = False) -> torch.Tensor:
    """Per-sample L2 norm of the Frechet derivative of a scalar-headed model at ``x``.

    The discrete gradient ``g`` of ``(1/n)``-weighted quadratures represents the
    derivative as ``n * g``; its quadrature norm is returned. ``create_graph``
    keeps the graph so the norm itself can be differentiated.
    """
    if model.head is None:
        raise NoFunctionalHead("gradient norm needs a model with a functional head")
    if not x.requires_grad:
        x = x.detach().requires_grad_(True)
    d = model(x)
    (g,) = torch.autograd.grad(d.sum(), x, create_graph=create_graph)
    n = x.shape[-1]
    sq = torch.sum(g * g, dim=(1, 2)) * n
    # tiny floor keeps sqrt differentiable when the critic is locally flat
    return torch.sqrt(sq + 1e-30)


def input_gradient_norm(model: UnoModel, v: GridFunction) -> float:
    return float(functional_gradient_norm(model, _to_batch(v))[0])
