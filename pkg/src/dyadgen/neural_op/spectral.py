"""Batched torch versions of the grid primitives, differentiable end to end.

Tensors are laid out ``(batch, channels, resolution)``; the numpy functions in
:mod:`dyadgen.grid` use ``(resolution, channels)`` and are the reference these
are tested against.
"""
from __future__ import annotations

import math

import torch

from ..errors import ModesExceedNyquist

DTYPE = torch.float64


def gelu(x: torch.Tensor) -> torch.Tensor:
    # exact erf form; the tanh approximation would spoil finite-difference checks
    return 0.5 * x * (1.0 + torch.erf(x / math.sqrt(2.0)))


def activation(name: str):
    if name == "gelu":
        return gelu
    if name == "identity":
        return lambda x: x
    raise ValueError(f"unknown activation {name!r}")


def resample_t(x: torch.Tensor, new_resolution: int) -> torch.Tensor:
    """Fourier resampling along the last axis; mirrors :func:`dyadgen.grid.resample_array`."""
    n = x.shape[-1]
    if n == new_resolution:
        return x
    spec = torch.fft.rfft(x, dim=-1)
    shared = min(n, new_resolution)
    keep = shared // 2 + 1
    kept = spec[..., :keep]
    if shared % 2 == 0:
        last = kept[..., -1:]
        last = 0.5 * last if new_resolution > n else torch.complex(2.0 * last.real, torch.zeros_like(last.real))
        kept = torch.cat([kept[..., :-1], last], dim=-1)
    return torch.fft.irfft(kept, n=new_resolution, dim=-1) * (new_resolution / n)


def spectral_conv(x: torch.Tensor, weight: torch.Tensor, out_resolution: int) -> torch.Tensor:
    """Kernel integral evaluated as multiplication on the lowest Fourier modes.

    ``weight`` is real with shape ``(modes, in, out, 2)`` holding (re, im).
    """
    modes = weight.shape[0]
    n = x.shape[-1]
    limit = min(n, out_resolution) // 2 + 1
    if modes > limit:
        raise ModesExceedNyquist(
            f"layer keeps {modes} modes but the {n}->{out_resolution} grid supports {limit}"
        )
    coeffs = torch.fft.rfft(x, dim=-1)[..., :modes]
    r = torch.view_as_complex(weight)
    mixed = torch.einsum("bim,mio->bom", coeffs, r)
    return torch.fft.irfft(mixed, n=out_resolution, dim=-1) * (out_resolution / n)


def band_limit_t(x: torch.Tensor, modes: int, out_resolution: int) -> torch.Tensor:
    """Keep the lowest ``modes`` frequencies of ``x`` and sample them on ``out_resolution`` points."""
    coeffs = torch.fft.rfft(x, dim=-1)[..., :modes]
    return torch.fft.irfft(coeffs, n=out_resolution, dim=-1) * (out_resolution / x.shape[-1])


def pointwise(x: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor) -> torch.Tensor:
    return torch.einsum("bin,io->bon", x, weight) + bias[None, :, None]


def quadrature_norm_t(x: torch.Tensor) -> torch.Tensor:
    """Per-sample discrete L2([0,1]) norm over channels and grid."""
    return torch.sqrt(torch.sum(x * x, dim=(1, 2)) / x.shape[-1])
