"""UNO1 checkpoint files.

Layout (little-endian)::

    b"UNO1"
    u32  header length L
    L bytes of UTF-8 JSON: {"arch": ArchConfig fields, "meta": free-form dict}
    every parameter in declaration order as f64 (complex kernels as re, im pairs)
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from ..errors import CheckpointArchMismatch, CheckpointFormatError
from .spectral import DTYPE
from .uno import ArchConfig, UnoModel

MAGIC = b"UNO1"


def save_model(path, model: UnoModel, meta: dict | None = None) -> None:
    header = json.dumps({"arch": model.config.to_dict(), "meta": meta or {}}, sort_keys=True).encode()
    body = [p.detach().numpy().astype("<f8").ravel() for p in model.parameters()]
    payload = np.concatenate(body).tobytes() if body else b""
    Path(path).write_bytes(MAGIC + struct.pack("<I", len(header)) + header + payload)


def read_checkpoint(path) -> tuple[UnoModel, dict]:
    """Load ``(model, meta)``; raises CheckpointFormatError on any structural defect."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < 8:
        raise CheckpointFormatError(f"{path}: truncated header")
    (hlen,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + hlen:
        raise CheckpointFormatError(f"{path}: truncated config block")
    try:
        header = json.loads(raw[8 : 8 + hlen].decode())
        config = ArchConfig.from_dict(header["arch"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointFormatError(f"{path}: unreadable config block ({exc})") from exc
    model = UnoModel(config)
    params = list(model.parameters())
    expected = sum(p.numel() for p in params) * 8
    data = raw[8 + hlen :]
    if len(data) != expected:
        raise CheckpointFormatError(f"{path}: expected {expected} parameter bytes, found {len(data)}")
    flat = np.frombuffer(data, dtype="<f8")
    offset = 0
    with torch.no_grad():
        for p in params:
            k = p.numel()
            p.copy_(torch.tensor(flat[offset : offset + k].reshape(p.shape), dtype=DTYPE))
            offset += k
    return model, header.get("meta", {})


def load_model(path, expect: dict | None = None) -> tuple[UnoModel, dict]:
    """Like :func:`read_checkpoint` but checks ``meta`` entries against ``expect``."""
    model, meta = read_checkpoint(path)
    for key, value in (expect or {}).items():
        if meta.get(key) != value:
            raise CheckpointArchMismatch(f"{path}: expected {key}={value!r}, found {meta.get(key)!r}")
    return model, meta
