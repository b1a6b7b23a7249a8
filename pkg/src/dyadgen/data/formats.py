"""PMO1/PMO2 binary motion files and the CSV exchange format.

PMO1: ``b"PMO1"``, u32 J, u32 T, f32 dt, then ``T*J*3`` f32 values ordered
(frame, joint, xyz). PMO2 shares the header and stores actor A's block followed
by actor B's. Everything is little-endian. Readers reject any file whose size
disagrees with its header.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import BadHeader, BadMagic, NonFiniteValue, TrailingData, TruncatedFile
from .motion import DyadicPair, MotionSequence

__all__ = [
    "decode",
    "encode_motion",
    "encode_pair",
    "read_any",
    "read_csv_motion",
    "read_motion",
    "read_pair",
    "write_csv_motion",
    "write_motion",
    "write_pair",
]

_HEADER = struct.Struct("<4sIIf")


def _header(m: MotionSequence, magic: bytes) -> bytes:
    return _HEADER.pack(magic, m.joints, m.frames, m.dt)


def _block(m: MotionSequence) -> bytes:
    if not np.all(np.isfinite(m.positions)):
        raise NonFiniteValue("motion contains non-finite values")
    with np.errstate(over="ignore"):
        vals = m.positions.astype("<f4")
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("motion overflows float32")
    return vals.tobytes()


def encode_motion(m: MotionSequence) -> bytes:
    return _header(m, b"PMO1") + _block(m)


def encode_pair(p: DyadicPair) -> bytes:
    return _header(p.actor_a, b"PMO2") + _block(p.actor_a) + _block(p.actor_b)


def decode(raw: bytes) -> Union[MotionSequence, DyadicPair]:
    if len(raw) < 4:
        raise TruncatedFile(f"{len(raw)} bytes is shorter than the magic")
    magic = raw[:4]
    if magic not in (b"PMO1", b"PMO2"):
        raise BadMagic(f"unknown magic {magic!r}")
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"{len(raw)} bytes is shorter than the {_HEADER.size}-byte header")
    _, joints, frames, dt = _HEADER.unpack_from(raw)
    if joints < 1 or frames < 2:
        raise BadHeader(f"invalid dimensions J={joints}, T={frames}")
    if not (np.isfinite(dt) and dt > 0):
        raise BadHeader(f"invalid dt {dt}")
    actors = 1 if magic == b"PMO1" else 2
    block = frames * joints * 3 * 4
    expected = _HEADER.size + actors * block
    if len(raw) < expected:
        raise TruncatedFile(f"header promises {expected} bytes, file has {len(raw)}")
    if len(raw) > expected:
        raise TrailingData(f"header promises {expected} bytes, file has {len(raw)}")
    vals = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).astype(np.float64)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("file contains non-finite values")
    vals = vals.reshape(actors, frames, joints, 3)
    motions = [MotionSequence(v, dt) for v in vals]
    return motions[0] if actors == 1 else DyadicPair(*motions)


def write_motion(path, m: MotionSequence) -> None:
    Path(path).write_bytes(encode_motion(m))


def write_pair(path, p: DyadicPair) -> None:
    Path(path).write_bytes(encode_pair(p))


def read_any(path) -> Union[MotionSequence, DyadicPair]:
    return decode(Path(path).read_bytes())


def read_motion(path) -> MotionSequence:
    out = read_any(path)
    if not isinstance(out, MotionSequence):
        raise BadMagic(f"{path} is a PMO2 pair, expected a single PMO1 motion")
    return out


def read_pair(path) -> DyadicPair:
    out = read_any(path)
    if not isinstance(out, DyadicPair):
        raise BadMagic(f"{path} is a PMO1 motion, expected a PMO2 pair")
    return out


def write_csv_motion(path, m: MotionSequence) -> None:
    """One row per frame, columns ``x1, y1, z1, ..., xJ, yJ, zJ`` under a header line."""
    cols = [f"{ax}{j + 1}" for j in range(m.joints) for ax in "xyz"]
    np.savetxt(path, m.flat(), delimiter=",", header=",".join(cols), comments="", fmt="%.9g")


def read_csv_motion(path, dt: float) -> MotionSequence:
    """Ingest a headerless or headed CSV with T rows and 3J position columns."""
    with open(path) as fh:
        first = fh.readline()
    skip = 0 if _is_numeric_row(first) else 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if data.shape[1] % 3:
        raise ValueError(f"{path}: {data.shape[1]} columns is not a multiple of 3")
    return MotionSequence(data.reshape(data.shape[0], -1, 3), dt)


def _is_numeric_row(line: str) -> bool:
    try:
        [float(x) for x in line.strip().split(",")]
    except ValueError:
        return False
    return True
