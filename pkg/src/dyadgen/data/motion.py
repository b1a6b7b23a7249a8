from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..grid import GridFunction

__all__ = ["DyadicPair", "MotionSequence", "from_grid_function", "to_grid_function"]


@dataclass(frozen=True)
class MotionSequence:
    """``frames x joints x 3`` joint positions sampled every ``dt`` seconds."""

    positions: np.ndarray
    dt: float

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64)
        if pos.ndim != 3 or pos.shape[2] != 3:
            raise ValueError(f"positions must be (T, J, 3), got {pos.shape}")
        if pos.shape[0] < 2 or pos.shape[1] < 1:
            raise ValueError(f"need T >= 2 and J >= 1, got T={pos.shape[0]}, J={pos.shape[1]}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def frames(self) -> int:
        return self.positions.shape[0]

    @property
    def joints(self) -> int:
        return self.positions.shape[1]

    @property
    def duration(self) -> float:
        return self.frames * self.dt

    def flat(self) -> np.ndarray:
        """``(T, 3J)`` in joint-major order ``x1, y1, z1, x2, ...``."""
        return self.positions.reshape(self.frames, 3 * self.joints)


@dataclass(frozen=True)
class DyadicPair:
    actor_a: MotionSequence
    actor_b: MotionSequence
    label: Optional[str] = None

    def __post_init__(self):
        a, b = self.actor_a, self.actor_b
        if a.frames != b.frames or a.joints != b.joints or a.dt != b.dt:
            raise ValueError(
                f"actors disagree: T {a.frames}/{b.frames}, J {a.joints}/{b.joints}, dt {a.dt}/{b.dt}"
            )

    def swapped(self) -> "DyadicPair":
        return DyadicPair(self.actor_b, self.actor_a, self.label)


def to_grid_function(m: MotionSequence) -> GridFunction:
    """Rescale time to [0, 1]; ``m.duration`` is what :func:`from_grid_function` needs back."""
    return GridFunction(m.flat())


def from_grid_function(f: GridFunction, duration: float) -> MotionSequence:
    if f.channels % 3:
        raise ValueError(f"channel count {f.channels} is not a multiple of 3")
    pos = f.values.reshape(f.resolution, f.channels // 3, 3)
    return MotionSequence(pos, duration / f.resolution)
