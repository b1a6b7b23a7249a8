"""Skeleton descriptions: bone list plus mirrored left/right bone pairs.

Preset files are flat ``key = value`` text::

    name = toy4
    joints = 4
    edges = 0-1, 0-2, 0-3
    mirror = 0-2:0-3
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..errors import BadJointIndex

__all__ = ["PRESETS", "SkeletonSpec", "get_preset", "read_skeleton", "write_skeleton"]

Bone = tuple[int, int]


@dataclass(frozen=True)
class SkeletonSpec:
    joints: int
    edges: tuple[Bone, ...]
    mirrored: tuple[tuple[Bone, Bone], ...] = ()
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))
        object.__setattr__(
            self, "mirrored", tuple((tuple(map(int, l)), tuple(map(int, r))) for l, r in self.mirrored)
        )
        bones = list(self.edges) + [b for pair in self.mirrored for b in pair]
        for a, b in bones:
            if not (0 <= a < self.joints and 0 <= b < self.joints):
                raise BadJointIndex(f"bone ({a}, {b}) outside 0..{self.joints - 1}")
            if a == b:
                raise BadJointIndex(f"self-edge at joint {a}")


def _spec(name, joints, edges, mirrored):
    return SkeletonSpec(joints, tuple(edges), tuple(mirrored), name)


# NTU Kinect layout with the hand tip and thumb joints (21-24) dropped
_NTU_EDGES = [
    (0, 1), (1, 20), (20, 2), (2, 3),
    (20, 4), (4, 5), (5, 6), (6, 7),
    (20, 8), (8, 9), (9, 10), (10, 11),
    (0, 12), (12, 13), (13, 14), (14, 15),
    (0, 16), (16, 17), (17, 18), (18, 19),
]
_NTU_MIRROR = [
    ((20, 4), (20, 8)), ((4, 5), (8, 9)), ((5, 6), (9, 10)), ((6, 7), (10, 11)),
    ((0, 12), (0, 16)), ((12, 13), (16, 17)), ((13, 14), (17, 18)), ((14, 15), (18, 19)),
]

# head, neck, R shoulder/elbow/wrist, L shoulder/elbow/wrist, pelvis, R hip/knee/ankle, L hip/knee/ankle
_DUET_EDGES = [
    (0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 6), (6, 7), (1, 8),
    (8, 9), (9, 10), (10, 11), (8, 12), (12, 13), (13, 14),
]
_DUET_MIRROR = [
    ((1, 5), (1, 2)), ((5, 6), (2, 3)), ((6, 7), (3, 4)),
    ((8, 12), (8, 9)), ((12, 13), (9, 10)), ((13, 14), (10, 11)),
]

PRESETS = {
    "toy4": _spec("toy4", 4, [(0, 1), (0, 2), (0, 3)], [((0, 2), (0, 3))]),
    "ntu21": _spec("ntu21", 21, _NTU_EDGES, _NTU_MIRROR),
    "duet15": _spec("duet15", 15, _DUET_EDGES, _DUET_MIRROR),
}


def get_preset(name: str) -> SkeletonSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown skeleton preset {name!r}; have {sorted(PRESETS)}") from None


def _bone(text: str) -> Bone:
    a, b = text.strip().split("-")
    return int(a), int(b)


def read_skeleton(path) -> SkeletonSpec:
    fields = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    edges = [_bone(e) for e in fields.get("edges", "").split(",") if e.strip()]
    mirrored = []
    for item in fields.get("mirror", "").split(","):
        if item.strip():
            left, right = item.split(":")
            mirrored.append((_bone(left), _bone(right)))
    return SkeletonSpec(int(fields["joints"]), tuple(edges), tuple(mirrored), fields.get("name", "custom"))


def write_skeleton(path, skel: SkeletonSpec) -> None:
    lines = [
        f"name = {skel.name}",
        f"joints = {skel.joints}",
        "edges = " + ", ".join(f"{a}-{b}" for a, b in skel.edges),
        "mirror = " + ", ".join(f"{l[0]}-{l[1]}:{r[0]}-{r[1]}" for l, r in skel.mirrored),
    ]
    Path(path).write_text("\n".join(lines) + "\n")
