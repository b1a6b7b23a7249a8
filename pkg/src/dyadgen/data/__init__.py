"""Motion containers, file formats, skeletons and the synthetic dyadic task."""
from .dataset import (
    NormStats,
    denormalize,
    fit_norm_stats,
    load_corpus,
    normalize,
    pairs_to_arrays,
    save_corpus,
    split,
    swap_augment,
)
from .formats import (
    read_any,
    read_csv_motion,
    read_motion,
    read_pair,
    write_csv_motion,
    write_motion,
    write_pair,
)
from .motion import DyadicPair, MotionSequence, from_grid_function, to_grid_function
from .skeleton import PRESETS, SkeletonSpec, get_preset, read_skeleton, write_skeleton
from .synth import delayed_mirror, synth_coupled
