"""Grid-based temporal frame rearrangement (the TIME layer) and its diagnostics."""

__version__ = "0.1.0"

from .core import resize_bilinear, resize_video, to_grayscale
from .diagnostics import SimilarityReport, compare_checkpoints, cosine_similarity, sweep
from .io import read_archive, read_video_dir, write_archive, write_video_dir
from .masking import TubeMask, apply_mask, generate_tube_mask
from .probe import ProbeConfig, ProbeModel, evaluate, featurize, train
from .synth import Direction, MotionSample, generate_direction_dataset
from .transform import (Arrangement, AugmentSpec, IndexMap, TimeConfig, adjust_length,
                        apply_augment, build_index_map, extract_cells, time_transform)

__all__ = [
    "resize_bilinear", "resize_video", "to_grayscale",
    "SimilarityReport", "compare_checkpoints", "cosine_similarity", "sweep",
    "read_archive", "read_video_dir", "write_archive", "write_video_dir",
    "TubeMask", "apply_mask", "generate_tube_mask",
    "ProbeConfig", "ProbeModel", "evaluate", "featurize", "train",
    "Direction", "MotionSample", "generate_direction_dataset",
    "Arrangement", "AugmentSpec", "IndexMap", "TimeConfig", "adjust_length",
    "apply_augment", "build_index_map", "extract_cells", "time_transform",
]
