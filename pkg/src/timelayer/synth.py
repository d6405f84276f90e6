"""Synthetic left/right motion clips for probing temporal information.

Each clip shows one bright square gliding horizontally over a black
background. Samples come in twins: a left-to-right clip and a right-to-left
clip with the same square size, row, speed and *starting position*. Frame 0
of the two twins is therefore pixel-identical, so nothing that only looks at
the first raw frame can beat chance, while the direction is plain to see once
several time steps share one image.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io import write_video_dir


class Direction(str, enum.Enum):
    LEFT_TO_RIGHT = "left_to_right"
    RIGHT_TO_LEFT = "right_to_left"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.LEFT_TO_RIGHT else -1


@dataclass(frozen=True)
class MotionParams:
    frame_size: int
    square: int
    speed: float      # px per frame, always positive
    start_x: float    # left edge of the square at t = 0
    row: int          # top edge of the square
    t_frames: int
    pair: int         # index shared by the two twins


@dataclass(frozen=True)
class MotionSample:
    video: np.ndarray  # (T, S, S, 1) float32
    label: Direction
    params: MotionParams

    def positions(self) -> np.ndarray:
        """Left edge of the square at every frame."""
        return track(self.params, self.label)


def track(params: MotionParams, label: Direction) -> np.ndarray:
    t = np.arange(params.t_frames, dtype=np.float64)
    return params.start_x + label.sign * params.speed * t


def render_square_track(frame_size: int, square: int, row: int, xs) -> np.ndarray:
    """Render a square whose left edge is at ``xs[t]`` in frame ``t``.

    Sub-pixel horizontal positions are drawn with exact area coverage, so
    edge columns take fractional intensities.
    """
    xs = np.asarray(xs, dtype=np.float64)
    cols = np.arange(frame_size, dtype=np.float64)
    left = np.maximum(cols[None, :], xs[:, None])
    right = np.minimum(cols[None, :] + 1.0, xs[:, None] + square)
    coverage = np.clip(right - left, 0.0, 1.0).astype(np.float32)      # (T, S)
    video = np.zeros((len(xs), frame_size, frame_size, 1), dtype=np.float32)
    video[:, row:row + square, :, 0] = coverage[:, None, :]
    return video


def _square_size(frame_size: int) -> int:
    return max(2, frame_size // 8)


def generate_direction_dataset(n_samples: int, frame_size: int = 64, t_frames: int = 32,
                               seed: int = 0) -> list[MotionSample]:
    """Build ``n_samples`` clips, alternating left-to-right and right-to-left twins.

    Speeds are drawn from ``[0.5, 1] * vmax`` with ``vmax`` the largest speed
    at which the square can travel ``t_frames - 1`` steps either way from its
    start without leaving the frame; the start is then uniform over the
    positions that keep both twins inside.
    """
    if frame_size < 16:
        raise ValueError(f"frame_size must be >= 16, got {frame_size}")
    if t_frames < 8:
        raise ValueError(f"t_frames must be >= 8, got {t_frames}")
    if n_samples < 0:
        raise ValueError("n_samples must be nonnegative")
    rng = np.random.default_rng(seed)
    square = _square_size(frame_size)
    span = t_frames - 1
    vmax = (frame_size - square) / (2 * span)
    samples = []
    for pair in range((n_samples + 1) // 2):
        speed = float(rng.uniform(0.5 * vmax, vmax))
        travel = speed * span
        start = float(rng.uniform(travel, frame_size - square - travel))
        row = int(rng.integers(0, frame_size - square + 1))
        params = MotionParams(frame_size, square, speed, start, row, t_frames, pair)
        for label in (Direction.LEFT_TO_RIGHT, Direction.RIGHT_TO_LEFT):
            if len(samples) == n_samples:
                break
            video = render_square_track(frame_size, square, row, track(params, label))
            samples.append(MotionSample(video, label, params))
    return samples


def write_dataset(samples: list[MotionSample], out_dir, format: str = "png") -> Path:
    """Write each clip to ``sample_00000/`` ... and a ``labels.csv`` beside them.

    ``labels.csv`` has columns ``filename,label,group``; ``group`` is the twin
    pair index, which lets train/test splits keep twins together.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels_path = out_dir / "labels.csv"
    with labels_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "label", "group"])
        for i, s in enumerate(samples):
            name = f"sample_{i:05d}"
            write_video_dir(s.video, out_dir / name, format=format)
            writer.writerow([name, s.label.value, s.params.pair])
    return labels_path
