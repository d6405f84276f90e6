"""The TIME layer: arrange ``T* x N^2`` ordered frames into ``T*`` grid frames.

Two arrangements are supported. With ``Spatial`` the adjusted sequence is cut
into ``N^2`` consecutive segments of ``T*`` frames; grid cell ``k`` plays
segment ``k`` and output frame ``j`` shows the ``j``-th frame of every
segment. With ``Temporal`` the sequence is cut into ``T*`` blocks of ``N^2``
frames and output frame ``j`` is block ``j`` laid out row-major.

All indices are 0-based. In closed form, the adjusted-input frame shown in
cell ``k`` (row-major) of output frame ``j`` is::

    spatial:   src(j, k) = k * T* + j
    temporal:  src(j, k) = j * N^2 + k
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import as_video, parallel_map, resize_video, thread_count


class Arrangement(str, enum.Enum):
    SPATIAL = "spatial"
    TEMPORAL = "temporal"


@dataclass(frozen=True)
class AugmentSpec:
    """One geometric transform applied identically to every frame of a sequence.

    Applied in the order scale -> crop -> rotate -> flip. ``crop`` is
    ``(top, left, height, width)`` in pixels of the (scaled) frame and
    ``rotation_quarter_turns`` counts clockwise quarter turns.
    """

    horizontal_flip: bool = False
    crop: tuple[int, int, int, int] | None = None
    rotation_quarter_turns: int = 0
    scale: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.rotation_quarter_turns not in (0, 1, 2, 3):
            raise ValueError(f"rotation_quarter_turns must be 0..3, got {self.rotation_quarter_turns}")
        if self.scale is not None and not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.crop is not None:
            if len(self.crop) != 4:
                raise ValueError(f"crop must be (top, left, height, width), got {self.crop}")
            top, left, h, w = self.crop
            if top < 0 or left < 0 or h < 1 or w < 1:
                raise ValueError(f"invalid crop rectangle {self.crop}")

    @property
    def is_identity(self) -> bool:
        return (not self.horizontal_flip and self.crop is None
                and self.rotation_quarter_turns == 0 and self.scale is None)

    @classmethod
    def sample(cls, seed: int, frame_hw: tuple[int, int], *, flip: bool = False,
               rotate: bool = False, crop_hw: tuple[int, int] | None = None,
               scale_range: tuple[float, float] | None = None) -> "AugmentSpec":
        """Draw concrete augmentation parameters for one sequence from ``seed``.

        ``flip`` makes the flip a fair coin, ``rotate`` draws 0..3 quarter
        turns, ``crop_hw`` places a crop of that size uniformly, and
        ``scale_range`` draws a uniform scale factor.
        """
        rng = np.random.default_rng(seed)
        h, w = frame_hw
        scale = None
        if scale_range is not None:
            scale = float(rng.uniform(*scale_range))
            h, w = _scaled_size(h, w, scale)
        crop = None
        if crop_hw is not None:
            ch, cw = crop_hw
            if ch > h or cw > w:
                raise ValueError(f"crop {ch}x{cw} does not fit in a {h}x{w} frame")
            crop = (int(rng.integers(0, h - ch + 1)), int(rng.integers(0, w - cw + 1)), ch, cw)
        turns = int(rng.integers(0, 4)) if rotate else 0
        do_flip = bool(rng.integers(0, 2)) if flip else False
        return cls(horizontal_flip=do_flip, crop=crop, rotation_quarter_turns=turns,
                   scale=scale, seed=seed)


@dataclass(frozen=True)
class TimeConfig:
    """Parameters of the TIME layer.

    ``n`` is the grid side (the spatial-temporal balance parameter),
    ``t_star`` the number of output frames and ``out_h`` x ``out_w`` the
    output resolution.
    """

    n: int = 2
    t_star: int = 16
    out_h: int = 224
    out_w: int = 224
    arrangement: Arrangement = Arrangement.SPATIAL
    augmentation: AugmentSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "arrangement", Arrangement(self.arrangement))
        if self.n < 1 or self.t_star < 1:
            raise ValueError(f"n and t_star must be >= 1, got n={self.n}, t_star={self.t_star}")
        if self.out_h < self.n or self.out_w < self.n:
            raise ValueError(
                f"output {self.out_h}x{self.out_w} too small for a {self.n}x{self.n} grid")

    @property
    def required_length(self) -> int:
        return self.t_star * self.n * self.n

    @property
    def cell_size(self) -> tuple[int, int]:
        return self.out_h // self.n, self.out_w // self.n


@dataclass(frozen=True)
class IndexMap:
    """``src[j, k]``: adjusted-input frame shown in cell ``k`` of output frame ``j``."""

    n: int
    t_star: int
    src: np.ndarray = field(repr=False)

    def inverse(self) -> np.ndarray:
        """``(frame, cell)`` pair for every adjusted-input index, shape ``(T* N^2, 2)``."""
        out = np.empty((self.src.size, 2), dtype=np.intp)
        j, k = np.meshgrid(np.arange(self.t_star), np.arange(self.n * self.n), indexing="ij")
        out[self.src.ravel(), 0] = j.ravel()
        out[self.src.ravel(), 1] = k.ravel()
        return out


def sample_indices(total: int, required: int) -> np.ndarray:
    """Nearest-lower uniform resampling: output ``k`` takes source ``floor(k * total / required)``."""
    if total < 1 or required < 1:
        raise ValueError(f"need total >= 1 and required >= 1, got {total}, {required}")
    return (np.arange(required, dtype=np.int64) * total) // required


def adjust_length(video, required: int) -> np.ndarray:
    """Repeat or subsample ``video`` to exactly ``required`` frames, keeping order."""
    video = as_video(video, check_range=False)
    return video[sample_indices(len(video), required)]


def build_index_map(config: TimeConfig) -> IndexMap:
    n2, t_star = config.n * config.n, config.t_star
    j = np.arange(t_star)[:, None]
    k = np.arange(n2)[None, :]
    if config.arrangement is Arrangement.SPATIAL:
        src = k * t_star + j
    else:
        src = j * n2 + k
    return IndexMap(config.n, t_star, src.astype(np.intp))


def _scaled_size(h: int, w: int, scale: float) -> tuple[int, int]:
    return max(1, int(round(h * scale))), max(1, int(round(w * scale)))


def apply_augment(video, spec: AugmentSpec) -> np.ndarray:
    video = as_video(video, check_range=False)
    if spec.is_identity:
        return video.copy()
    out = video
    if spec.scale is not None:
        h, w = _scaled_size(video.shape[1], video.shape[2], spec.scale)
        out = resize_video(out, h, w)
    if spec.crop is not None:
        top, left, ch, cw = spec.crop
        h, w = out.shape[1:3]
        if top + ch > h or left + cw > w:
            raise ValueError(f"crop {spec.crop} lies outside the {h}x{w} frame")
        out = out[:, top:top + ch, left:left + cw]
    if spec.rotation_quarter_turns:
        # clockwise: pixel (r, c) -> (c, H - 1 - r)
        out = np.rot90(out, k=-spec.rotation_quarter_turns, axes=(1, 2))
    if spec.horizontal_flip:
        out = out[:, :, ::-1]
    return np.ascontiguousarray(out)


def _assemble(cells: np.ndarray, index_map: IndexMap) -> np.ndarray:
    # cells: (T* N^2, ch, cw, C) -> (T*, N ch, N cw, C)
    n = index_map.n
    _, ch, cw, c = cells.shape
    grid = cells[index_map.src]                       # (T*, N^2, ch, cw, C)
    grid = grid.reshape(index_map.t_star, n, n, ch, cw, c)
    grid = grid.transpose(0, 1, 3, 2, 4, 5)           # (T*, row, ch, col, cw, C)
    return np.ascontiguousarray(grid.reshape(index_map.t_star, n * ch, n * cw, c))


def time_transform(video, config: TimeConfig, threads: int | None = None) -> np.ndarray:
    """Run the full TIME layer and return a ``(T*, H*, W*, C)`` video.

    Pipeline: augmentation, length adjustment to ``T* N^2`` frames, resize to
    the cell size ``(H* // N, W* // N)``, grid assembly, then a final resize
    to exactly ``H* x W*`` when ``N`` does not divide the output size.
    """
    video = as_video(video)
    if config.augmentation is not None:
        video = apply_augment(video, config.augmentation)
    frames = adjust_length(video, config.required_length)
    cell_h, cell_w = config.cell_size
    cells = resize_video(frames, cell_h, cell_w, threads=threads)
    grid = _assemble(cells, build_index_map(config))
    if grid.shape[1:3] != (config.out_h, config.out_w):
        grid = resize_video(grid, config.out_h, config.out_w, threads=threads)
    return grid


def extract_cells(video, config: TimeConfig) -> np.ndarray:
    """Invert the grid layout: return the ``T* N^2`` cell images in adjusted-input order.

    Only exact mode is supported, so ``N`` must divide both output dimensions.
    """
    video = as_video(video, check_range=False)
    t, h, w, c = video.shape
    n = config.n
    if t != config.t_star:
        raise ValueError(f"expected {config.t_star} frames, got {t}")
    if h % n or w % n:
        raise ValueError(f"frame size {h}x{w} is not divisible by n={n}")
    ch, cw = h // n, w // n
    cells = video.reshape(t, n, ch, n, cw, c).transpose(0, 1, 3, 2, 4, 5)
    cells = cells.reshape(t, n * n, ch, cw, c)
    out = np.empty((t * n * n, ch, cw, c), dtype=video.dtype)
    out[build_index_map(config).src] = cells
    return out


def transform_many(videos, config: TimeConfig, threads: int | None = None) -> list[np.ndarray]:
    """``time_transform`` over several videos, parallel across videos, order preserved."""
    workers = thread_count(threads)
    return parallel_map(lambda v: time_transform(v, config, threads=1), list(videos), threads=workers)


__all__ = [
    "Arrangement", "AugmentSpec", "TimeConfig", "IndexMap", "sample_indices", "adjust_length",
    "build_index_map", "apply_augment", "time_transform", "extract_cells", "transform_many",
]
