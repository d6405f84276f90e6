"""Tube masks: one random set of spatial patches, hidden at every time step.

Patch selection uses a SplitMix64 stream so that a ``(grid, ratio, seed)``
triple yields the same mask in any language:

* state advances by ``0x9E3779B97F4A7C15`` per draw; output mixing uses
  ``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB`` with shifts 30, 27, 31;
* a bounded draw in ``[0, n)`` rejects outputs ``>= 2**64 - (2**64 % n)``
  and returns ``x % n``;
* the masked patches are the first ``m`` entries of a partial Fisher-Yates
  shuffle of the row-major patch indices ``0 .. R*C-1``, where step ``i``
  swaps position ``i`` with ``i + bounded(R*C - i)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import as_video

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Minimal SplitMix64 generator."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def bounded(self, n: int) -> int:
        if n < 1:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n


def masked_count(ratio: float, patches: int) -> int:
    """Round-half-up of ``ratio * patches``."""
    return min(patches, int(math.floor(ratio * patches + 0.5)))


@dataclass(frozen=True)
class TubeMask:
    patch_rows: int
    patch_cols: int
    t_steps: int
    ratio: float
    masked: np.ndarray  # (patch_rows, patch_cols) bool, shared by every time step

    def at(self, t: int) -> np.ndarray:
        if not 0 <= t < self.t_steps:
            raise IndexError(f"time step {t} outside [0, {self.t_steps})")
        return self.masked

    def full(self) -> np.ndarray:
        """The mask broadcast to ``(t_steps, patch_rows, patch_cols)``."""
        return np.broadcast_to(self.masked, (self.t_steps, *self.masked.shape))

    @property
    def fraction(self) -> float:
        return float(self.masked.mean())

    def positions(self) -> list[tuple[int, int]]:
        return [(int(r), int(c)) for r, c in zip(*np.nonzero(self.masked))]


def generate_tube_mask(patch_rows: int, patch_cols: int, t_steps: int, ratio: float,
                       seed: int) -> TubeMask:
    if patch_rows < 1 or patch_cols < 1 or t_steps < 1:
        raise ValueError("mask grid and time steps must be nonempty")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
    total = patch_rows * patch_cols
    m = masked_count(ratio, total)
    rng = SplitMix64(seed)
    order = list(range(total))
    for i in range(m):
        j = i + rng.bounded(total - i)
        order[i], order[j] = order[j], order[i]
    flat = np.zeros(total, dtype=bool)
    flat[order[:m]] = True
    return TubeMask(patch_rows, patch_cols, t_steps, float(ratio), flat.reshape(patch_rows, patch_cols))


def apply_mask(video, mask: TubeMask, fill: float = 0.0) -> np.ndarray:
    """Replace every pixel of each masked patch with ``fill``."""
    video = as_video(video, check_range=False)
    t, h, w, _ = video.shape
    if t != mask.t_steps:
        raise ValueError(f"video has {t} frames but the mask covers {mask.t_steps}")
    if h % mask.patch_rows or w % mask.patch_cols:
        raise ValueError(
            f"frame size {h}x{w} is not divisible into a {mask.patch_rows}x{mask.patch_cols} patch grid")
    ph, pw = h // mask.patch_rows, w // mask.patch_cols
    pixel_mask = np.repeat(np.repeat(mask.masked, ph, axis=0), pw, axis=1)
    out = video.copy()
    out[:, pixel_mask] = fill
    return out


def mask_to_json(mask: TubeMask, seed: int | None = None) -> str:
    doc = {
        "patch_rows": mask.patch_rows,
        "patch_cols": mask.patch_cols,
        "t_steps": mask.t_steps,
        "ratio": mask.ratio,
        "masked": [list(p) for p in mask.positions()],
    }
    if seed is not None:
        doc["seed"] = seed
    return json.dumps(doc)


def mask_from_json(text: str) -> TubeMask:
    doc = json.loads(text)
    masked = np.zeros((doc["patch_rows"], doc["patch_cols"]), dtype=bool)
    for r, c in doc["masked"]:
        masked[r, c] = True
    return TubeMask(doc["patch_rows"], doc["patch_cols"], doc["t_steps"], doc["ratio"], masked)


def encode_pbm(bits: np.ndarray) -> bytes:
    """Binary (P4) portable bitmap; 1 = masked (black)."""
    rows, cols = bits.shape
    packed = np.packbits(bits.astype(np.uint8), axis=1)
    return f"P4\n{cols} {rows}\n".encode("ascii") + packed.tobytes()


def write_mask_pbm(mask: TubeMask, directory, prefix: str = "mask") -> list[Path]:
    """Write one PBM per time step as ``<prefix>_t00000.pbm`` ..."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = encode_pbm(mask.masked)
    paths = []
    for t in range(mask.t_steps):
        p = directory / f"{prefix}_t{t:05d}.pbm"
        p.write_bytes(payload)
        paths.append(p)
    return paths
