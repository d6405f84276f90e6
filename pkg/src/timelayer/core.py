"""Pixel containers, bilinear resampling and small shared helpers.

A *frame* is a float32 array of shape ``(H, W, C)`` and a *video* is a
float32 array of shape ``(T, H, W, C)``; pixel values live in ``[0, 1]``.
8-bit values only appear at the file boundary (see :mod:`timelayer.io`).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

DTYPE = np.float32

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def as_frame(frame, *, check_range: bool = True) -> np.ndarray:
    """Coerce ``frame`` to a float32 ``(H, W, C)`` array.

    2-D input is treated as single-channel.
    """
    arr = np.asarray(frame)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"frame must have shape (H, W) or (H, W, C), got {arr.shape}")
    if min(arr.shape) < 1:
        raise ValueError(f"frame has an empty dimension: {arr.shape}")
    arr = arr.astype(DTYPE, copy=False)
    if check_range:
        _check_unit_range(arr)
    return arr


def as_video(video, *, check_range: bool = True) -> np.ndarray:
    """Coerce ``video`` to a float32 ``(T, H, W, C)`` array.

    A list of equally shaped frames is stacked; 3-D input is read as
    ``(T, H, W)`` with one channel.
    """
    if isinstance(video, (list, tuple)):
        if not video:
            raise ValueError("video has no frames")
        frames = [as_frame(f, check_range=False) for f in video]
        shape = frames[0].shape
        for i, f in enumerate(frames):
            if f.shape != shape:
                raise ValueError(f"frame {i} has shape {f.shape}, expected {shape}")
        arr = np.stack(frames)
    else:
        arr = np.asarray(video)
        if arr.ndim == 3:
            arr = arr[..., None]
    if arr.ndim != 4:
        raise ValueError(f"video must have shape (T, H, W, C), got {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError("video has no frames")
    if min(arr.shape[1:]) < 1:
        raise ValueError(f"video frames have an empty dimension: {arr.shape}")
    arr = arr.astype(DTYPE, copy=False)
    if check_range:
        _check_unit_range(arr)
    return arr


def _check_unit_range(arr: np.ndarray) -> None:
    lo, hi = float(arr.min()), float(arr.max())
    if not (lo >= 0.0 and hi <= 1.0):
        raise ValueError(f"pixel values must lie in [0, 1], got range [{lo}, {hi}]")


def _axis_taps(in_size: int, out_size: int):
    """Source indices and weights for one axis, half-pixel (align_corners=False)."""
    scale = in_size / out_size
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, in_size - 1)
    frac = (src - lo).astype(DTYPE)
    return lo, hi, frac


def _resize_array(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    # arr: (..., H, W, C); interpolates the two spatial axes separably
    in_h, in_w = arr.shape[-3], arr.shape[-2]
    if (in_h, in_w) == (out_h, out_w):
        return arr.copy()
    out = arr
    if in_h != out_h:
        lo, hi, frac = _axis_taps(in_h, out_h)
        a = out[..., lo, :, :]
        b = out[..., hi, :, :]
        out = a + (b - a) * frac[:, None, None]
    if in_w != out_w:
        lo, hi, frac = _axis_taps(in_w, out_w)
        a = out[..., :, lo, :]
        b = out[..., :, hi, :]
        out = a + (b - a) * frac[:, None]
    np.clip(out, 0.0, 1.0, out=out)
    return out.astype(DTYPE, copy=False)


def resize_bilinear(frame, out_h: int, out_w: int) -> np.ndarray:
    """Resize one frame with bilinear interpolation.

    Sample-centre convention: the source coordinate of output pixel ``d`` is
    ``(d + 0.5) * in / out - 0.5``, clamped to the valid range. Equal sizes
    return an exact copy.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    return _resize_array(as_frame(frame, check_range=False), int(out_h), int(out_w))


def resize_video(video, out_h: int, out_w: int, threads: int | None = None) -> np.ndarray:
    """Resize every frame of ``video``; chunked over threads, result independent of ``threads``."""
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    video = as_video(video, check_range=False)
    out_h, out_w = int(out_h), int(out_w)
    workers = thread_count(threads)
    if workers <= 1 or len(video) < 2 * workers:
        return _resize_array(video, out_h, out_w)
    chunks = np.array_split(np.arange(len(video)), workers)
    parts = parallel_map(lambda idx: _resize_array(video[idx[0]:idx[-1] + 1], out_h, out_w),
                         chunks, threads=workers)
    return np.concatenate(parts)


def to_grayscale(frame) -> np.ndarray:
    """BT.601 luma of an RGB frame; single-channel frames pass through unchanged."""
    frame = as_frame(frame, check_range=False)
    channels = frame.shape[-1]
    if channels == 1:
        return frame
    if channels != 3:
        raise ValueError(f"unsupported channel count {channels}; expected 1 or 3")
    r, g, b = LUMA_WEIGHTS
    luma = r * frame[..., 0] + g * frame[..., 1] + b * frame[..., 2]
    return np.clip(luma, 0.0, 1.0)[..., None].astype(DTYPE)


def thread_count(threads: int | None = None) -> int:
    """Resolve a worker count; ``None`` reads ``TIME_THREADS`` (0 or unset = all cores)."""
    if threads is None:
        try:
            threads = int(os.environ.get("TIME_THREADS", "0"))
        except ValueError:
            threads = 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def parallel_map(fn: Callable, items: Sequence, threads: int | None = None) -> list:
    """``[fn(x) for x in items]`` on a thread pool, results in input order."""
    workers = min(thread_count(threads), max(len(items), 1))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
