"""Frame-directory video I/O and the NTA1 named-tensor archive.

NTA1 layout (all integers little-endian)::

    b"NTA1" | u64 manifest length | UTF-8 JSON manifest | zero padding | payload

The manifest is a JSON list of ``{"name", "dtype", "shape", "offset"}``
objects, ``dtype`` one of ``"f32"`` / ``"u8"``. The payload starts at the
first multiple of 64 at or after the end of the manifest; tensor offsets are
relative to the payload start and 64-byte aligned. The writer packs tensors
in manifest order, zero-padding between them, and the file ends right after
the last tensor.
"""
from __future__ import annotations

import json
import re
import struct
from pathlib import Path
from typing import Mapping

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import as_video

MAGIC = b"NTA1"
ALIGN = 64
DTYPES = {"f32": np.dtype("<f4"), "u8": np.dtype("u1")}
IMAGE_EXTENSIONS = (".png", ".pgm", ".ppm")
FORMATS = {"png": ".png", "ppm": ".ppm", "pgm": ".pgm"}


class FrameError(ValueError):
    """A frame directory could not be turned into a video."""


class ArchiveError(ValueError):
    """Base class for NTA1 decoding failures."""


class BadMagicError(ArchiveError):
    pass


class ManifestError(ArchiveError):
    pass


class TruncatedArchiveError(ArchiveError):
    pass


class OverlappingExtentsError(ArchiveError):
    pass


# -- frame directories --------------------------------------------------------

def natural_key(name: str):
    return [int(tok) if tok.isdigit() else tok.lower() for tok in re.split(r"(\d+)", name)]


def _load_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in ("1", "P"):
                img = img.convert("L" if mode == "1" else "RGB")
                mode = img.mode
            if mode not in ("L", "RGB"):
                raise FrameError(f"{path}: unsupported image mode {mode!r} (need 8-bit gray or RGB)")
            arr = np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise FrameError(f"{path}: cannot decode image ({exc})") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def read_video_dir(path, pattern: str | None = None) -> np.ndarray:
    """Load a directory of frames as a ``(T, H, W, C)`` video in natural filename order.

    ``pattern`` is a glob; by default every ``.png``, ``.pgm`` and ``.ppm``
    file is taken.
    """
    path = Path(path)
    if not path.is_dir():
        raise FrameError(f"{path}: not a directory")
    if pattern is None:
        files = [p for p in path.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS]
    else:
        files = list(path.glob(pattern))
    files = sorted((p for p in files if p.is_file()), key=lambda p: natural_key(p.name))
    if not files:
        raise FrameError(f"{path}: no frames found")
    frames = []
    shape = None
    for f in files:
        arr = _load_image(f)
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise FrameError(f"{f}: frame shape {arr.shape} differs from {shape}")
        frames.append(arr)
    return np.stack(frames).astype(np.float32) / np.float32(255.0)


def quantize(video) -> np.ndarray:
    """Map ``[0, 1]`` floats to bytes by ``round(v * 255)``, clamped."""
    video = np.asarray(video, dtype=np.float64)
    return np.clip(np.floor(video * 255.0 + 0.5), 0, 255).astype(np.uint8)


def write_video_dir(video, path, format: str = "png") -> int:
    """Write frames as ``frame_00000.<ext>`` ...; returns the number written."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; choose from {sorted(FORMATS)}")
    video = as_video(video, check_range=False)
    channels = video.shape[-1]
    if channels not in (1, 3):
        raise ValueError(f"cannot write {channels}-channel frames")
    if format == "pgm" and channels != 1:
        raise ValueError("pgm output requires single-channel frames")
    if format == "ppm" and channels != 3:
        raise ValueError("ppm output requires 3-channel frames")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    data = quantize(video)
    ext = FORMATS[format]
    for i, frame in enumerate(data):
        img = Image.fromarray(frame[:, :, 0] if channels == 1 else frame, "L" if channels == 1 else "RGB")
        img.save(path / f"frame_{i:05d}{ext}")
    return len(data)


# -- NTA1 archives --------------------------------------------------------------

def _align(n: int) -> int:
    return (n + ALIGN - 1) // ALIGN * ALIGN


def _dtype_name(arr: np.ndarray) -> str:
    if arr.dtype == np.uint8:
        return "u8"
    if arr.dtype == np.float32:
        return "f32"
    raise TypeError(f"unsupported tensor dtype {arr.dtype}; NTA1 stores f32 and u8")


def encode_archive(tensors: Mapping[str, np.ndarray]) -> bytes:
    manifest = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        if not isinstance(name, str) or not name:
            raise ValueError(f"tensor names must be nonempty strings, got {name!r}")
        arr = np.asarray(arr)
        dtype = _dtype_name(arr)
        raw = np.ascontiguousarray(arr, dtype=DTYPES[dtype]).tobytes()
        offset = _align(offset)
        manifest.append({"name": name, "dtype": dtype, "shape": list(arr.shape), "offset": offset})
        blobs.append((offset, raw))
        offset += len(raw)
    head = json.dumps(manifest, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    prefix = MAGIC + struct.pack("<Q", len(head)) + head
    if not blobs:
        return prefix
    payload = bytearray(offset)
    for off, raw in blobs:
        payload[off:off + len(raw)] = raw
    return prefix + b"\0" * (_align(len(prefix)) - len(prefix)) + bytes(payload)


def decode_archive(data: bytes) -> dict[str, np.ndarray]:
    """Parse NTA1 bytes; never reads outside the declared extents."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError("not an NTA1 archive (bad magic)")
    if len(data) < 12:
        raise TruncatedArchiveError("archive truncated inside the header")
    (mlen,) = struct.unpack_from("<Q", data, 4)
    if 12 + mlen > len(data):
        raise TruncatedArchiveError(f"manifest declares {mlen} bytes but the file ends early")
    try:
        manifest = json.loads(bytes(data[12:12 + mlen]).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ManifestError(f"manifest is not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(manifest, list):
        raise ManifestError("manifest must be a JSON list")
    base = _align(12 + mlen)
    extents = []
    names = set()
    for i, entry in enumerate(manifest):
        if not isinstance(entry, dict):
            raise ManifestError(f"manifest entry {i} is not an object")
        try:
            name, dtype, shape, offset = entry["name"], entry["dtype"], entry["shape"], entry["offset"]
        except KeyError as exc:
            raise ManifestError(f"manifest entry {i} lacks {exc}") from None
        if not isinstance(name, str) or not name:
            raise ManifestError(f"manifest entry {i} has an invalid name")
        if name in names:
            raise ManifestError(f"duplicate tensor name {name!r}")
        names.add(name)
        if dtype not in DTYPES:
            raise ManifestError(f"{name}: unknown dtype {dtype!r}")
        if (not isinstance(shape, list)
                or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 0 for d in shape)):
            raise ManifestError(f"{name}: invalid shape {shape!r}")
        if not isinstance(offset, int) or isinstance(offset, bool) or offset < 0 or offset % ALIGN:
            raise ManifestError(f"{name}: offset {offset!r} is not a 64-byte aligned integer")
        nbytes = int(np.prod(shape, dtype=object)) * DTYPES[dtype].itemsize
        extents.append((offset, offset + nbytes, name, dtype, shape))
    ordered = sorted((e for e in extents if e[1] > e[0]), key=lambda e: e[0])
    for prev, cur in zip(ordered, ordered[1:]):
        if cur[0] < prev[1]:
            raise OverlappingExtentsError(f"tensors {prev[2]!r} and {cur[2]!r} overlap")
    out = {}
    for start, end, name, dtype, shape in extents:
        if base + end > len(data):
            raise TruncatedArchiveError(f"{name}: payload extends past the end of the file")
        raw = bytes(data[base + start:base + end])
        out[name] = np.frombuffer(raw, dtype=DTYPES[dtype]).reshape(shape).copy()
    return out


def write_archive(tensors: Mapping[str, np.ndarray], path) -> None:
    Path(path).write_bytes(encode_archive(tensors))


def read_archive(path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        return decode_archive(path.read_bytes())
    except ArchiveError as exc:
        raise type(exc)(f"{path}: {exc}") from None
