"""Grayscale image handling: conversion, resizing and frame-sequence I/O.

Images are plain ``float64`` arrays of shape ``(height, width)`` holding
luminance in [0, 1]. Quantization to 8 bits happens only when reading or
writing files.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DimensionError, ImageIOError, SequenceError, ValidationError

MIN_SIDE = 8
IMAGE_SUFFIXES = (".pgm", ".png")

_LUMA = np.array([0.299, 0.587, 0.114])


def as_gray(img, min_side: int = 1) -> np.ndarray:
    """Validate ``img`` as a grayscale image and return it as float64."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D image, got shape {arr.shape}")
    if min(arr.shape) < min_side:
        raise DimensionError(
            f"image {arr.shape[1]}x{arr.shape[0]} is smaller than {min_side} pixels per side"
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError("image contains non-finite values")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValidationError("image values must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class FrameSequence:
    """Ordered frames of identical size, stacked as ``(T, H, W)``."""

    frames: np.ndarray
    frame_rate: float = 30.0

    def __post_init__(self):
        frames = self.frames
        if isinstance(frames, (list, tuple)):
            shapes = {np.shape(f) for f in frames}
            if len(shapes) > 1:
                raise SequenceError(f"frames differ in size: {sorted(shapes)}")
            frames = np.stack([as_gray(f) for f in frames]) if frames else np.zeros((0, 0, 0))
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 3:
            raise SequenceError(f"expected (T, H, W) frames, got shape {frames.shape}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    def __len__(self):
        return self.frames.shape[0]

    def __getitem__(self, index):
        return self.frames[index]

    @property
    def shape(self):
        return self.frames.shape[1:]

    def require_motion(self):
        if len(self) < 2:
            raise SequenceError("motion operations need at least two frames")


def to_grayscale(rgb) -> np.ndarray:
    """BT.601 luma of an 8-bit RGB image, scaled to [0, 1]."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[-1] != 3:
        raise DimensionError(f"expected an (H, W, 3) RGB image, got shape {arr.shape}")
    luma = arr @ _LUMA / 255.0
    return np.clip(luma, 0.0, 1.0)


def _source_coords(n_in, n_out):
    # half-pixel centres, clamped to the valid sample range
    x = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    x = np.clip(x, 0.0, n_in - 1)
    lo = np.floor(x).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, x - lo


def resize_bilinear(img, new_w: int, new_h: int, min_side: int = MIN_SIDE) -> np.ndarray:
    """Bilinear resize with half-pixel-centre sampling.

    ``min_side`` is the smallest accepted target side; the default matches the
    smallest grid the pyramid accepts.
    """
    arr = as_gray(img)
    if new_w < min_side or new_h < min_side:
        raise DimensionError(f"target {new_w}x{new_h} is below the {min_side}-pixel minimum")
    h, w = arr.shape
    if (new_h, new_w) == (h, w):
        return arr.copy()
    r0, r1, fr = _source_coords(h, new_h)
    c0, c1, fc = _source_coords(w, new_w)
    top = arr[r0][:, c0] * (1.0 - fc) + arr[r0][:, c1] * fc
    bottom = arr[r1][:, c0] * (1.0 - fc) + arr[r1][:, c1] * fc
    out = top * (1.0 - fr[:, None]) + bottom * fr[:, None]
    return np.clip(out, 0.0, 1.0)


def resize_sequence(seq: FrameSequence, new_w: int, new_h: int) -> FrameSequence:
    frames = np.stack([resize_bilinear(f, new_w, new_h) for f in seq.frames])
    return FrameSequence(frames, seq.frame_rate)


def _list_frame_paths(path: Path) -> list[Path]:
    if path.is_dir():
        paths = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    elif path.is_file():
        paths = []
        for line in path.read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                p = Path(line)
                paths.append(p if p.is_absolute() else path.parent / p)
    else:
        raise ImageIOError(f"{path}: no such file or directory")
    if not paths:
        raise SequenceError(f"{path}: no PGM or PNG frames found")
    return paths


def read_image(path) -> np.ndarray:
    """Read one 8-bit grayscale PGM/PNG file into [0, 1] floats."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                data = np.asarray(im, dtype=np.float64) / 255.0
            elif im.mode in ("RGB", "RGBA"):
                data = to_grayscale(np.asarray(im.convert("RGB")))
            else:
                raise ImageIOError(f"{path}: unsupported image mode {im.mode!r}")
    except ImageIOError:
        raise
    except Exception as exc:
        raise ImageIOError(f"{path}: {exc}") from exc
    return data


def read_frames(path, frame_rate: float = 30.0) -> FrameSequence:
    """Load a frame directory (lexicographic order) or a frame-list file."""
    paths = _list_frame_paths(Path(path))
    frames = []
    for p in paths:
        frame = read_image(p)
        if frames and frame.shape != frames[0].shape:
            raise SequenceError(
                f"{p}: size {frame.shape[1]}x{frame.shape[0]} differs from "
                f"{frames[0].shape[1]}x{frames[0].shape[0]} of {paths[0]}"
            )
        frames.append(frame)
    return FrameSequence(np.stack(frames), frame_rate)


def quantize(img) -> np.ndarray:
    return np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)


def _save_atomic(pixels: np.ndarray, path: Path):
    suffix = path.suffix.lower()
    fmt = {".pgm": "PPM", ".png": "PNG"}.get(suffix)
    if fmt is None:
        raise ImageIOError(f"{path}: unsupported image format {suffix!r}")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=suffix)
    os.close(fd)
    try:
        Image.fromarray(pixels, mode="L").save(tmp, format=fmt)
        os.replace(tmp, path)
    except Exception as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise ImageIOError(f"{path}: {exc}") from exc


def signed_mapping(field) -> tuple[float, float]:
    """Affine ``(offset, scale)`` sending 0 to 128 and the largest |value| to 1 or 255."""
    peak = float(np.max(np.abs(field))) if np.size(field) else 0.0
    scale = 127.0 / peak if peak > 0 else 1.0
    return 128.0, scale


def write_image(img, path, signed: bool = False) -> Path:
    """Write a [0, 1] image, or a signed field mapped around mid-gray.

    Signed fields are stored as ``round(offset + scale * value)``; the two
    parameters go to ``<path>.txt`` next to the image.
    """
    path = Path(path)
    data = np.asarray(img, dtype=np.float64)
    if data.ndim != 2:
        raise DimensionError(f"expected a 2-D field, got shape {data.shape}")
    if signed:
        offset, scale = signed_mapping(data)
        pixels = np.clip(np.rint(offset + scale * data), 0, 255).astype(np.uint8)
        _save_atomic(pixels, path)
        sidecar = path.with_name(path.name + ".txt")
        sidecar.write_text(
            f"# value = (pixel - offset) / scale\noffset {offset:.17g}\nscale {scale:.17g}\n",
            encoding="utf-8",
        )
    else:
        _save_atomic(quantize(as_gray(data)), path)
    return path


def write_frames(seq: FrameSequence, directory, suffix: str = ".png", prefix: str = "frame") -> list[Path]:
    """Write every frame as ``<prefix><index:05d><suffix>``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [
        write_image(frame, directory / f"{prefix}{i:05d}{suffix}")
        for i, frame in enumerate(seq.frames)
    ]
