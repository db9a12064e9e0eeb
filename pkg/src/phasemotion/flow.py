"""Horn-Schunck optical flow, the brightness-constancy baseline."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .errors import DimensionError, FormatError, ValidationError

DEFAULT_ALPHA = 15.0
DEFAULT_ITERS = 100
#: Intensities are rescaled to 8-bit units so ``alpha`` keeps its usual meaning.
INTENSITY_SCALE = 255.0

FLO_MAGIC = 202021.25


@dataclass(frozen=True)
class FlowField:
    u: np.ndarray
    v: np.ndarray

    @property
    def shape(self):
        return self.u.shape

    def magnitude(self):
        return np.hypot(self.u, self.v)


def _central_difference(f, axis):
    p = np.pad(f, [(1, 1) if a == axis else (0, 0) for a in range(2)], mode="edge")
    hi = p[2:, :] if axis == 0 else p[:, 2:]
    lo = p[:-2, :] if axis == 0 else p[:, :-2]
    return 0.5 * (hi - lo)


def gradients(f0, f1):
    """Spatial gradients of the frame average and the temporal difference."""
    mid = 0.5 * (f0 + f1)
    return _central_difference(mid, 1), _central_difference(mid, 0), f1 - f0


def horn_schunck(f0, f1, alpha: float = DEFAULT_ALPHA, iters: int = DEFAULT_ITERS) -> FlowField:
    """Dense flow from ``f0`` to ``f1`` by synchronous Jacobi iteration.

    ``alpha`` weights the smoothness term, in 8-bit intensity units.
    """
    f0 = np.asarray(f0, dtype=np.float64)
    f1 = np.asarray(f1, dtype=np.float64)
    if f0.shape != f1.shape or f0.ndim != 2:
        raise DimensionError(f"frames {f0.shape} and {f1.shape} must be equal 2-D shapes")
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    if iters < 1:
        raise ValidationError("iters must be at least 1")
    ix, iy, it = gradients(f0 * INTENSITY_SCALE, f1 * INTENSITY_SCALE)
    u, v = _backend.kernels().horn_schunck_sweeps(ix, iy, it, float(alpha) ** 2, int(iters))
    return FlowField(u, v)


def flow_magnitude_stats(flow: FlowField) -> dict:
    mag = flow.magnitude()
    return {"mean": float(mag.mean()), "median": float(np.median(mag)), "max": float(mag.max())}


def write_flo(flow: FlowField, path) -> Path:
    """Middlebury ``.flo``: magic, width, height, then interleaved (u, v) float32."""
    path = Path(path)
    h, w = flow.shape
    data = np.stack([flow.u, flow.v], axis=-1).astype("<f4")
    path.write_bytes(struct.pack("<fii", FLO_MAGIC, w, h) + data.tobytes())
    return path


def read_flo(path) -> FlowField:
    buf = Path(path).read_bytes()
    if len(buf) < 12:
        raise FormatError(f"{path}: truncated .flo header")
    magic, w, h = struct.unpack_from("<fii", buf)
    if magic != FLO_MAGIC:
        raise FormatError(f"{path}: bad .flo magic {magic!r}")
    if len(buf) != 12 + 8 * w * h:
        raise FormatError(f"{path}: expected {12 + 8 * w * h} bytes, found {len(buf)}")
    data = np.frombuffer(buf, "<f4", 2 * w * h, 12).astype(np.float64).reshape(h, w, 2)
    return FlowField(data[..., 0].copy(), data[..., 1].copy())
