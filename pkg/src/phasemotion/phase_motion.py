"""Phase-difference motion fields and snippet packing.

Per frame: decompose, take local phase, denoise it with an amplitude-weighted
Gaussian blur. Per consecutive pair: wrapped phase difference, then removal
of the global (rigid) component. A snippet of ``T`` frames yields ``T - 1``
difference fields per sub-band, packed channel-major with channel
``c = pair * n_orientations + orientation``.
"""
from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft

from . import _backend
from .errors import DimensionError, FormatError, InsufficientSignalError, SequenceError, ValidationError
from .image import FrameSequence
from .pyramid import FilterBank, amplitude_floor, band_spectra, principal_angle

DEFAULT_SIGMA = 2.0
DEFAULT_LENGTH = 13
GAIN_QUANTUM = 2.0**-24
MIN_VALID_FRACTION = 0.01

SNIP_MAGIC = b"SNIP1"


def wrap(x):
    """Map angles into (-pi, pi] by whole turns."""
    x = np.asarray(x, dtype=np.float64)
    out = x - 2 * np.pi * np.ceil((x - np.pi) / (2 * np.pi))
    # guard the rounding of the turn count at the interval ends
    out = np.where(out > np.pi, out - 2 * np.pi, out)
    return np.where(out <= -np.pi, out + 2 * np.pi, out)


def gaussian_taps(sigma: float) -> np.ndarray:
    radius = max(1, int(math.ceil(3.0 * sigma)))
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (k / sigma) ** 2)
    return g / g.sum()


def normalize_gain(img) -> np.ndarray:
    """Divide by the mean intensity and snap to a fixed 2**-24 grid.

    Local phase ignores global gain mathematically; the snap makes that hold
    bit for bit, since ``c * img`` and ``img`` land on the same grid points.
    """
    arr = np.asarray(img, dtype=np.float64)
    mean = arr.mean()
    if mean <= 0:
        return arr.copy()
    return np.rint(arr / mean / GAIN_QUANTUM) * GAIN_QUANTUM


@dataclass(frozen=True)
class PhaseDiffField:
    """Wrapped phase difference of one sub-band between frames t and t+1.

    ``weight`` is the geometric mean of both frames' amplitudes and only
    serves as a confidence weight in :func:`estimate_translation`.
    """

    values: np.ndarray
    valid: np.ndarray
    omega: float
    scale: int = 0
    orientation: int = 0
    angle: float = 0.0
    weight: np.ndarray | None = None

    @property
    def shape(self):
        return self.values.shape

    def replace_values(self, values):
        return PhaseDiffField(values, self.valid, self.omega, self.scale,
                              self.orientation, self.angle, self.weight)


def denoise_phase(phase, amp, sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """Amplitude-weighted Gaussian blur of phase, done on the phasor ``A e^{j phase}``."""
    phase = np.asarray(phase, dtype=np.float64)
    amp = np.asarray(amp, dtype=np.float64)
    if phase.shape != amp.shape or phase.ndim != 2:
        raise DimensionError(f"phase {phase.shape} and amplitude {amp.shape} must be equal 2-D shapes")
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    blurred = _backend.kernels().blur_circular(amp * np.exp(1j * phase), gaussian_taps(sigma))
    return principal_angle(blurred)


def phase_difference(phase_t, phase_t1, valid_t=None, valid_t1=None, *, omega=0.0,
                     scale=0, orientation=0, angle=0.0, weight=None) -> PhaseDiffField:
    """Difference ``phase_t1 - phase_t`` moved to (-pi, pi] by the nearest multiple of 2*pi."""
    phase_t = np.asarray(phase_t, dtype=np.float64)
    phase_t1 = np.asarray(phase_t1, dtype=np.float64)
    if phase_t.shape != phase_t1.shape or phase_t.ndim != 2:
        raise DimensionError(f"phase planes {phase_t.shape} and {phase_t1.shape} differ")
    valid = np.ones(phase_t.shape, dtype=bool)
    for mask in (valid_t, valid_t1):
        if mask is not None:
            valid &= np.asarray(mask, dtype=bool)
    delta = _backend.kernels().wrapped_difference(phase_t, phase_t1)
    delta = np.where(valid, delta, 0.0)
    return PhaseDiffField(delta, valid, omega, scale, orientation, angle, weight)


def remove_rigid_motion(field: PhaseDiffField) -> PhaseDiffField:
    """Subtract the mean over valid pixels of the whole sub-band and re-wrap."""
    if not field.valid.any():
        return field
    mean = field.values[field.valid].mean()
    values = np.where(field.valid, wrap(field.values - mean), 0.0)
    return field.replace_values(values)


@dataclass(frozen=True)
class FramePhase:
    """Denoised phase, validity and amplitude stacks of one frame, per scale."""

    phase: tuple[np.ndarray, ...]
    valid: tuple[np.ndarray, ...]
    amplitude: tuple[np.ndarray, ...]


@functools.lru_cache(maxsize=32)
def gaussian_transfer(height: int, width: int, sigma: float) -> np.ndarray:
    """DFT of the circular separable Gaussian used by :func:`denoise_phase`."""

    def axis(n):
        taps = gaussian_taps(sigma)
        radius = (taps.size - 1) // 2
        kernel = np.zeros(n)
        np.add.at(kernel, np.arange(-radius, radius + 1) % n, taps)
        return np.fft.fft(kernel).real

    out = np.outer(axis(height), axis(width))
    out.setflags(write=False)
    return out


def frame_phase(img, bank: FilterBank, sigma: float = DEFAULT_SIGMA, normalize: bool = True) -> FramePhase:
    """Denoised phases of one frame.

    The circular blur is linear, so it is applied as a transfer function on
    each band's spectrum; this matches :func:`denoise_phase` up to rounding.
    """
    arr = normalize_gain(img) if normalize else np.asarray(img, dtype=np.float64)
    if arr.shape != (bank.height, bank.width):
        raise DimensionError(
            f"image {arr.shape[1]}x{arr.shape[0]} does not match the "
            f"{bank.width}x{bank.height} filter bank"
        )
    phases, valids, amps = [], [], []
    for s, spectrum in enumerate(band_spectra(arr, bank)):
        h, w = spectrum.shape[-2:]
        both = np.concatenate([spectrum, spectrum * gaussian_transfer(h, w, float(sigma))])
        planes = scipy.fft.ifft2(both, axes=(-2, -1), workers=_backend.fft_workers())
        k = spectrum.shape[0]
        amp = np.abs(planes[:k])
        valid = amp >= amplitude_floor(amp)
        phases.append(np.where(valid, principal_angle(planes[k:]), 0.0))
        valids.append(valid)
        amps.append(amp)
    return FramePhase(tuple(phases), tuple(valids), tuple(amps))


PairFields = dict  # (scale, orientation) -> PhaseDiffField


def pair_fields(p0: FramePhase, p1: FramePhase, bank: FilterBank, remove_rigid: bool = True) -> PairFields:
    out = {}
    for s in range(bank.n_scales):
        for k, angle in enumerate(bank.spec.orientation_angles):
            f = phase_difference(
                p0.phase[s][k], p1.phase[s][k], p0.valid[s][k], p1.valid[s][k],
                omega=bank.omegas[s], scale=s, orientation=k, angle=angle,
                weight=np.sqrt(p0.amplitude[s][k] * p1.amplitude[s][k]),
            )
            out[s, k] = remove_rigid_motion(f) if remove_rigid else f
    return out


def pair_phase_diffs(f0, f1, bank: FilterBank, sigma: float = DEFAULT_SIGMA,
                     remove_rigid: bool = True, normalize: bool = True) -> PairFields:
    """Full pipeline for one frame pair; both frames are decomposed."""
    return pair_fields(frame_phase(f0, bank, sigma, normalize),
                       frame_phase(f1, bank, sigma, normalize), bank, remove_rigid)


def snippet_phase_diffs(frames, bank: FilterBank, sigma: float = DEFAULT_SIGMA,
                        remove_rigid: bool = True, normalize: bool = True) -> list[PairFields]:
    """Phase-difference fields for every consecutive pair of ``frames``.

    Each frame is decomposed once and shared by the two pairs it belongs to.
    """
    seq = frames if isinstance(frames, FrameSequence) else FrameSequence(np.asarray(frames))
    seq.require_motion()
    if seq.shape != (bank.height, bank.width):
        raise DimensionError(
            f"frames are {seq.shape[1]}x{seq.shape[0]}, filter bank is {bank.width}x{bank.height}"
        )
    phases = [frame_phase(f, bank, sigma, normalize) for f in seq.frames]
    return [pair_fields(a, b, bank, remove_rigid) for a, b in zip(phases, phases[1:])]


def estimate_translation(field: PhaseDiffField) -> float:
    """Displacement along the sub-band's orientation, in full-resolution pixels.

    Uses the amplitude-weighted mean phase difference; a pure translation by
    ``x`` shifts local phase by ``-omega * x``.
    """
    valid = field.valid
    if valid.mean() < MIN_VALID_FRACTION:
        raise InsufficientSignalError(
            f"only {int(valid.sum())} of {valid.size} pixels carry reliable phase"
        )
    if field.weight is None:
        w = valid.astype(np.float64)
    else:
        w = np.where(valid, field.weight, 0.0)
    total = w.sum()
    if total <= 0:
        raise InsufficientSignalError("all valid pixels have zero amplitude")
    mean = float((w * field.values).sum() / total)
    return -mean / field.omega


@dataclass(frozen=True)
class SnippetTensor:
    """One scale of a packed snippet: ``data`` is ``(pairs * K, H, W)``."""

    data: np.ndarray
    n_pairs: int
    n_orientations: int
    omega: float
    scale: int = 0
    valid: np.ndarray | None = None

    @property
    def shape(self):
        return self.data.shape

    def channel(self, pair: int, orientation: int) -> int:
        return pair * self.n_orientations + orientation


def pack_snippet(pairs: list[PairFields], n_pairs: int | None = None) -> list[SnippetTensor]:
    """Merge pair and orientation axes into channels, one tensor per scale."""
    if not pairs:
        raise SequenceError("no phase-difference fields to pack")
    if n_pairs is not None and len(pairs) != n_pairs:
        raise SequenceError(f"expected {n_pairs} pairs, got {len(pairs)}")
    keys = sorted(pairs[0])
    n_scales = max(s for s, _ in keys) + 1
    n_orient = max(k for _, k in keys) + 1
    tensors = []
    for s in range(n_scales):
        shape = pairs[0][s, 0].shape
        data = np.empty((len(pairs) * n_orient, *shape), dtype=np.float64)
        valid = np.empty(data.shape, dtype=bool)
        for t, fields in enumerate(pairs):
            if sorted(fields) != keys:
                raise SequenceError(f"pair {t} has a different set of sub-bands")
            for k in range(n_orient):
                f = fields[s, k]
                if f.shape != shape:
                    raise DimensionError(f"pair {t} scale {s} has shape {f.shape}, expected {shape}")
                data[t * n_orient + k] = f.values
                valid[t * n_orient + k] = f.valid
        tensors.append(SnippetTensor(data, len(pairs), n_orient, pairs[0][s, 0].omega, s, valid))
    return tensors


def unpack_snippet(tensors: list[SnippetTensor], angles=None) -> list[PairFields]:
    """Inverse of :func:`pack_snippet` (amplitude weights are not stored)."""
    n_pairs = tensors[0].n_pairs
    n_orient = tensors[0].n_orientations
    angles = angles or tuple(k * np.pi / n_orient for k in range(n_orient))
    out = [dict() for _ in range(n_pairs)]
    for tensor in tensors:
        valid = tensor.valid if tensor.valid is not None else np.ones(tensor.shape, dtype=bool)
        for c in range(tensor.shape[0]):
            t, k = divmod(c, n_orient)
            out[t][tensor.scale, k] = PhaseDiffField(
                tensor.data[c], valid[c], tensor.omega, tensor.scale, k, angles[k]
            )
    return out


def write_snippet(tensors: list[SnippetTensor], path) -> Path:
    """SNIP1 layout: header, then each scale's channels as little-endian float32."""
    path = Path(path)
    header = [SNIP_MAGIC, struct.pack("<I", len(tensors))]
    for t in tensors:
        header.append(struct.pack("<3I", *t.shape))
    header.append(struct.pack("<2I", tensors[0].n_pairs, tensors[0].n_orientations))
    header.append(np.asarray([t.omega for t in tensors], dtype="<f4").tobytes())
    body = [np.ascontiguousarray(t.data, dtype="<f4").tobytes() for t in tensors]
    path.write_bytes(b"".join(header + body))
    return path


def read_snippet(path) -> list[SnippetTensor]:
    """Validity masks are not stored, so tensors come back with ``valid=None``."""
    buf = Path(path).read_bytes()
    if buf[:5] != SNIP_MAGIC:
        raise FormatError(f"{path}: not a SNIP1 tensor file")
    (n_scales,) = struct.unpack_from("<I", buf, 5)
    offset = 9
    shapes = []
    for _ in range(n_scales):
        shapes.append(struct.unpack_from("<3I", buf, offset))
        offset += 12
    n_pairs, n_orient = struct.unpack_from("<2I", buf, offset)
    offset += 8
    omegas = np.frombuffer(buf, "<f4", n_scales, offset).astype(np.float64)
    offset += 4 * n_scales
    expected = offset + 4 * sum(c * h * w for c, h, w in shapes)
    if len(buf) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(buf)}")
    tensors = []
    for s, shape in enumerate(shapes):
        n = shape[0] * shape[1] * shape[2]
        data = np.frombuffer(buf, "<f4", n, offset).astype(np.float64).reshape(shape)
        offset += 4 * n
        tensors.append(SnippetTensor(data, n_pairs, n_orient, float(omegas[s]), s))
    return tensors
