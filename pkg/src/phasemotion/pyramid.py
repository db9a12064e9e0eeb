"""Frequency-domain complex steerable pyramid without residual bands.

Each scale ``s`` (0 = finest) owns a radial low-pass ``L_s`` and, per
orientation, a band-pass ``B_s^k``. The coefficient plane of scale ``s`` is

    ifft( X_s * L_s * B_s^k )

where ``X_0`` is the image spectrum and ``X_{s+1}`` is ``X_s * L_s`` cropped
to the central half-band. ``L_s`` is zero above half the local Nyquist rate,
so the crop is alias-free and scale ``s+1`` coefficients equal the full
resolution sub-band sampled on every other pixel (hence the 1/4 factor per
crop).

Masks live in unshifted FFT layout (``numpy.fft.fftfreq`` order).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft

from . import _backend
from .errors import DimensionError, FormatError, ValidationError
from .image import MIN_SIDE

#: Low-pass cutoff on each scale's own grid, radians per pixel.
LOWPASS_CUTOFF = np.pi / 2
#: Relative amplitude floor below which phase is undefined.
AMPLITUDE_EPS = 1e-6

CSPB_MAGIC = b"CSPB1"


@dataclass(frozen=True)
class PyramidSpec:
    n_scales: int = 2
    n_orientations: int = 2
    orientation_angles: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_scales < 1 or self.n_orientations < 1:
            raise ValidationError("a pyramid needs at least one scale and one orientation")
        angles = self.orientation_angles
        if angles is None:
            angles = tuple(k * np.pi / self.n_orientations for k in range(self.n_orientations))
        angles = tuple(float(a) for a in angles)
        if len(angles) != self.n_orientations:
            raise ValidationError(
                f"{len(angles)} orientation angles given for {self.n_orientations} orientations"
            )
        folded = sorted(a % np.pi for a in angles)
        gaps = np.diff(folded + [folded[0] + np.pi])
        if np.any(gaps < 1e-9):
            raise ValidationError("orientation angles must be distinct modulo pi")
        object.__setattr__(self, "orientation_angles", angles)


def center_frequency(scale: int) -> float:
    """Radial band centre of ``scale`` in radians per full-resolution pixel."""
    return 0.75 * LOWPASS_CUTOFF / 2**scale


def _frequency_grid(h, w):
    wy = 2 * np.pi * np.fft.fftfreq(h)
    wx = 2 * np.pi * np.fft.fftfreq(w)
    wx, wy = np.meshgrid(wx, wy)
    return np.hypot(wx, wy), np.arctan2(wy, wx)


def radial_lowpass(r, cutoff=LOWPASS_CUTOFF):
    """1 below ``cutoff/2``, log-raised-cosine taper, 0 from ``cutoff`` on."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    out[r <= cutoff / 2] = 1.0
    band = (r > cutoff / 2) & (r < cutoff)
    out[band] = np.cos(0.5 * np.pi * np.log2(2.0 * r[band] / cutoff))
    return out


def radial_highpass(r, cutoff=LOWPASS_CUTOFF):
    """Quadrature complement ``sqrt(1 - L^2)`` of :func:`radial_lowpass`."""
    lo = radial_lowpass(r, cutoff)
    return np.sqrt(np.clip(1.0 - lo * lo, 0.0, 1.0))


def angular_window(theta, angle, n_orientations):
    """``cos^(K-1)(theta - angle)`` on the half-plane facing ``angle``, else 0."""
    d = np.angle(np.exp(1j * (theta - angle)))
    out = np.zeros_like(theta, dtype=np.float64)
    inside = np.abs(d) < np.pi / 2
    out[inside] = np.cos(d[inside]) ** (n_orientations - 1)
    return out


@dataclass(frozen=True)
class FilterBank:
    """Masks for one input size. ``bandpass[s][k]`` is ``B_s^k``."""

    width: int
    height: int
    spec: PyramidSpec
    lowpass: tuple[np.ndarray, ...]
    bandpass: tuple[tuple[np.ndarray, ...], ...]
    omegas: tuple[float, ...]
    _bands: tuple[np.ndarray, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        # L_s * B_s^k stacked per scale, cached for decompose()
        bands = tuple(
            np.stack([self.lowpass[s] * b for b in self.bandpass[s]])
            for s in range(len(self.lowpass))
        )
        for arr in (*self.lowpass, *(b for row in self.bandpass for b in row), *bands):
            arr.setflags(write=False)
        object.__setattr__(self, "_bands", bands)

    @property
    def n_scales(self):
        return self.spec.n_scales

    @property
    def n_orientations(self):
        return self.spec.n_orientations

    def grid_shape(self, scale: int) -> tuple[int, int]:
        """``(height, width)`` of the coefficient planes at ``scale``."""
        return self.height >> scale, self.width >> scale


def _check_size(width, height, n_scales):
    need = MIN_SIDE * 2 ** (n_scales - 1)
    if width < need or height < need:
        raise DimensionError(
            f"{width}x{height} is too small for {n_scales} scales (need at least {need} per side)"
        )
    step = 2 ** (n_scales - 1)
    if width % step or height % step:
        raise DimensionError(
            f"{width}x{height} must be divisible by {step} for {n_scales} dyadic scales"
        )


def build_filter_bank(width: int, height: int, spec: PyramidSpec | None = None) -> FilterBank:
    spec = spec or PyramidSpec()
    _check_size(width, height, spec.n_scales)
    lowpass, bandpass = [], []
    for s in range(spec.n_scales):
        r, theta = _frequency_grid(height >> s, width >> s)
        lowpass.append(radial_lowpass(r))
        high = radial_highpass(r)
        bandpass.append(
            tuple(high * angular_window(theta, a, spec.n_orientations) for a in spec.orientation_angles)
        )
    omegas = tuple(center_frequency(s) for s in range(spec.n_scales))
    return FilterBank(width, height, spec, tuple(lowpass), tuple(bandpass), omegas)


@dataclass(frozen=True)
class PyramidCoefficients:
    """``bands[s]`` has shape ``(n_orientations, H >> s, W >> s)``, complex."""

    bands: tuple[np.ndarray, ...]
    omegas: tuple[float, ...]

    def __getitem__(self, key):
        scale, orientation = key
        return self.bands[scale][orientation]

    def __iter__(self):
        return iter(self.bands)

    def __len__(self):
        return len(self.bands)


def _crop_half(spectrum):
    h, w = spectrum.shape
    rows = np.r_[0 : h // 4, h - h // 4 : h]
    cols = np.r_[0 : w // 4, w - w // 4 : w]
    return spectrum[np.ix_(rows, cols)]


def band_spectra(img, bank: FilterBank) -> list[np.ndarray]:
    """Masked spectra ``X_s * L_s * B_s^k`` per scale, shape ``(K, H >> s, W >> s)``."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.shape != (bank.height, bank.width):
        raise DimensionError(
            f"image {arr.shape[1]}x{arr.shape[0]} does not match the "
            f"{bank.width}x{bank.height} filter bank"
        )
    spectrum = scipy.fft.fft2(arr, workers=_backend.fft_workers())
    out = []
    for s in range(bank.n_scales):
        if s:
            spectrum = 0.25 * _crop_half(spectrum * bank.lowpass[s - 1])
        out.append(spectrum[None] * bank._bands[s])
    return out


def decompose(img, bank: FilterBank) -> PyramidCoefficients:
    workers = _backend.fft_workers()
    bands = tuple(
        scipy.fft.ifft2(spec, axes=(-2, -1), workers=workers) for spec in band_spectra(img, bank)
    )
    return PyramidCoefficients(bands, bank.omegas)


def amplitude(coeffs: PyramidCoefficients) -> tuple[np.ndarray, ...]:
    return tuple(np.abs(b) for b in coeffs.bands)


def amplitude_floor(amp: np.ndarray) -> np.ndarray:
    """Per-orientation validity threshold for an ``(K, H, W)`` amplitude stack."""
    return AMPLITUDE_EPS * amp.mean(axis=(-2, -1), keepdims=True)


def principal_angle(z) -> np.ndarray:
    """Four-quadrant angle of ``z`` in (-pi, pi]."""
    phi = np.angle(z)
    return np.where(phi == -np.pi, np.pi, phi)


def phase(coeffs: PyramidCoefficients) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Per scale, ``(phase, valid)`` stacks; phase is 0 where the amplitude is below the floor."""
    out = []
    for band in coeffs.bands:
        amp = np.abs(band)
        valid = amp >= amplitude_floor(amp)
        phi = np.where(valid, principal_angle(band), 0.0)
        out.append((phi, valid))
    return tuple(out)


def write_filter_bank(bank: FilterBank, path) -> Path:
    """Serialize ``bank`` as CSPB1: header then float32 masks, scale by scale."""
    path = Path(path)
    spec = bank.spec
    parts = [
        CSPB_MAGIC,
        struct.pack("<4I", bank.width, bank.height, spec.n_scales, spec.n_orientations),
        np.asarray(spec.orientation_angles, dtype="<f4").tobytes(),
        np.asarray(bank.omegas, dtype="<f4").tobytes(),
    ]
    for s in range(spec.n_scales):
        parts.append(np.asarray(bank.lowpass[s], dtype="<f4").tobytes())
        parts.extend(np.asarray(b, dtype="<f4").tobytes() for b in bank.bandpass[s])
    path.write_bytes(b"".join(parts))
    return path


def read_filter_bank(path) -> FilterBank:
    buf = Path(path).read_bytes()
    if buf[:5] != CSPB_MAGIC:
        raise FormatError(f"{path}: not a CSPB1 filter bank")
    width, height, n_scales, n_orient = struct.unpack_from("<4I", buf, 5)
    offset = 5 + 16
    angles = np.frombuffer(buf, "<f4", n_orient, offset).astype(np.float64)
    offset += 4 * n_orient
    omegas = np.frombuffer(buf, "<f4", n_scales, offset).astype(np.float64)
    offset += 4 * n_scales
    expected = offset + 4 * sum(
        (1 + n_orient) * (height >> s) * (width >> s) for s in range(n_scales)
    )
    if len(buf) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(buf)}")
    spec = PyramidSpec(n_scales, n_orient, tuple(angles))
    lowpass, bandpass = [], []
    for s in range(n_scales):
        shape = (height >> s, width >> s)
        n = shape[0] * shape[1]
        masks = []
        for _ in range(1 + n_orient):
            masks.append(np.frombuffer(buf, "<f4", n, offset).astype(np.float64).reshape(shape))
            offset += 4 * n
        lowpass.append(masks[0])
        bandpass.append(tuple(masks[1:]))
    return FilterBank(width, height, spec, tuple(lowpass), tuple(bandpass), tuple(omegas))
