"""Analytic test imagery: periodic plane-wave textures and warped sequences.

Textures are sums of cosines on integer FFT bins, so circular shifts by any
real amount can be rendered exactly instead of resampled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import FrameSequence


@dataclass(frozen=True)
class PlaneWaveTexture:
    """``mid + half * sum(a_i cos(kx_i x + ky_i y + phi_i)) / sum(a_i)``; values stay in [mid-half, mid+half]."""

    width: int
    height: int
    kx: np.ndarray
    ky: np.ndarray
    amp: np.ndarray
    phi: np.ndarray
    mid: float = 0.5
    half: float = 0.35

    def render(self, dx=0.0, dy=0.0) -> np.ndarray:
        """Texture shifted by ``(dx, dy)``; shifts may be arrays broadcastable to the image."""
        y, x = np.mgrid[0 : self.height, 0 : self.width].astype(np.float64)
        xs, ys = x - dx, y - dy
        acc = np.zeros((self.height, self.width))
        for kx, ky, a, p in zip(self.kx, self.ky, self.amp, self.phi):
            acc += a * np.cos(kx * xs + ky * ys + p)
        return self.mid + self.half * acc / self.amp.sum()

    def scaled(self, mid, half) -> "PlaneWaveTexture":
        return PlaneWaveTexture(self.width, self.height, self.kx, self.ky, self.amp, self.phi, mid, half)


def plane_wave_texture(width, height, r_min, r_max, n_waves=24, seed=0,
                       mid=0.5, half=0.35, max_tilt=None) -> PlaneWaveTexture:
    """Random waves with radial frequency in ``[r_min, r_max]`` rad/px, snapped to FFT bins.

    ``max_tilt`` (radians) keeps only wave vectors within that angle of the x
    or y axis, which keeps each wave inside a single oriented sub-band.
    """
    rng = np.random.default_rng(seed)
    kx, ky = [], []
    seen = set()
    bx_all = np.arange(-(width // 2) + 1, width // 2)
    by_all = np.arange(0, height // 2)
    cands = [
        (bx, by) for bx in bx_all for by in by_all
        if (by > 0 or bx > 0)
        and r_min <= np.hypot(2 * np.pi * bx / width, 2 * np.pi * by / height) <= r_max
        and (max_tilt is None or _axis_tilt(bx / width, by / height) <= max_tilt)
    ]
    if not cands:
        raise ValueError("no FFT bins fall inside the requested frequency annulus")
    order = rng.permutation(len(cands))
    for i in order[: min(n_waves, len(cands))]:
        bx, by = cands[i]
        if (bx, by) in seen:
            continue
        seen.add((bx, by))
        kx.append(2 * np.pi * bx / width)
        ky.append(2 * np.pi * by / height)
    n = len(kx)
    amp = rng.uniform(0.5, 1.0, n)
    phi = rng.uniform(0, 2 * np.pi, n)
    return PlaneWaveTexture(width, height, np.array(kx), np.array(ky), amp, phi, mid, half)


def _axis_tilt(fx, fy):
    angle = np.arctan2(abs(fy), abs(fx))
    return min(angle, np.pi / 2 - angle)


def shifted_pair(texture: PlaneWaveTexture, dx=0.0, dy=0.0):
    return texture.render(), texture.render(dx, dy)


def expression_sequence(n_frames=100, size=48, seed=0, frame_rate=30.0) -> FrameSequence:
    """A textured patch with a few local oscillating deformations and slight global sway.

    Stands in for an aligned face crop: mostly non-rigid motion under 1 px per
    frame, which rigid-motion removal leaves intact.
    """
    rng = np.random.default_rng(seed)
    tex = plane_wave_texture(size, size, 0.25, 1.4, n_waves=40, seed=seed + 1, mid=0.5, half=0.35)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    bumps = []
    for _ in range(4):
        cx, cy = rng.uniform(0.25, 0.75, 2) * size
        radius = rng.uniform(0.1, 0.2) * size
        direction = rng.normal(size=2)
        direction /= np.hypot(*direction)
        amp = rng.uniform(1.0, 2.5)
        period = rng.uniform(8, 30)
        offset = rng.uniform(0, 2 * np.pi)
        envelope = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * radius**2))
        bumps.append((envelope, direction, amp, period, offset))
    sway = rng.uniform(0, 2 * np.pi)
    frames = []
    for t in range(n_frames):
        dx = np.full_like(x, 0.3 * np.sin(2 * np.pi * t / 50 + sway))
        dy = np.zeros_like(x)
        for envelope, direction, amp, period, offset in bumps:
            s = amp * np.sin(2 * np.pi * t / period + offset) * envelope
            dx = dx + s * direction[0]
            dy = dy + s * direction[1]
        frames.append(tex.render(dx, dy))
    return FrameSequence(np.stack(frames), frame_rate)
