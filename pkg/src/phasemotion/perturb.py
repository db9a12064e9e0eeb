"""Per-frame gamma jitter and the clean-vs-corrupted robustness sweep.

Frame ``t`` of a sequence corrupted with seed ``s`` gets exponent
``gamma_t = 1 - beta + 2 * beta * U_t`` where ``U_t`` is the top 53 bits of
``splitmix64(s + (t + 1) * 0x9E3779B97F4A7C15)`` scaled to [0, 1). Every
``gamma_t`` is addressable on its own, so frames can be processed in any
order.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .flow import DEFAULT_ALPHA, DEFAULT_ITERS, horn_schunck
from .image import FrameSequence
from .phase_motion import DEFAULT_SIGMA, snippet_phase_diffs, wrap
from .pyramid import FilterBank, PyramidSpec, build_filter_bank

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

REPORT_COLUMNS = ("beta", "seed", "pipeline", "n_pairs", "mean_abs_dev", "normalized_dev")
PIPELINES = ("phase_diff", "flow")


def splitmix64_mix(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(seed: int, index: int) -> int:
    """Output ``index`` (0-based) of the SplitMix64 stream started at ``seed``."""
    return splitmix64_mix((seed + (index + 1) * GOLDEN_GAMMA) & MASK64)


def uniform01(seed: int, index: int) -> float:
    return (splitmix64(seed, index) >> 11) * 2.0**-53


@dataclass(frozen=True)
class GammaJitterSpec:
    beta: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValidationError(f"beta must lie in [0, 1], got {self.beta}")

    def gamma(self, t: int) -> float:
        if self.beta == 0:
            return 1.0
        return 1.0 - self.beta + 2.0 * self.beta * uniform01(self.seed, t)

    def gammas(self, n: int) -> np.ndarray:
        return np.array([self.gamma(t) for t in range(n)])


def gamma_corrupt_frame(img, gamma: float) -> np.ndarray:
    """Pointwise ``u ** gamma``; 0 and 1 are fixed points for every gamma >= 0."""
    if gamma < 0:
        raise ValidationError("gamma must be non-negative")
    arr = np.asarray(img, dtype=np.float64)
    if gamma == 1.0:
        return arr.copy()
    return np.where(arr == 0.0, 0.0, np.power(arr, gamma))


def gamma_corrupt_sequence(seq: FrameSequence, spec: GammaJitterSpec) -> FrameSequence:
    frames = np.stack([gamma_corrupt_frame(f, spec.gamma(t)) for t, f in enumerate(seq.frames)])
    return FrameSequence(frames, seq.frame_rate)


def phase_motion_fields(seq: FrameSequence, bank: FilterBank, sigma: float = DEFAULT_SIGMA):
    return snippet_phase_diffs(seq, bank, sigma)


def flow_fields(seq: FrameSequence, alpha=DEFAULT_ALPHA, iters=DEFAULT_ITERS):
    return [horn_schunck(a, b, alpha, iters) for a, b in zip(seq.frames, seq.frames[1:])]


def phase_deviation(clean, corrupt) -> tuple[float, float]:
    """Mean wrapped |difference| over mutually valid pixels, raw and relative to clean."""
    dev_sum = ref_sum = 0.0
    count = 0
    for pc, pk in zip(clean, corrupt):
        for key, fc in pc.items():
            fk = pk[key]
            both = fc.valid & fk.valid
            dev_sum += np.abs(wrap(fk.values[both] - fc.values[both])).sum()
            ref_sum += np.abs(fc.values[both]).sum()
            count += int(both.sum())
    if count == 0:
        return 0.0, 0.0
    mean_dev, mean_ref = dev_sum / count, ref_sum / count
    return mean_dev, (mean_dev / mean_ref if mean_ref > 0 else 0.0)


def flow_deviation(clean, corrupt) -> tuple[float, float]:
    """Mean |u' - u| and |v' - v| over pixels, raw and relative to clean."""
    dev = np.mean([np.abs(k.u - c.u).mean() + np.abs(k.v - c.v).mean() for c, k in zip(clean, corrupt)]) / 2
    ref = np.mean([np.abs(c.u).mean() + np.abs(c.v).mean() for c in clean]) / 2
    return float(dev), float(dev / ref if ref > 0 else 0.0)


def robustness_sweep(seq: FrameSequence, betas, pipeline: str = "both", seeds=(0,),
                     spec: PyramidSpec | None = None, sigma: float = DEFAULT_SIGMA,
                     alpha: float = DEFAULT_ALPHA, iters: int = DEFAULT_ITERS) -> list[dict]:
    """Deviation of motion fields under gamma jitter, one row per (beta, seed, pipeline)."""
    seq.require_motion()
    pipelines = PIPELINES if pipeline == "both" else (pipeline,)
    for p in pipelines:
        if p not in PIPELINES:
            raise ValidationError(f"unknown pipeline {p!r}; expected one of {PIPELINES}")
    specs = [GammaJitterSpec(float(b), int(s)) for b in betas for s in seeds]
    h, w = seq.shape
    bank = build_filter_bank(w, h, spec) if "phase_diff" in pipelines else None
    clean = {}
    if bank is not None:
        clean["phase_diff"] = phase_motion_fields(seq, bank, sigma)
    if "flow" in pipelines:
        clean["flow"] = flow_fields(seq, alpha, iters)
    rows = []
    for jitter in specs:
        corrupted = gamma_corrupt_sequence(seq, jitter)
        for p in pipelines:
            if p == "phase_diff":
                dev = phase_deviation(clean[p], phase_motion_fields(corrupted, bank, sigma))
            else:
                dev = flow_deviation(clean[p], flow_fields(corrupted, alpha, iters))
            rows.append({
                "beta": jitter.beta, "seed": jitter.seed, "pipeline": p,
                "n_pairs": len(seq) - 1, "mean_abs_dev": dev[0], "normalized_dev": dev[1],
            })
    return rows


def report_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({**row, "mean_abs_dev": f"{row['mean_abs_dev']:.9g}",
                         "normalized_dev": f"{row['normalized_dev']:.9g}"})
    return buf.getvalue()


def summarize(rows: list[dict]) -> dict:
    """Seed-averaged normalized deviation keyed by ``(pipeline, beta)``."""
    acc: dict = {}
    for row in rows:
        acc.setdefault((row["pipeline"], row["beta"]), []).append(row["normalized_dev"])
    return {k: float(np.mean(v)) for k, v in sorted(acc.items())}
