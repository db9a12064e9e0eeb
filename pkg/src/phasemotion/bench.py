"""Timing of the phase-difference pipeline against Horn-Schunck, per backend."""
from __future__ import annotations

import time

import numpy as np

from . import _backend
from .flow import DEFAULT_ALPHA, DEFAULT_ITERS, horn_schunck
from .phase_motion import DEFAULT_SIGMA, pair_phase_diffs
from .pyramid import PyramidSpec, build_filter_bank
from .synthetic import plane_wave_texture


def bench_inputs(size: int, pairs: int, seed: int = 0):
    """``pairs + 1`` frames of a texture drifting by a sub-pixel step."""
    tex = plane_wave_texture(size, size, 0.25, 1.4, n_waves=40, seed=seed)
    return [tex.render(0.4 * t, 0.15 * t) for t in range(pairs + 1)]


def _median_per_pair(fn, frames, repeats):
    times = []
    for _ in range(repeats):
        for a, b in zip(frames, frames[1:]):
            t0 = time.perf_counter()
            fn(a, b)
            times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run_bench(size: int = 224, pairs: int = 4, repeats: int = 3, backends=None,
              alpha: float = DEFAULT_ALPHA, iters: int = DEFAULT_ITERS,
              sigma: float = DEFAULT_SIGMA, spec: PyramidSpec | None = None) -> dict:
    """Median seconds per frame pair for each pipeline and backend.

    The phase timing covers decomposing both frames, denoising, differencing
    and rigid-motion removal; filter-bank construction is excluded as it is
    done once per input size.
    """
    frames = bench_inputs(size, pairs)
    bank = build_filter_bank(size, size, spec)
    backends = backends or _backend.available()
    results = []
    for name in backends:
        with _backend.use(name):
            # warm caches (transfer functions, FFT plans)
            pair_phase_diffs(frames[0], frames[1], bank, sigma)
            horn_schunck(frames[0], frames[1], alpha, 1)
            t_phase = _median_per_pair(lambda a, b: pair_phase_diffs(a, b, bank, sigma), frames, repeats)
            t_flow = _median_per_pair(lambda a, b: horn_schunck(a, b, alpha, iters), frames, repeats)
        results.append({
            "backend": name,
            "phase_diff_s": t_phase,
            "flow_s": t_flow,
            "ratio_flow_over_phase": t_flow / t_phase,
        })
    return {
        "size": size, "pairs": pairs, "repeats": repeats,
        "alpha": alpha, "iters": iters, "sigma": sigma,
        "results": results,
    }


def format_table(report: dict) -> str:
    lines = [
        f"size {report['size']}x{report['size']}, {report['pairs']} pairs x {report['repeats']} repeats, "
        f"Horn-Schunck alpha={report['alpha']:g} iters={report['iters']}",
        f"{'backend':<8} {'phase-diff ms':>14} {'flow ms':>10} {'flow/phase':>11}",
    ]
    for r in report["results"]:
        lines.append(
            f"{r['backend']:<8} {1e3 * r['phase_diff_s']:>14.2f} {1e3 * r['flow_s']:>10.2f} "
            f"{r['ratio_flow_over_phase']:>11.2f}"
        )
    return "\n".join(lines)
