import numpy as np
import pytest

from phasemotion import _backend
from phasemotion.bench import bench_inputs, format_table, run_bench
from phasemotion.synthetic import expression_sequence, plane_wave_texture


def test_bench_report_shape():
    report = run_bench(size=48, pairs=2, repeats=1, iters=3)
    assert [r["backend"] for r in report["results"]] == _backend.available()
    for r in report["results"]:
        assert r["phase_diff_s"] > 0 and r["flow_s"] > 0
        assert r["ratio_flow_over_phase"] == pytest.approx(r["flow_s"] / r["phase_diff_s"])
    table = format_table(report)
    assert table.splitlines()[0].startswith("size 48x48")
    assert len(table.splitlines()) == 2 + len(report["results"])


def test_bench_inputs():
    frames = bench_inputs(48, 3)
    assert len(frames) == 4 and frames[0].shape == (48, 48)
    assert all(0 <= f.min() and f.max() <= 1 for f in frames)


def test_texture_shift_is_exact():
    tex = plane_wave_texture(32, 32, 0.5, 1.5, n_waves=10, seed=1)
    np.testing.assert_allclose(tex.render(3, 0), np.roll(tex.render(), 3, axis=1), atol=1e-12)
    np.testing.assert_allclose(tex.render(0, -2), np.roll(tex.render(), -2, axis=0), atol=1e-12)


def test_texture_tilt_and_band():
    tex = plane_wave_texture(64, 64, 0.9, 1.45, n_waves=30, seed=3, max_tilt=0.2)
    r = np.hypot(tex.kx, tex.ky)
    assert np.all((r >= 0.9) & (r <= 1.45))
    angle = np.arctan2(np.abs(tex.ky), np.abs(tex.kx))
    assert np.all(np.minimum(angle, np.pi / 2 - angle) <= 0.2)
    with pytest.raises(ValueError):
        plane_wave_texture(16, 16, 3.5, 3.6)


def test_expression_sequence():
    seq = expression_sequence(n_frames=10, size=48, seed=1)
    assert seq.frames.shape == (10, 48, 48)
    assert 0 < seq.frames.min() and seq.frames.max() < 1
    again = expression_sequence(n_frames=10, size=48, seed=1)
    assert np.array_equal(seq.frames, again.frames)
    assert not np.array_equal(seq.frames[0], seq.frames[1])
