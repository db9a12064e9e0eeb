import numpy as np
import pytest

from phasemotion.errors import (
    DimensionError, FormatError, InsufficientSignalError, SequenceError, ValidationError,
)
from phasemotion.image import FrameSequence
from phasemotion.phase_motion import (
    PhaseDiffField,
    denoise_phase,
    estimate_translation,
    frame_phase,
    gaussian_taps,
    normalize_gain,
    pack_snippet,
    pair_phase_diffs,
    phase_difference,
    read_snippet,
    remove_rigid_motion,
    snippet_phase_diffs,
    unpack_snippet,
    wrap,
    write_snippet,
)
from phasemotion.pyramid import amplitude, decompose, phase


def brute_force_denoise(phi, amp, sigma):
    """Direct circular 2-D weighted sum of phasors, one output pixel at a time."""
    taps = gaussian_taps(sigma)
    r = (taps.size - 1) // 2
    h, w = phi.shape
    out = np.empty_like(phi)
    for y in range(h):
        for x in range(w):
            acc = 0j
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    q = ((y - dy) % h, (x - dx) % w)
                    acc += taps[dy + r] * taps[dx + r] * amp[q] * np.exp(1j * phi[q])
            out[y, x] = np.angle(acc)
    return out


def wrapped_close(a, b, tol):
    return np.abs(wrap(np.asarray(a) - np.asarray(b))).max() <= tol


class TestWrap:
    def test_range_and_boundary(self):
        x = np.array([np.pi, -np.pi, 3 * np.pi, -3 * np.pi, 0.0, 7.0, -7.0])
        out = wrap(x)
        assert np.all(out > -np.pi) and np.all(out <= np.pi)
        assert out[0] == np.pi and out[1] == np.pi
        np.testing.assert_allclose(out[5:], [7 - 2 * np.pi, -7 + 2 * np.pi])


class TestDenoise:
    def test_constant_phase(self, backend):
        out = denoise_phase(np.full((10, 12), 0.7), np.ones((10, 12)), 2.0)
        np.testing.assert_allclose(out, 0.7, atol=1e-14)

    def test_weight_concentration(self, backend):
        rng = np.random.default_rng(0)
        phi = rng.uniform(-np.pi, np.pi, (16, 16))
        amp = np.full((16, 16), 1e-9)
        amp[8, 8] = 1.0
        out = denoise_phase(phi, amp, 1.5)
        assert wrapped_close(out[7:10, 7:10], phi[8, 8], 1e-6)

    def test_checkerboard(self, backend):
        y, x = np.mgrid[0:8, 0:8]
        phi = np.where((x + y) % 2, np.pi, -np.pi)
        out = denoise_phase(phi, np.ones((8, 8)), 1.0)
        ref = brute_force_denoise(phi, np.ones((8, 8)), 1.0)
        assert wrapped_close(out, ref, 1e-12)
        assert wrapped_close(out, np.pi, 1e-12)

    def test_random_against_brute_force(self, backend):
        rng = np.random.default_rng(7)
        phi = rng.uniform(-np.pi, np.pi, (9, 11))
        amp = rng.uniform(0.1, 2.0, (9, 11))
        out = denoise_phase(phi, amp, 1.0)
        assert wrapped_close(out, brute_force_denoise(phi, amp, 1.0), 1e-12)
        assert np.all(out > -np.pi) and np.all(out <= np.pi)

    def test_pipeline_matches_spatial_blur(self, bank48, rng):
        img = 0.2 + 0.6 * rng.uniform(size=(48, 48))
        fp = frame_phase(img, bank48, 2.0, normalize=False)
        coeffs = decompose(img, bank48)
        for s, ((_, valid), amp, band) in enumerate(zip(phase(coeffs), amplitude(coeffs), coeffs.bands)):
            for k in range(2):
                ref = denoise_phase(np.angle(band[k]), amp[k], 2.0)
                v = valid[k]
                assert np.array_equal(fp.valid[s][k], v)
                assert wrapped_close(fp.phase[s][k][v], ref[v], 1e-9)

    def test_errors(self):
        with pytest.raises(DimensionError):
            denoise_phase(np.zeros((4, 4)), np.zeros((4, 5)))
        with pytest.raises(ValidationError):
            denoise_phase(np.zeros((4, 4)), np.ones((4, 4)), 0.0)


class TestPhaseDifference:
    @pytest.mark.parametrize("a,b,expected", [(3.0, -3.0, 2 * np.pi - 6.0), (0.0, np.pi, np.pi),
                                               (-3.0, 3.0, 6.0 - 2 * np.pi), (0.5, 0.5, 0.0)])
    def test_examples(self, backend, a, b, expected):
        f = phase_difference(np.full((2, 2), a), np.full((2, 2), b))
        np.testing.assert_allclose(f.values, expected, rtol=0, atol=1e-15)

    def test_identical(self, backend, rng):
        p = rng.uniform(-np.pi, np.pi, (8, 8))
        assert np.all(phase_difference(p, p).values == 0)

    def test_anti_symmetry(self, backend, rng):
        a, b = rng.uniform(-np.pi, np.pi, (2, 30, 30))
        ab, ba = phase_difference(a, b).values, phase_difference(b, a).values
        interior = np.abs(ab) < np.pi - 1e-9
        np.testing.assert_allclose(ab[interior], wrap(-ba)[interior], atol=1e-15)

    def test_validity_and(self, backend):
        v0 = np.array([[True, True], [False, False]])
        v1 = np.array([[True, False], [True, False]])
        f = phase_difference(np.zeros((2, 2)), np.ones((2, 2)), v0, v1)
        assert f.valid.tolist() == [[True, False], [False, False]]
        assert f.values.tolist() == [[1.0, 0.0], [0.0, 0.0]]

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            phase_difference(np.zeros((3, 3)), np.zeros((3, 4)))


class TestRigidMotion:
    def field(self, values, valid=None):
        values = np.asarray(values, dtype=float)
        valid = np.ones(values.shape, bool) if valid is None else valid
        return PhaseDiffField(values, valid, 1.0)

    def test_worked_example(self):
        v = np.full((4, 4), 0.1)
        v[2, 3] = 0.5
        out = remove_rigid_motion(self.field(v)).values
        np.testing.assert_allclose(out, v - 0.125, atol=1e-15)
        assert abs(out.mean()) < 1e-9

    def test_constant(self):
        assert np.allclose(remove_rigid_motion(self.field(np.full((5, 5), -1.3))).values, 0, atol=1e-15)

    def test_zero_mean_unchanged(self):
        v = np.array([[0.2, -0.2], [0.5, -0.5]])
        np.testing.assert_allclose(remove_rigid_motion(self.field(v)).values, v, atol=1e-15)

    def test_invalid_pixels_ignored(self):
        valid = np.array([[True, True], [True, False]])
        v = np.array([[1.0, 1.0, ], [1.0, 0.0]])
        out = remove_rigid_motion(self.field(v, valid))
        assert out.values.tolist() == [[0.0, 0.0], [0.0, 0.0]]

    def test_idempotent(self, rng):
        f = self.field(rng.uniform(-1, 1, (12, 12)))
        once = remove_rigid_motion(f)
        np.testing.assert_allclose(remove_rigid_motion(once).values, once.values, atol=1e-9)


class TestEstimateTranslation:
    def test_zero_field(self):
        f = PhaseDiffField(np.zeros((8, 8)), np.ones((8, 8), bool), 1.0)
        assert estimate_translation(f) == 0.0

    def test_insufficient_signal(self):
        valid = np.zeros((20, 20), bool)
        valid[0, 0] = True
        with pytest.raises(InsufficientSignalError):
            estimate_translation(PhaseDiffField(np.zeros((20, 20)), valid, 1.0))

    def test_one_pixel_shift(self, axis_texture, bank64):
        f0, f1 = axis_texture.render(), axis_texture.render(1.0, 0.0)
        fields = pair_phase_diffs(f0, f1, bank64, remove_rigid=False)
        assert 0.8 <= estimate_translation(fields[0, 0]) <= 1.2
        assert abs(estimate_translation(fields[0, 1])) < 0.2

    def test_monotone_and_linear(self, axis_texture, bank64):
        shifts = np.array([0.5, 1.0, 1.5, 2.0])
        est = []
        for x0 in shifts:
            fields = pair_phase_diffs(axis_texture.render(), axis_texture.render(x0, 0.0), bank64,
                                      remove_rigid=False)
            est.append(estimate_translation(fields[0, 0]))
        assert np.all(np.diff(est) > 0)
        slope = np.polyfit(shifts, est, 1)[0]
        assert 0.75 <= slope <= 1.25

    def test_vertical_shift(self, axis_texture, bank64):
        fields = pair_phase_diffs(axis_texture.render(), axis_texture.render(0.0, 1.0), bank64,
                                  remove_rigid=False)
        assert 0.75 <= estimate_translation(fields[0, 1]) <= 1.25


class TestPipeline:
    def test_illumination_invariance(self, bank48, rng):
        f0, f1 = 0.1 + 0.4 * rng.uniform(size=(2, 48, 48))
        ref = pair_phase_diffs(f0, f1, bank48)
        for c1, c2 in [(0.5, 2.0), (0.731, 1.913), (1.37, 0.62)]:
            got = pair_phase_diffs(c1 * f0, c2 * f1, bank48)
            for key, field in ref.items():
                both = field.valid & got[key].valid
                assert np.array_equal(field.values[both], got[key].values[both])

    def test_normalize_gain(self, rng):
        img = rng.uniform(size=(5, 5))
        assert np.array_equal(normalize_gain(img), normalize_gain(img * 1.618))
        assert np.array_equal(normalize_gain(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_snippet_fields(self, bank48, rng):
        frames = rng.uniform(size=(5, 48, 48))
        pairs = snippet_phase_diffs(frames, bank48)
        assert len(pairs) == 4
        for fields in pairs:
            assert sorted(fields) == [(0, 0), (0, 1), (1, 0), (1, 1)]
            for (s, _), f in fields.items():
                assert f.shape == (48 >> s, 48 >> s)
                assert np.all(f.values[f.valid] > -np.pi) and np.all(f.values[f.valid] <= np.pi)
                assert np.all(f.values[~f.valid] == 0)
        direct = pair_phase_diffs(frames[2], frames[3], bank48)
        for key in direct:
            assert np.array_equal(direct[key].values, pairs[2][key].values)

    def test_snippet_errors(self, bank48):
        with pytest.raises(SequenceError):
            snippet_phase_diffs(np.zeros((1, 48, 48)), bank48)
        with pytest.raises(DimensionError):
            snippet_phase_diffs(np.zeros((3, 40, 40)), bank48)


@pytest.fixture(scope="module")
def pairs13(bank48):
    frames = np.random.default_rng(1).uniform(size=(13, 48, 48))
    return snippet_phase_diffs(FrameSequence(frames), bank48)


class TestPacking:
    def test_default_shapes(self, pairs13):
        t0, t1 = pack_snippet(pairs13, n_pairs=12)
        assert t0.shape == (24, 48, 48)
        assert t1.shape == (24, 24, 24)
        assert t0.omega == 2 * t1.omega

    def test_four_pairs(self, pairs13):
        assert pack_snippet(pairs13[:4])[0].shape == (8, 48, 48)

    def test_channel_layout(self, pairs13):
        t0 = pack_snippet(pairs13)[0]
        for c in range(t0.shape[0]):
            t, k = divmod(c, 2)
            assert t0.channel(t, k) == c
            assert np.array_equal(t0.data[c], pairs13[t][0, k].values)

    def test_round_trip(self, pairs13):
        back = unpack_snippet(pack_snippet(pairs13))
        assert len(back) == len(pairs13)
        for a, b in zip(pairs13, back):
            assert sorted(a) == sorted(b)
            for key in a:
                assert np.array_equal(a[key].values, b[key].values)
                assert np.array_equal(a[key].valid, b[key].valid)
                assert a[key].omega == b[key].omega and a[key].angle == b[key].angle

    def test_wrong_count(self, pairs13):
        with pytest.raises(SequenceError):
            pack_snippet(pairs13, n_pairs=4)
        with pytest.raises(SequenceError):
            pack_snippet([])

    def test_snip_file(self, pairs13, tmp_path):
        tensors = pack_snippet(pairs13)
        path = write_snippet(tensors, tmp_path / "s.snip")
        back = read_snippet(path)
        for a, b in zip(tensors, back):
            assert a.shape == b.shape and (a.n_pairs, a.n_orientations) == (b.n_pairs, b.n_orientations)
            np.testing.assert_allclose(b.data, a.data.astype(np.float32))
            assert b.omega == pytest.approx(a.omega, rel=1e-7)
        raw = path.read_bytes()
        (tmp_path / "t.snip").write_bytes(raw[:-1])
        with pytest.raises(FormatError):
            read_snippet(tmp_path / "t.snip")
        (tmp_path / "u.snip").write_bytes(b"XXXX" + raw[4:])
        with pytest.raises(FormatError):
            read_snippet(tmp_path / "u.snip")
