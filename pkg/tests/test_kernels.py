import importlib

import numpy as np
import pytest

from phasemotion import _backend, _kernels_py


def test_python_backend_always_available():
    assert "python" in _backend.available()


def test_compiled_backend_built():
    # the editable install compiles the extension; auto prefers it
    pytest.importorskip("phasemotion._kernels")
    assert "cython" in _backend.available()
    with _backend.use("auto"):
        assert _backend.active_name() == "cython"


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        _backend.set_backend("fortran")


def test_env_override_selects_python(monkeypatch):
    monkeypatch.setenv("PHASEMOTION_BACKEND", "python")
    reloaded = importlib.reload(_backend)
    try:
        assert reloaded.active_name() == "python"
    finally:
        monkeypatch.delenv("PHASEMOTION_BACKEND")
        importlib.reload(_backend)


def test_thread_cap_parsing(monkeypatch):
    monkeypatch.setenv("PHASEMOTION_THREADS", "3")
    assert _backend.fft_workers() == 3
    monkeypatch.setenv("PHASEMOTION_THREADS", "junk")
    assert _backend.fft_workers() == 1
    monkeypatch.setenv("PHASEMOTION_THREADS", "0")
    assert _backend.fft_workers() == 1


@pytest.fixture
def compiled():
    return pytest.importorskip("phasemotion._kernels")


def test_horn_schunck_backends_agree(compiled, rng):
    ix, iy, it = rng.normal(size=(3, 17, 23)) * 20
    u0, v0 = _kernels_py.horn_schunck_sweeps(ix, iy, it, 225.0, 30)
    u1, v1 = compiled.horn_schunck_sweeps(ix, iy, it, 225.0, 30)
    np.testing.assert_allclose(u1, u0, rtol=0, atol=1e-12)
    np.testing.assert_allclose(v1, v0, rtol=0, atol=1e-12)


@pytest.mark.parametrize("shape,ntaps", [((9, 13), 5), ((4, 6), 13), ((16, 16), 1)])
def test_blur_backends_agree(compiled, rng, shape, ntaps):
    z = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    taps = np.hanning(ntaps + 2)[1:-1]
    np.testing.assert_allclose(compiled.blur_circular(z, taps), _kernels_py.blur_circular(z, taps),
                               rtol=0, atol=1e-12)


def test_blur_matches_direct_2d_sum(backend, rng):
    # oracle: explicit double sum over the 2-D tap grid with modular indices
    z = rng.normal(size=(5, 7)) + 1j * rng.normal(size=(5, 7))
    taps = np.array([0.1, 0.2, 0.4, 0.2, 0.1])
    expected = np.zeros_like(z)
    for i in range(5):
        for j in range(7):
            for a in range(-2, 3):
                for b in range(-2, 3):
                    expected[i, j] += taps[a + 2] * taps[b + 2] * z[(i + a) % 5, (j + b) % 7]
    got = _backend.kernels().blur_circular(z, taps)
    np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)


def test_wrapped_difference_backends_agree(compiled, rng):
    a = rng.uniform(-np.pi, np.pi, (31, 29))
    b = rng.uniform(-np.pi, np.pi, (31, 29))
    np.testing.assert_array_equal(compiled.wrapped_difference(a, b), _kernels_py.wrapped_difference(a, b))
