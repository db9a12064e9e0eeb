"""Pure NumPy versions of the hot kernels.

Signatures and numerics mirror ``_kernels.pyx`` so the two backends are
interchangeable; results agree to rounding.
"""
import numpy as np

NAME = "python"

_TWO_PI = 2.0 * np.pi


def _neighbour_mean(f):
    # classical Horn-Schunck weights: 1/6 edge neighbours, 1/12 diagonals
    p = np.pad(f, 1, mode="edge")
    edges = p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
    corners = p[:-2, :-2] + p[:-2, 2:] + p[2:, :-2] + p[2:, 2:]
    return edges / 6.0 + corners / 12.0


def horn_schunck_sweeps(ix, iy, it, alpha2, iters):
    """Run ``iters`` synchronous Jacobi sweeps starting from zero flow."""
    ix = np.ascontiguousarray(ix, dtype=np.float64)
    iy = np.ascontiguousarray(iy, dtype=np.float64)
    it = np.ascontiguousarray(it, dtype=np.float64)
    denom = alpha2 + ix * ix + iy * iy
    u = np.zeros_like(ix)
    v = np.zeros_like(ix)
    for _ in range(iters):
        ubar = _neighbour_mean(u)
        vbar = _neighbour_mean(v)
        t = (ix * ubar + iy * vbar + it) / denom
        u = ubar - ix * t
        v = vbar - iy * t
    return u, v


def _circular_taps(n, radius):
    return (np.arange(n)[:, None] + np.arange(-radius, radius + 1)[None, :]) % n


def blur_circular(field, taps):
    """Separable circular correlation of a complex 2-D field with ``taps``.

    ``taps`` is symmetric with odd length; rows are filtered first, then
    columns. Taps longer than the image wrap around more than once.
    """
    field = np.asarray(field, dtype=np.complex128)
    taps = np.asarray(taps, dtype=np.float64)
    radius = (taps.size - 1) // 2
    h, w = field.shape
    rows = field[_circular_taps(h, radius), :]  # (h, k, w)
    tmp = np.zeros((h, w), dtype=np.complex128)
    for k in range(taps.size):
        tmp += taps[k] * rows[:, k, :]
    cols = tmp[:, _circular_taps(w, radius)]  # (h, w, k)
    out = np.zeros((h, w), dtype=np.complex128)
    for k in range(taps.size):
        out += taps[k] * cols[:, :, k]
    return out


def wrapped_difference(phase_t, phase_t1):
    """``phase_t1 - phase_t`` moved into (-pi, pi] by one 2*pi step.

    Inputs are assumed to lie in [-pi, pi], so the raw difference lies in
    (-2*pi, 2*pi) and at most one step is needed.
    """
    d = np.asarray(phase_t1, dtype=np.float64) - np.asarray(phase_t, dtype=np.float64)
    k = np.where(d > np.pi, -1.0, np.where(d <= -np.pi, 1.0, 0.0))
    return d + k * _TWO_PI
