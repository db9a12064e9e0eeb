# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: Horn-Schunck Jacobi sweeps, circular separable blur
and wrapped phase differences.

Operation order follows ``_kernels_py`` term by term so both backends round
identically on IEEE hardware without contraction.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "cython"

cdef double PI = np.pi
cdef double TWO_PI = 2.0 * np.pi


cdef inline Py_ssize_t _clamp(Py_ssize_t i, Py_ssize_t n) nogil:
    if i < 0:
        return 0
    if i >= n:
        return n - 1
    return i


cdef void _neighbour_mean(double[:, ::1] f, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t h = f.shape[0], w = f.shape[1]
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double edges, corners
    for i in range(h):
        im = _clamp(i - 1, h)
        ip = _clamp(i + 1, h)
        for j in range(w):
            jm = _clamp(j - 1, w)
            jp = _clamp(j + 1, w)
            edges = f[im, j] + f[ip, j] + f[i, jm] + f[i, jp]
            corners = f[im, jm] + f[im, jp] + f[ip, jm] + f[ip, jp]
            out[i, j] = edges / 6.0 + corners / 12.0


def horn_schunck_sweeps(ix, iy, it, double alpha2, int iters):
    cdef double[:, ::1] gx = np.ascontiguousarray(ix, dtype=np.float64)
    cdef double[:, ::1] gy = np.ascontiguousarray(iy, dtype=np.float64)
    cdef double[:, ::1] gt = np.ascontiguousarray(it, dtype=np.float64)
    cdef Py_ssize_t h = gx.shape[0], w = gx.shape[1]
    if gy.shape[0] != h or gy.shape[1] != w or gt.shape[0] != h or gt.shape[1] != w:
        raise ValueError("gradient planes differ in shape")
    u_arr = np.zeros((h, w), dtype=np.float64)
    v_arr = np.zeros((h, w), dtype=np.float64)
    denom_arr = alpha2 + np.asarray(gx) * np.asarray(gx) + np.asarray(gy) * np.asarray(gy)
    cdef double[:, ::1] u = u_arr
    cdef double[:, ::1] v = v_arr
    cdef double[:, ::1] denom = denom_arr
    cdef double[:, ::1] ubar = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] vbar = np.empty((h, w), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef int n
    cdef double t
    with nogil:
        for n in range(iters):
            _neighbour_mean(u, ubar)
            _neighbour_mean(v, vbar)
            for i in range(h):
                for j in range(w):
                    t = (gx[i, j] * ubar[i, j] + gy[i, j] * vbar[i, j] + gt[i, j]) / denom[i, j]
                    u[i, j] = ubar[i, j] - gx[i, j] * t
                    v[i, j] = vbar[i, j] - gy[i, j] * t
    return u_arr, v_arr


def blur_circular(field, taps):
    arr = np.asarray(field, dtype=np.complex128)
    cdef double[:, ::1] re = np.ascontiguousarray(arr.real)
    cdef double[:, ::1] im = np.ascontiguousarray(arr.imag)
    cdef double[::1] g = np.ascontiguousarray(taps, dtype=np.float64)
    cdef Py_ssize_t h = re.shape[0], w = re.shape[1]
    cdef Py_ssize_t ntap = g.shape[0]
    cdef Py_ssize_t radius = (ntap - 1) // 2
    cdef double[:, ::1] tre = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] tim = np.zeros((h, w), dtype=np.float64)
    out_re_arr = np.zeros((h, w), dtype=np.float64)
    out_im_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] ore = out_re_arr
    cdef double[:, ::1] oim = out_im_arr
    cdef Py_ssize_t i, j, k, src
    cdef double gk
    with nogil:
        for i in range(h):
            for k in range(ntap):
                gk = g[k]
                src = (i + k - radius) % h
                if src < 0:
                    src = src + h
                for j in range(w):
                    tre[i, j] = tre[i, j] + gk * re[src, j]
                    tim[i, j] = tim[i, j] + gk * im[src, j]
        for i in range(h):
            for j in range(w):
                for k in range(ntap):
                    src = (j + k - radius) % w
                    if src < 0:
                        src = src + w
                    ore[i, j] = ore[i, j] + g[k] * tre[i, src]
                    oim[i, j] = oim[i, j] + g[k] * tim[i, src]
    out = np.empty((h, w), dtype=np.complex128)
    out.real = out_re_arr
    out.imag = out_im_arr
    return out


def wrapped_difference(phase_t, phase_t1):
    cdef double[:, ::1] a = np.ascontiguousarray(phase_t, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(phase_t1, dtype=np.float64)
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1]
    if b.shape[0] != h or b.shape[1] != w:
        raise ValueError("phase planes differ in shape")
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double d
    with nogil:
        for i in range(h):
            for j in range(w):
                d = b[i, j] - a[i, j]
                if d > PI:
                    d = d + (-1.0) * TWO_PI
                elif d <= -PI:
                    d = d + 1.0 * TWO_PI
                out[i, j] = d
    return out_arr
