# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np

from libc.math cimport fabs, floor, sqrt

cdef int FOLDED = 0
cdef int ODD = 1
cdef int EVEN = 2
cdef int CONJUGATE = 3
cdef int HURWITZ = 4
# relative tolerance that sends rounding ties of the Hurwitz digit upwards
cdef double TIE = 4.440892098500626e-16


cdef inline double _step(int code, double x, double g_small, double g_sq) noexcept nogil:
    cdef double u, r, z, i
    if code == CONJUGATE:
        if x <= 0.0 or x >= 1.0:
            return 0.0
        z = x if x <= 0.5 else 1.0 - x
        u = 1.0 / z
        if u > 1.7976931348623157e308:
            return 0.0
        return u - floor(u)
    if x == 0.0 or fabs(x) < 1.1125369292536007e-308:
        # 1/|x| overflows; the image of any |x| < 2**-53 rounds to 0 anyway
        return 0.0
    if code == FOLDED:
        u = 1.0 / x
        return fabs(u - floor(u + 0.5))
    if code == ODD:
        u = 1.0 / fabs(x)
        r = u - floor(u + 0.5)
        return -r if x < 0.0 else r
    if code == EVEN:
        u = 1.0 / fabs(x)
        return u - floor(u + 0.5)
    # HURWITZ
    u = 1.0 / x
    i = floor(u + g_sq + TIE * u)
    if i < 2.0:
        i = 2.0
    r = u - i
    # exact images lie in [0, g**2] after a -1 sign and in [0, g] after +1
    if r < 0.0:
        return g_sq if -r > g_sq else -r
    return g_small if r > g_small else r


def map_step(int code, x):
    return iterate_map(code, x, 1)


def iterate_map(int code, x, int n):
    if code < 0 or code > 4:
        raise ValueError(f"unknown map code {code}")
    cdef double[::1] y = np.array(x, dtype=np.float64, copy=True).ravel()
    cdef double sq5 = sqrt(5.0)
    cdef double g_small = (sq5 - 1.0) / 2.0
    cdef double g_sq = (3.0 - sq5) / 2.0
    cdef Py_ssize_t i, m = y.shape[0]
    cdef int step
    with nogil:
        # steps outermost: neighbouring elements are independent, so their
        # divisions overlap instead of waiting on one orbit's chain
        for step in range(n):
            for i in range(m):
                y[i] = _step(code, y[i], g_small, g_sq)
    return np.asarray(y).reshape(np.shape(x))


def barycentric_eval(const double[::1] nodes, const double[::1] bweights,
                     const double[::1] values, x):
    xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] xs = xa.ravel()
    out_arr = np.empty(xs.shape[0])
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, n = nodes.shape[0], m = xs.shape[0]
    cdef double num, den, t, d
    cdef int hit
    with nogil:
        for i in range(m):
            num = 0.0
            den = 0.0
            hit = -1
            for j in range(n):
                d = xs[i] - nodes[j]
                if d == 0.0:
                    hit = j
                    break
                t = bweights[j] / d
                num += t * values[j]
                den += t
            out[i] = values[hit] if hit >= 0 else num / den
    return out_arr.reshape(xa.shape)


def accumulate_branches(const double[::1] nodes, const double[::1] bweights,
                        const double[:, ::1] points, const double[:, ::1] weights,
                        double[:, ::1] out):
    cdef Py_ssize_t k, i, j, hit
    cdef Py_ssize_t nk = points.shape[0], m = points.shape[1], n = nodes.shape[0]
    cdef double x, d, s, w
    cdef double[::1] t = np.empty(n)
    with nogil:
        for k in range(nk):
            for i in range(m):
                x = points[k, i]
                w = weights[k, i]
                hit = -1
                s = 0.0
                for j in range(n):
                    d = x - nodes[j]
                    if d == 0.0:
                        hit = j
                        break
                    t[j] = bweights[j] / d
                    s += t[j]
                if hit >= 0:
                    out[i, hit] += w
                else:
                    s = w / s
                    for j in range(n):
                        out[i, j] += t[j] * s
    return np.asarray(out)
