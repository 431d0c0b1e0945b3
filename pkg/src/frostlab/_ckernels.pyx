"""Compiled hot loops.  Each function mirrors one in ``_pykernels``."""
import numpy as np

from cython.parallel import prange
from libc.math cimport floor, pow


def riesz_rows(const double[:, ::1] x, const double[::1] w, double s,
               double eps, int nthreads=1):
    """Row sums ``r_i = sum_j w_j max(|x_i - x_j|, eps)**-s``.

    The diagonal is skipped when ``eps == 0``.  Each row is accumulated
    sequentially by one thread, so the output is thread-count independent.
    """
    cdef Py_ssize_t n = x.shape[0], dim = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double e2 = eps * eps, expo = -0.5 * s
    cdef double acc, r2, diff
    out = np.empty(n)
    cdef double[::1] o = out
    for i in prange(n, nogil=True, schedule="static", num_threads=nthreads):
        acc = 0.0
        for j in range(n):
            if j == i and eps == 0.0:
                continue
            r2 = 0.0
            for k in range(dim):
                diff = x[i, k] - x[j, k]
                r2 = r2 + diff * diff
            if r2 < e2:
                r2 = e2
            acc = acc + w[j] * pow(r2, expo)
        o[i] = acc
    return out


def riesz_potential(const double[:, ::1] x, const double[::1] w,
                    const double[:, ::1] probes, double s, double eps,
                    int nthreads=1):
    """``sum_i w_i max(|x_i - y|, eps)**-s`` for every probe ``y``."""
    cdef Py_ssize_t n = x.shape[0], m = probes.shape[0], dim = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double e2 = eps * eps, expo = -0.5 * s
    cdef double acc, r2, diff
    out = np.empty(m)
    cdef double[::1] o = out
    for j in prange(m, nogil=True, schedule="static", num_threads=nthreads):
        acc = 0.0
        for i in range(n):
            r2 = 0.0
            for k in range(dim):
                diff = probes[j, k] - x[i, k]
                r2 = r2 + diff * diff
            if r2 < e2:
                r2 = e2
            acc = acc + w[i] * pow(r2, expo)
        o[j] = acc
    return out


def linear_bin(const double[:, ::1] u, const double[::1] w,
               const double[::1] origin, double h, shape):
    """Cloud-in-cell deposit of weighted points onto a regular grid.

    Points whose stencil leaves the grid are an error of the caller; they
    are clipped here to keep memory safe.
    """
    cdef Py_ssize_t npts = u.shape[0], dim = u.shape[1]
    cdef Py_ssize_t p, k, c, flat, stride, idx
    cdef long ncorner = 1 << dim
    cdef double pos, frac, coef
    shp = np.asarray(shape, dtype=np.int64)
    cdef long[::1] sh = shp
    grid = np.zeros(int(np.prod(shp)))
    cdef double[::1] g = grid
    cdef long[8] base
    cdef double[8] fr
    for p in range(npts):
        for k in range(dim):
            pos = (u[p, k] - origin[k]) / h
            base[k] = <long>floor(pos)
            if base[k] < 0:
                base[k] = 0
            if base[k] > sh[k] - 2:
                base[k] = sh[k] - 2
            fr[k] = pos - base[k]
        for c in range(ncorner):
            coef = w[p]
            flat = 0
            for k in range(dim):
                if (c >> k) & 1:
                    coef = coef * fr[k]
                    idx = base[k] + 1
                else:
                    coef = coef * (1.0 - fr[k])
                    idx = base[k]
                flat = flat * sh[k] + idx
            g[flat] += coef
    return grid.reshape(tuple(shp))


def p_grid_max(int d, int n, double s_mu, double s_nu, int num, int nthreads=1):
    """Brute-force maximum of ``2n/(n+t) * (1 + (s+t-2n)/(2(d-alpha)))``.

    Scans ``s, alpha`` over ``linspace(0, s_mu, num)`` and ``t`` over
    ``linspace(0, s_nu, num)`` subject to ``s + t >= 2n``.  Returns
    ``(value, i_s, i_alpha, i_t)``; ``value`` is ``-inf`` if nothing is
    feasible.
    """
    cdef Py_ssize_t ia, it, js
    cdef double step_s = s_mu / (num - 1), step_t = s_nu / (num - 1)
    cdef double alpha, inv, t, amp, s, val, excess
    cdef double two_n = 2.0 * n
    best = np.full(num, -np.inf)
    bs = np.zeros(num, dtype=np.int64)
    bt = np.zeros(num, dtype=np.int64)
    cdef double[::1] best_v = best
    cdef long[::1] best_s = bs
    cdef long[::1] best_t = bt
    for ia in prange(num, nogil=True, schedule="static", num_threads=nthreads):
        alpha = ia * step_s
        inv = 1.0 / (2.0 * (d - alpha))
        for it in range(num):
            t = it * step_t
            amp = two_n / (n + t)
            for js in range(num):
                s = js * step_s
                excess = s + t - two_n
                if excess < -1e-12:
                    continue
                val = amp * (1.0 + excess * inv)
                if val > best_v[ia]:
                    best_v[ia] = val
                    best_s[ia] = js
                    best_t[ia] = it
    k = int(np.argmax(best))
    return float(best[k]), int(bs[k]), k, int(bt[k])
