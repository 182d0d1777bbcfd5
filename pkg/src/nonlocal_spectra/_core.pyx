# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; see _pycore for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from scipy.linalg.cython_blas cimport dgemv, ddot, dnrm2

cnp.import_array()

cdef enum:
    CONVERGED = 0
    MAX_ITER = 1
    NOT_MONOTONE = 2
    BELOW_FLOOR = 3


cdef inline void _matvec(const double[:, ::1] A, double* x, double* y) noexcept nogil:
    # C-contiguous A reads as A^T in column-major order; 'T' undoes that.
    cdef int n = <int>A.shape[0]
    cdef int m = <int>A.shape[1]
    cdef int inc = 1
    cdef double one = 1.0, zero = 0.0
    cdef char trans = b'T'
    dgemv(&trans, &m, &n, &one, &A[0, 0], &m, x, &inc, &zero, y, &inc)


def direct_convolve(f, g, double dx):
    cdef const double[::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t nf = fv.shape[0], ng = gv.shape[0]
    out = np.zeros(nf + ng - 1)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double fj
    with nogil:
        for j in range(nf):
            fj = fv[j]
            if fj == 0.0:
                continue
            for i in range(ng):
                o[i + j] += fj * gv[i]
        for i in range(nf + ng - 1):
            o[i] *= dx
    return out


def window_average(u, int w, double theta, bint periodic):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double edge = 0.5 + theta - 0.5 * theta * theta
    cdef double tip = 0.5 * theta * theta
    cdef double norm = 2.0 * (w + theta)
    cdef Py_ssize_t i, m, j
    cdef double acc, wt
    with nogil:
        for i in range(n):
            acc = 0.0
            for m in range(-w - 1, w + 2):
                if m == -w - 1 or m == w + 1:
                    wt = tip
                elif m == -w or m == w:
                    wt = edge
                else:
                    wt = 1.0
                if wt == 0.0:
                    continue
                j = i + m
                if periodic:
                    j = j % n
                    if j < 0:
                        j += n
                elif j < 0 or j >= n:
                    continue
                acc += wt * uv[j]
            o[i] = acc / norm
    return out


def power_iterate(B, x0, double scale, double tol, int max_iter):
    cdef const double[:, ::1] A = np.ascontiguousarray(B, dtype=np.float64)
    x_arr = np.array(x0, dtype=np.float64)
    y_arr = np.empty_like(x_arr)
    cdef double[::1] x = x_arr
    cdef double[::1] y = y_arr
    cdef int n = <int>x.shape[0], inc = 1, it = 0
    cdef Py_ssize_t i
    cdef double nrm, mu = np.inf, res = np.inf, d
    with nogil:
        nrm = dnrm2(&n, &x[0], &inc)
        for i in range(n):
            x[i] /= nrm
        it = 1
        while it <= max_iter:
            _matvec(A, &x[0], &y[0])
            mu = ddot(&n, &x[0], &inc, &y[0], &inc)
            res = 0.0
            for i in range(n):
                d = fabs(y[i] - mu * x[i])
                if d > res:
                    res = d
            res *= scale
            if res <= tol:
                break
            nrm = dnrm2(&n, &y[0], &inc)
            for i in range(n):
                x[i] = y[i] / nrm
            it += 1
        if it > max_iter:
            it = max_iter
    return x_arr, mu, res, it


def kpp_monotone(W, a, u0, double tau, double tol, int max_iter, int direction,
                 double floor_, double mono_tol):
    cdef const double[:, ::1] A = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    u_arr = np.array(u0, dtype=np.float64)
    cdef double[::1] u = u_arr
    cdef int n = <int>u.shape[0]
    wu_arr = np.empty(n)
    du_arr = np.empty(n)
    steps_arr = np.empty(max_iter)
    cdef double[::1] wu = wu_arr
    cdef double[::1] du = du_arr
    cdef double[::1] steps = steps_arr
    cdef int it = 0, status = MAX_ITER
    cdef Py_ssize_t i, witness = -1
    cdef double s, umax, worst
    with nogil:
        it = 1
        while it <= max_iter:
            _matvec(A, &u[0], &wu[0])
            worst = 0.0
            for i in range(n):
                du[i] = tau * (wu[i] - u[i] + u[i] * (av[i] - u[i]))
                if direction > 0 and -du[i] > mono_tol and -du[i] > worst:
                    worst = -du[i]
                    witness = i
                elif direction < 0 and du[i] > mono_tol and du[i] > worst:
                    worst = du[i]
                    witness = i
            if witness >= 0:
                status = NOT_MONOTONE
                break
            s = 0.0
            umax = -1e300
            for i in range(n):
                u[i] += du[i]
                if fabs(du[i]) > s:
                    s = fabs(du[i])
                if u[i] > umax:
                    umax = u[i]
            steps[it - 1] = s
            if s < tol:
                status = CONVERGED
                break
            if floor_ > 0 and umax <= floor_:
                status = BELOW_FLOOR
                break
            it += 1
        if it > max_iter:
            it = max_iter
    if status == NOT_MONOTONE:
        return u_arr, it, steps_arr[:it - 1].copy(), status, int(witness)
    return u_arr, it, steps_arr[:it].copy(), status, -1
