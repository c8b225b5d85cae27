# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled mirror-descent loop. Same contract as ``_mda_py.run_mda``."""

import numpy as np

from libc.math cimport fabs, pow, isfinite

cdef enum:
    STATUS_MAX_ITERS = 0
    STATUS_GRAD_TOL = 1
    STATUS_NON_FINITE = 2

cdef double PROJECTION_SLACK = 1e-13  # same as rkbs.PROJECTION_SLACK


cdef double _norm(double[::1] v, double e) noexcept nogil:
    cdef Py_ssize_t i, k = v.shape[0]
    cdef double m = 0.0, s = 0.0, a
    for i in range(k):
        a = fabs(v[i])
        if a > m:
            m = a
    if m == 0.0:
        return 0.0
    for i in range(k):
        s += pow(fabs(v[i]) / m, e)
    return m * pow(s, 1.0 / e)


cdef inline double _sign(double x) noexcept nogil:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


cdef void _dmap(double[::1] v, double e, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, k = v.shape[0]
    cdef double n = _norm(v, e)
    if n == 0.0:
        for i in range(k):
            out[i] = 0.0
        return
    for i in range(k):
        out[i] = _sign(v[i]) * pow(fabs(v[i]) / n, e - 1.0) * n


cdef void _dmap_alg1(double[::1] v, double e, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, k = v.shape[0]
    cdef double n = _norm(v, e)
    if n == 0.0:
        for i in range(k):
            out[i] = 0.0
        return
    for i in range(k):
        out[i] = _sign(v[i]) * pow(fabs(v[i]) / n, e - 1.0)


cdef void _residual(double[:, ::1] H, double[::1] Y, double[::1] alpha, double[::1] r) noexcept nogil:
    cdef Py_ssize_t i, j, n = H.shape[0], k = H.shape[1]
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(k):
            s += H[i, j] * alpha[j]
        r[i] = s - Y[i]


cdef void _htr(double[:, ::1] H, double[::1] r, double[::1] g) noexcept nogil:
    cdef Py_ssize_t i, j, n = H.shape[0], k = H.shape[1]
    for j in range(k):
        g[j] = 0.0
    for i in range(n):
        for j in range(k):
            g[j] += H[i, j] * r[i]


cdef double _sumsq(double[::1] v) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(v.shape[0]):
        s += v[i] * v[i]
    return s


cdef bint _all_finite(double[::1] v) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(v.shape[0]):
        if not isfinite(v[i]):
            return False
    return True


cdef Py_ssize_t _record(double loss, double[::1] alpha, double[::1] beta, double[::1] g,
                        double p, double q, double[:, ::1] rec, Py_ssize_t m, Py_ssize_t t) noexcept nogil:
    rec[m, 0] = <double>t
    rec[m, 1] = loss
    rec[m, 2] = _norm(alpha, p)
    rec[m, 3] = _norm(beta, q)
    rec[m, 4] = _norm(g, q)
    return m + 1


def run_mda(H_in, Y_in, beta0, alpha0, double p, double eta, double lam,
            Py_ssize_t iterations, Py_ssize_t stride, double tol,
            bint canonical, bint exact, double radius, bint agile):
    cdef double[:, ::1] H = np.ascontiguousarray(H_in, dtype=np.float64)
    cdef double[::1] Y = np.ascontiguousarray(Y_in, dtype=np.float64)
    cdef Py_ssize_t n = H.shape[0], k = H.shape[1]
    if not canonical and n != k:
        raise ValueError("adjoint form needs as many centers as samples")
    alpha_arr = np.array(alpha0, dtype=np.float64)
    beta_arr = np.array(beta0, dtype=np.float64)
    sum_arr = np.zeros(k)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] beta = beta_arr
    cdef double[::1] alpha_sum = sum_arr
    cdef double[::1] alpha_new = np.empty(k)
    cdef double[::1] beta_new = np.empty(k)
    cdef double[::1] r = np.empty(n)
    cdef double[::1] g = np.empty(k)
    cdef double[::1] r_new = np.empty(n)
    cdef double[::1] g_new = np.empty(k)
    cdef double[::1] direction = np.empty(k)
    rec_arr = np.empty((iterations // stride + 2, 5))
    cdef double[:, ::1] rec = rec_arr

    cdef double q = 2.0 if p == 2.0 else p / (p - 1.0)
    cdef double shrink = 1.0 - 2.0 * eta * lam
    cdef double nrm, factor, loss, loss_new
    cdef Py_ssize_t t, j, m = 0, steps = 0, last_rec = 0
    cdef int status = STATUS_MAX_ITERS

    with nogil:
        # residual, loss and H^T r of the current iterate; a candidate step is
        # accepted only if all of them are finite, so every record is finite
        _residual(H, Y, alpha, r)
        _htr(H, r, g)
        loss = _sumsq(r)
        m = _record(loss, alpha, beta, g, p, q, rec, m, 0)
        for t in range(1, iterations + 1):
            for j in range(k):
                direction[j] = 2.0 * g[j] if canonical else r[j]
            if tol >= 0.0:
                for j in range(k):
                    beta_new[j] = direction[j] + 2.0 * lam * beta[j]
                if _norm(beta_new, q) <= tol:
                    status = STATUS_GRAD_TOL
                    break
            for j in range(k):
                beta_new[j] = shrink * beta[j] - eta * direction[j]
            if exact:
                _dmap(beta_new, q, alpha_new)
            else:
                _dmap_alg1(beta_new, q, alpha_new)
            if radius > 0.0:
                nrm = _norm(alpha_new, p)
                if nrm > radius * (1.0 + PROJECTION_SLACK):
                    factor = radius / nrm
                    for j in range(k):
                        alpha_new[j] = alpha_new[j] * factor
                    if agile:
                        _dmap(alpha_new, p, beta_new)
            _residual(H, Y, alpha_new, r_new)
            _htr(H, r_new, g_new)
            loss_new = _sumsq(r_new)
            if not (isfinite(loss_new) and _all_finite(g_new)
                    and _all_finite(alpha_new) and _all_finite(beta_new)):
                status = STATUS_NON_FINITE
                break
            for j in range(k):
                alpha[j] = alpha_new[j]
                beta[j] = beta_new[j]
                g[j] = g_new[j]
                alpha_sum[j] += alpha_new[j]
            for j in range(n):
                r[j] = r_new[j]
            loss = loss_new
            steps = t
            if t % stride == 0 and t != iterations:
                m = _record(loss, alpha, beta, g, p, q, rec, m, t)
                last_rec = t
        if last_rec != steps:
            m = _record(loss, alpha, beta, g, p, q, rec, m, steps)

    return alpha_arr, beta_arr, sum_arr, steps, status, rec_arr[:m].copy()
