# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 inner loops.

Both kernels take coefficient samples on a half-step grid: sample ``j`` sits at
time ``j * h / 2`` from the start of the integration.
"""

import numpy as np

from libc.math cimport fabs, isfinite

cdef double BLOWUP = 1e150


cdef inline void _riccati_rhs(const double[:, :, ::1] G, const double[:, :, ::1] Q,
                              const double[:, :, ::1] R, Py_ssize_t j,
                              double[:, ::1] P, double[:, ::1] W,
                              double[:, ::1] K, Py_ssize_t n) noexcept nogil:
    # K = G P + P G^T - P Q P + R  (P symmetric, so only the upper triangle)
    cdef Py_ssize_t a, b, c
    cdef double s
    for a in range(n):
        for b in range(n):
            s = 0.0
            for c in range(n):
                s += P[a, c] * Q[j, c, b]
            W[a, b] = s
    for a in range(n):
        for b in range(a, n):
            s = R[j, a, b]
            for c in range(n):
                s += G[j, a, c] * P[c, b] + P[a, c] * G[j, b, c] - W[a, c] * P[c, b]
            K[a, b] = s
            K[b, a] = s


def riccati_period(const double[:, :, ::1] G, const double[:, :, ::1] Q,
                   const double[:, :, ::1] R, double[:, ::1] P0, double h,
                   Py_ssize_t stride, double[:, :, ::1] out):
    """Integrate ``dP/ds = G P + P G^T - P Q P + R`` over ``(len(G) - 1) // 2`` steps.

    Writes ``P`` after every ``stride`` steps into ``out`` (``out[0] = P0``).
    Returns -1 on success, else the index of the step that produced a
    non-finite or runaway value.
    """
    cdef Py_ssize_t n = P0.shape[0]
    cdef Py_ssize_t m = (G.shape[0] - 1) // 2
    cdef Py_ssize_t k, a, b, j
    cdef double half = 0.5 * h, sixth = h / 6.0, v
    P_arr = np.array(P0, dtype=np.float64, copy=True)
    cdef double[:, ::1] P = P_arr
    cdef double[:, ::1] Pt = np.empty((n, n))
    cdef double[:, ::1] W = np.empty((n, n))
    cdef double[:, ::1] k1 = np.empty((n, n))
    cdef double[:, ::1] k2 = np.empty((n, n))
    cdef double[:, ::1] k3 = np.empty((n, n))
    cdef double[:, ::1] k4 = np.empty((n, n))
    cdef Py_ssize_t failed = -1
    with nogil:
        for a in range(n):
            for b in range(n):
                out[0, a, b] = P[a, b]
        for k in range(m):
            j = 2 * k
            _riccati_rhs(G, Q, R, j, P, W, k1, n)
            for a in range(n):
                for b in range(n):
                    Pt[a, b] = P[a, b] + half * k1[a, b]
            _riccati_rhs(G, Q, R, j + 1, Pt, W, k2, n)
            for a in range(n):
                for b in range(n):
                    Pt[a, b] = P[a, b] + half * k2[a, b]
            _riccati_rhs(G, Q, R, j + 1, Pt, W, k3, n)
            for a in range(n):
                for b in range(n):
                    Pt[a, b] = P[a, b] + h * k3[a, b]
            _riccati_rhs(G, Q, R, j + 2, Pt, W, k4, n)
            for a in range(n):
                for b in range(a, n):
                    v = 0.5 * (
                        P[a, b] + sixth * (k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b])
                        + P[b, a] + sixth * (k1[b, a] + 2.0 * k2[b, a] + 2.0 * k3[b, a] + k4[b, a])
                    )
                    if not isfinite(v) or fabs(v) > BLOWUP:
                        failed = k
                    P[a, b] = v
                    P[b, a] = v
            if failed >= 0:
                break
            if (k + 1) % stride == 0:
                for a in range(n):
                    for b in range(n):
                        out[(k + 1) // stride, a, b] = P[a, b]
    return failed


cdef inline void _linear_rhs(const double[:, :, ::1] A, const double[:, ::1] f,
                             Py_ssize_t j, double[::1] x, double[::1] dx,
                             Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t a, c
    cdef double s
    for a in range(n):
        s = f[j, a]
        for c in range(n):
            s += A[j, a, c] * x[c]
        dx[a] = s


def linear_rk4(const double[:, :, ::1] A, const double[:, ::1] f, double[::1] x0,
               double h, Py_ssize_t n_steps, double[:, ::1] out):
    """Integrate ``dx/dt = A(t) x + f(t)`` with periodic half-step samples.

    ``A`` and ``f`` hold ``2 M`` samples covering one period; sample indices
    wrap modulo ``2 M``.  ``out`` receives ``n_steps + 1`` states.  Returns -1
    on success, else the failing step index.
    """
    cdef Py_ssize_t n = x0.shape[0]
    cdef Py_ssize_t period = A.shape[0]
    cdef Py_ssize_t k, a, j0, j1, j2
    cdef double half = 0.5 * h, sixth = h / 6.0, v
    cdef double[::1] x = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] xt = np.empty(n)
    cdef double[::1] k1 = np.empty(n)
    cdef double[::1] k2 = np.empty(n)
    cdef double[::1] k3 = np.empty(n)
    cdef double[::1] k4 = np.empty(n)
    cdef Py_ssize_t failed = -1
    with nogil:
        for a in range(n):
            out[0, a] = x[a]
        for k in range(n_steps):
            j0 = (2 * k) % period
            j1 = (2 * k + 1) % period
            j2 = (2 * k + 2) % period
            _linear_rhs(A, f, j0, x, k1, n)
            for a in range(n):
                xt[a] = x[a] + half * k1[a]
            _linear_rhs(A, f, j1, xt, k2, n)
            for a in range(n):
                xt[a] = x[a] + half * k2[a]
            _linear_rhs(A, f, j1, xt, k3, n)
            for a in range(n):
                xt[a] = x[a] + h * k3[a]
            _linear_rhs(A, f, j2, xt, k4, n)
            for a in range(n):
                v = x[a] + sixth * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a])
                if not isfinite(v) or fabs(v) > BLOWUP:
                    failed = k
                x[a] = v
                out[k + 1, a] = v
            if failed >= 0:
                break
    return failed
