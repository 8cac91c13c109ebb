# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernels.

Mirror of ``_kernels_py``: same signatures, same return tuple, same
expression order. The stepping loops run without the GIL so several
trajectories can be integrated from a thread pool.
"""

import numpy as np
from libc.math cimport fabs, ceil, pow, isfinite
from libc.stdlib cimport malloc, realloc, free

REASON_CONVERGED = 0
REASON_MAX_TIME = 1
STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_UNDERFLOW = 2

cdef enum:
    C_CONVERGED = 0
    C_MAX_TIME = 1
    C_OK = 0
    C_NONFINITE = 1
    C_UNDERFLOW = 2


cdef struct Buffer:
    double* data   # rows of (t, y1, y2, y3)
    Py_ssize_t size
    Py_ssize_t cap
    int oom


cdef inline void buf_push(Buffer* b, double t, double* y) noexcept nogil:
    cdef double* nd
    if b.oom:
        return
    if b.size == b.cap:
        nd = <double*> realloc(b.data, 2 * b.cap * 4 * sizeof(double))
        if nd == NULL:
            b.oom = 1
            return
        b.data = nd
        b.cap = 2 * b.cap
    b.data[4 * b.size] = t
    b.data[4 * b.size + 1] = y[0]
    b.data[4 * b.size + 2] = y[1]
    b.data[4 * b.size + 3] = y[2]
    b.size += 1


cdef object buf_to_arrays(Buffer* b):
    cdef Py_ssize_t i
    times = np.empty(b.size)
    states = np.empty((b.size, 3))
    cdef double[::1] tv = times
    cdef double[:, ::1] sv = states
    for i in range(b.size):
        tv[i] = b.data[4 * i]
        sv[i, 0] = b.data[4 * i + 1]
        sv[i, 1] = b.data[4 * i + 2]
        sv[i, 2] = b.data[4 * i + 3]
    return times, states


cdef inline void rhs(const double* p, double x1, double x2, double n,
                     double* out) noexcept nogil:
    cdef double g1 = p[0] * x1 * n + p[1] * x1 + p[2] * n + p[3]
    cdef double g2 = p[4] * x2 * n + p[5] * x2 + p[6] * n + p[7]
    cdef double h = p[8] * x1 - p[9] * (1.0 - x1) + p[10] * x2 - p[11] * (1.0 - x2)
    out[0] = x1 * (1.0 - x1) * g1
    out[1] = x2 * (1.0 - x2) * g2
    out[2] = p[12] * n * (1.0 - n) * h


cdef inline double excursion(double v) noexcept nogil:
    if v < 0.0:
        return -v
    if v > 1.0:
        return v - 1.0
    return 0.0


cdef inline double dmax(double a, double b) noexcept nogil:
    return a if a > b else b


cdef inline double dmin(double a, double b) noexcept nogil:
    return a if a < b else b


cdef inline double norm_inf(double* k) noexcept nogil:
    return dmax(dmax(fabs(k[0]), fabs(k[1])), fabs(k[2]))


cdef void _load(object src, double* dst, int count) except *:
    cdef int i
    for i in range(count):
        dst[i] = float(src[i])


def integrate_rk4(params, y0, lo, hi, double dt, double t_max, double conv_eps,
                  double conv_window, long save_every):
    cdef double p[13]
    cdef double y[3]
    cdef double z[3]
    cdef double l[3]
    cdef double u[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    _load(params, p, 13)
    _load(y0, y, 3)
    _load(lo, l, 3)
    _load(hi, u, 3)

    cdef long n_max = <long> ceil(t_max / dt - 1e-9)
    cdef long quiet_needed = <long> ceil(conv_window / dt - 1e-9)
    cdef long step = 0
    cdef long quiet = 0
    cdef int reason = C_MAX_TIME
    cdef int status = C_OK
    cdef int recorded_last = 1
    cdef int i
    cdef double t = 0.0
    cdef double max_exc = 0.0
    cdef double e
    cdef double h6 = dt / 6.0
    cdef double half = 0.5 * dt
    cdef Buffer buf
    buf.cap = 1024
    buf.size = 0
    buf.oom = 0
    buf.data = <double*> malloc(buf.cap * 4 * sizeof(double))
    if buf.data == NULL:
        raise MemoryError()

    try:
        with nogil:
            buf_push(&buf, 0.0, y)
            rhs(p, y[0], y[1], y[2], k1)
            while step < n_max:
                rhs(p, y[0] + half * k1[0], y[1] + half * k1[1], y[2] + half * k1[2], k2)
                rhs(p, y[0] + half * k2[0], y[1] + half * k2[1], y[2] + half * k2[2], k3)
                rhs(p, y[0] + dt * k3[0], y[1] + dt * k3[1], y[2] + dt * k3[2], k4)
                for i in range(3):
                    z[i] = y[i] + h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
                if not (isfinite(z[0]) and isfinite(z[1]) and isfinite(z[2])):
                    status = C_NONFINITE
                    break
                e = dmax(dmax(excursion(z[0]), excursion(z[1])), excursion(z[2]))
                if e > max_exc:
                    max_exc = e
                for i in range(3):
                    y[i] = dmin(dmax(z[i], l[i]), u[i])
                step += 1
                t = step * dt
                rhs(p, y[0], y[1], y[2], k1)
                if norm_inf(k1) < conv_eps:
                    quiet += 1
                else:
                    quiet = 0
                recorded_last = step % save_every == 0
                if recorded_last:
                    buf_push(&buf, t, y)
                if quiet >= quiet_needed:
                    reason = C_CONVERGED
                    break
            if not recorded_last:
                buf_push(&buf, t, y)
        if buf.oom:
            raise MemoryError("trajectory buffer")
        times, states = buf_to_arrays(&buf)
    finally:
        free(buf.data)
    return times, states, reason, status, step, max_exc


# Dormand-Prince 5(4) tableau
cdef double C_A21 = 1.0 / 5.0
cdef double C_A31 = 3.0 / 40.0
cdef double C_A32 = 9.0 / 40.0
cdef double C_A41 = 44.0 / 45.0
cdef double C_A42 = -56.0 / 15.0
cdef double C_A43 = 32.0 / 9.0
cdef double C_A51 = 19372.0 / 6561.0
cdef double C_A52 = -25360.0 / 2187.0
cdef double C_A53 = 64448.0 / 6561.0
cdef double C_A54 = -212.0 / 729.0
cdef double C_A61 = 9017.0 / 3168.0
cdef double C_A62 = -355.0 / 33.0
cdef double C_A63 = 46732.0 / 5247.0
cdef double C_A64 = 49.0 / 176.0
cdef double C_A65 = -5103.0 / 18656.0
cdef double C_B1 = 35.0 / 384.0
cdef double C_B3 = 500.0 / 1113.0
cdef double C_B4 = 125.0 / 192.0
cdef double C_B5 = -2187.0 / 6784.0
cdef double C_B6 = 11.0 / 84.0
cdef double C_E1 = 71.0 / 57600.0
cdef double C_E3 = -71.0 / 16695.0
cdef double C_E4 = 71.0 / 1920.0
cdef double C_E5 = -17253.0 / 339200.0
cdef double C_E6 = 22.0 / 525.0
cdef double C_E7 = -1.0 / 40.0


def integrate_dopri(params, y0, lo, hi, double rtol, double atol, double h0,
                    double h_max, double t_max, double conv_eps, double conv_window,
                    long save_every):
    cdef double p[13]
    cdef double y[3]
    cdef double z[3]
    cdef double yt[3]
    cdef double l[3]
    cdef double u[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double k5[3]
    cdef double k6[3]
    cdef double k7[3]
    _load(params, p, 13)
    _load(y0, y, 3)
    _load(lo, l, 3)
    _load(hi, u, 3)

    cdef long step = 0
    cdef int reason = C_MAX_TIME
    cdef int status = C_OK
    cdef int recorded_last = 1
    cdef int clamped
    cdef int i
    cdef double t = 0.0
    cdef double h = dmin(h0, h_max)
    cdef double quiet_time = 0.0
    cdef double max_exc = 0.0
    cdef double e, err, ei, sc, r, v, fac
    cdef Buffer buf
    buf.cap = 1024
    buf.size = 0
    buf.oom = 0
    buf.data = <double*> malloc(buf.cap * 4 * sizeof(double))
    if buf.data == NULL:
        raise MemoryError()

    try:
        with nogil:
            buf_push(&buf, 0.0, y)
            rhs(p, y[0], y[1], y[2], k1)
            while t < t_max:
                if h > t_max - t:
                    h = t_max - t
                if h < 1e-14:
                    status = C_UNDERFLOW
                    break
                for i in range(3):
                    yt[i] = y[i] + h * (C_A21 * k1[i])
                rhs(p, yt[0], yt[1], yt[2], k2)
                for i in range(3):
                    yt[i] = y[i] + h * (C_A31 * k1[i] + C_A32 * k2[i])
                rhs(p, yt[0], yt[1], yt[2], k3)
                for i in range(3):
                    yt[i] = y[i] + h * (C_A41 * k1[i] + C_A42 * k2[i] + C_A43 * k3[i])
                rhs(p, yt[0], yt[1], yt[2], k4)
                for i in range(3):
                    yt[i] = y[i] + h * (C_A51 * k1[i] + C_A52 * k2[i] + C_A53 * k3[i]
                                        + C_A54 * k4[i])
                rhs(p, yt[0], yt[1], yt[2], k5)
                for i in range(3):
                    yt[i] = y[i] + h * (C_A61 * k1[i] + C_A62 * k2[i] + C_A63 * k3[i]
                                        + C_A64 * k4[i] + C_A65 * k5[i])
                rhs(p, yt[0], yt[1], yt[2], k6)
                for i in range(3):
                    z[i] = y[i] + h * (C_B1 * k1[i] + C_B3 * k3[i] + C_B4 * k4[i]
                                       + C_B5 * k5[i] + C_B6 * k6[i])
                if not (isfinite(z[0]) and isfinite(z[1]) and isfinite(z[2])):
                    status = C_NONFINITE
                    break
                rhs(p, z[0], z[1], z[2], k7)
                err = 0.0
                for i in range(3):
                    ei = h * (C_E1 * k1[i] + C_E3 * k3[i] + C_E4 * k4[i] + C_E5 * k5[i]
                              + C_E6 * k6[i] + C_E7 * k7[i])
                    sc = atol + rtol * dmax(fabs(y[i]), fabs(z[i]))
                    r = fabs(ei) / sc
                    if r > err:
                        err = r
                if not isfinite(err):
                    status = C_NONFINITE
                    break
                if err <= 1.0:
                    t = t + h
                    step += 1
                    e = dmax(dmax(excursion(z[0]), excursion(z[1])), excursion(z[2]))
                    if e > max_exc:
                        max_exc = e
                    clamped = 0
                    for i in range(3):
                        v = dmin(dmax(z[i], l[i]), u[i])
                        if v != z[i]:
                            clamped = 1
                        y[i] = v
                    if clamped:
                        rhs(p, y[0], y[1], y[2], k1)
                    else:
                        for i in range(3):
                            k1[i] = k7[i]
                    if norm_inf(k1) < conv_eps:
                        quiet_time += h
                    else:
                        quiet_time = 0.0
                    recorded_last = step % save_every == 0
                    if recorded_last:
                        buf_push(&buf, t, y)
                    if quiet_time >= conv_window:
                        reason = C_CONVERGED
                        break
                    if err == 0.0:
                        fac = 5.0
                    else:
                        fac = dmin(5.0, dmax(0.2, 0.9 * pow(err, -0.2)))
                else:
                    fac = dmax(0.2, 0.9 * pow(err, -0.2))
                h = dmin(h * fac, h_max)
            if not recorded_last:
                buf_push(&buf, t, y)
        if buf.oom:
            raise MemoryError("trajectory buffer")
        times, states = buf_to_arrays(&buf)
    finally:
        free(buf.data)
    return times, states, reason, status, step, max_exc
