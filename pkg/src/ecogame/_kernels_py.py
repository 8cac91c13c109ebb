"""Pure-Python integration kernels.

Fallback for ``_kernels.pyx``; both modules expose the same two functions
with the same argument order and return tuple, and evaluate every
floating-point expression in the same order so results agree to rounding.

``params`` layout (13 doubles)::

    a1 b1 c1 d1 a2 b2 c2 d2 theta1 alpha1 theta2 alpha2 epsilon

Return value of both integrators::

    (times, states, reason, status, n_steps, max_excursion)

reason: 0 converged, 1 hit t_max. status: 0 ok, 1 non-finite state,
2 step size underflow (adaptive only). ``max_excursion`` is the largest
distance any coordinate was found outside [0, 1] before clamping.
"""

import math

import numpy as np

REASON_CONVERGED = 0
REASON_MAX_TIME = 1
STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_UNDERFLOW = 2


def rhs(p, x1, x2, n):
    g1 = p[0] * x1 * n + p[1] * x1 + p[2] * n + p[3]
    g2 = p[4] * x2 * n + p[5] * x2 + p[6] * n + p[7]
    h = p[8] * x1 - p[9] * (1.0 - x1) + p[10] * x2 - p[11] * (1.0 - x2)
    return (
        x1 * (1.0 - x1) * g1,
        x2 * (1.0 - x2) * g2,
        p[12] * n * (1.0 - n) * h,
    )


def _excursion(v):
    if v < 0.0:
        return -v
    if v > 1.0:
        return v - 1.0
    return 0.0


def integrate_rk4(params, y0, lo, hi, dt, t_max, conv_eps, conv_window, save_every):
    p = [float(v) for v in params]
    y1, y2, y3 = (float(v) for v in y0)
    lo1, lo2, lo3 = (float(v) for v in lo)
    hi1, hi2, hi3 = (float(v) for v in hi)
    n_max = int(math.ceil(t_max / dt - 1e-9))
    quiet_steps_needed = int(math.ceil(conv_window / dt - 1e-9))

    times = [0.0]
    states = [(y1, y2, y3)]
    reason = REASON_MAX_TIME
    status = STATUS_OK
    quiet = 0
    max_exc = 0.0
    step = 0
    t = 0.0
    k11, k12, k13 = rhs(p, y1, y2, y3)
    recorded_last = True
    h6 = dt / 6.0
    half = 0.5 * dt

    while step < n_max:
        k21, k22, k23 = rhs(p, y1 + half * k11, y2 + half * k12, y3 + half * k13)
        k31, k32, k33 = rhs(p, y1 + half * k21, y2 + half * k22, y3 + half * k23)
        k41, k42, k43 = rhs(p, y1 + dt * k31, y2 + dt * k32, y3 + dt * k33)
        z1 = y1 + h6 * (k11 + 2.0 * (k21 + k31) + k41)
        z2 = y2 + h6 * (k12 + 2.0 * (k22 + k32) + k42)
        z3 = y3 + h6 * (k13 + 2.0 * (k23 + k33) + k43)
        if not (math.isfinite(z1) and math.isfinite(z2) and math.isfinite(z3)):
            status = STATUS_NONFINITE
            break
        e = max(_excursion(z1), _excursion(z2), _excursion(z3))
        if e > max_exc:
            max_exc = e
        y1 = min(max(z1, lo1), hi1)
        y2 = min(max(z2, lo2), hi2)
        y3 = min(max(z3, lo3), hi3)
        step += 1
        t = step * dt
        k11, k12, k13 = rhs(p, y1, y2, y3)
        if max(abs(k11), abs(k12), abs(k13)) < conv_eps:
            quiet += 1
        else:
            quiet = 0
        recorded_last = step % save_every == 0
        if recorded_last:
            times.append(t)
            states.append((y1, y2, y3))
        if quiet >= quiet_steps_needed:
            reason = REASON_CONVERGED
            break

    if not recorded_last:
        times.append(t)
        states.append((y1, y2, y3))
    return (
        np.array(times),
        np.array(states, dtype=float).reshape(-1, 3),
        reason,
        status,
        step,
        max_exc,
    )


# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# error weights: 5th-order minus embedded 4th-order
_E1 = 71.0 / 57600.0
_E3 = -71.0 / 16695.0
_E4 = 71.0 / 1920.0
_E5 = -17253.0 / 339200.0
_E6 = 22.0 / 525.0
_E7 = -1.0 / 40.0


def integrate_dopri(params, y0, lo, hi, rtol, atol, h0, h_max, t_max,
                    conv_eps, conv_window, save_every):
    p = [float(v) for v in params]
    y = [float(v) for v in y0]
    lo = [float(v) for v in lo]
    hi = [float(v) for v in hi]

    times = [0.0]
    states = [tuple(y)]
    reason = REASON_MAX_TIME
    status = STATUS_OK
    quiet_time = 0.0
    max_exc = 0.0
    step = 0
    t = 0.0
    h = min(h0, h_max)
    k1 = rhs(p, y[0], y[1], y[2])
    recorded_last = True

    while t < t_max:
        if h > t_max - t:
            h = t_max - t
        if h < 1e-14:
            status = STATUS_UNDERFLOW
            break
        yt = [y[i] + h * (_A21 * k1[i]) for i in range(3)]
        k2 = rhs(p, *yt)
        yt = [y[i] + h * (_A31 * k1[i] + _A32 * k2[i]) for i in range(3)]
        k3 = rhs(p, *yt)
        yt = [y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i]) for i in range(3)]
        k4 = rhs(p, *yt)
        yt = [y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
              for i in range(3)]
        k5 = rhs(p, *yt)
        yt = [y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i]
                          + _A65 * k5[i]) for i in range(3)]
        k6 = rhs(p, *yt)
        z = [y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i]
                         + _B6 * k6[i]) for i in range(3)]
        if not all(math.isfinite(v) for v in z):
            status = STATUS_NONFINITE
            break
        k7 = rhs(p, z[0], z[1], z[2])
        err = 0.0
        for i in range(3):
            ei = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                      + _E6 * k6[i] + _E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(z[i]))
            r = abs(ei) / sc
            if r > err:
                err = r
        if not math.isfinite(err):
            status = STATUS_NONFINITE
            break
        if err <= 1.0:
            t = t + h
            step += 1
            e = max(_excursion(z[0]), _excursion(z[1]), _excursion(z[2]))
            if e > max_exc:
                max_exc = e
            clamped = False
            for i in range(3):
                v = min(max(z[i], lo[i]), hi[i])
                if v != z[i]:
                    clamped = True
                y[i] = v
            k1 = rhs(p, y[0], y[1], y[2]) if clamped else k7
            if max(abs(k1[0]), abs(k1[1]), abs(k1[2])) < conv_eps:
                quiet_time += h
            else:
                quiet_time = 0.0
            recorded_last = step % save_every == 0
            if recorded_last:
                times.append(t)
                states.append(tuple(y))
            if quiet_time >= conv_window:
                reason = REASON_CONVERGED
                break
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
        h = min(h * fac, h_max)

    if not recorded_last:
        times.append(t)
        states.append(tuple(y))
    return (
        np.array(times),
        np.array(states, dtype=float).reshape(-1, 3),
        reason,
        status,
        step,
        max_exc,
    )
