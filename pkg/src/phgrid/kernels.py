"""Hot numerical kernels: vector field, derived channels, RK4/RK45 loops.

Everything here is written in njit-compatible numpy and decorated by
:func:`phgrid.backend.jit`; with ``PHGRID_BACKEND=numpy`` the very same
functions run un-jitted (bit-identical semantics, far slower per step).
The network is passed as packed per-kind arrays, see dynamics.pack().

Status codes returned by the loops: 0 ok, 1 non-finite state, 2 adaptive
step failure at dt_min, 3 step budget exhausted.
"""

import math

import numpy as np

from .backend import jit


@jit
def rhs_scratch(
    t,
    x,
    W,
    port,
    sgo,
    sgr,
    sgp,
    cpo,
    cpr,
    cpp,
    ino,
    inr,
    inp,
    fe,
    fa,
    fb,
    fw,
    y,
    u,
    out,
):
    """Closed-system vector field in physical coordinates, signs via u = W y.

    Ports are gathered per edge (SG stator current, capacitor voltage,
    branch current), coupled through the skew network matrix, and the
    per-edge equations are evaluated on the coupled inputs.  ``fe >= 0``
    adds the sinusoidal input (fa + j fb) e^{j fw t} to that edge row.
    ``y`` and ``u`` are (n_e, 2) scratch buffers; nothing is allocated.
    """
    n_e = port.shape[0]
    for k in range(n_e):
        y[k, 0] = x[port[k]]
        y[k, 1] = x[port[k] + 1]
    for i in range(n_e):
        u0 = 0.0
        u1 = 0.0
        for j in range(n_e):
            w = W[i, j]
            if w != 0.0:
                u0 += w * y[j, 0]
                u1 += w * y[j, 1]
        u[i, 0] = u0
        u[i, 1] = u1
    if fe >= 0:
        cw = math.cos(fw * t)
        sw = math.sin(fw * t)
        u[fe, 0] += fa * cw - fb * sw
        u[fe, 1] += fa * sw + fb * cw

    # SG blocks: (omega, Ia, Ib, theta)
    for i in range(sgo.shape[0]):
        o = sgo[i]
        w = x[o]
        ia = x[o + 1]
        ib = x[o + 2]
        s = math.sin(x[o + 3])
        c = math.cos(x[o + 3])
        psi = sgp[i, 5]
        te = psi * (ia * s - ib * c)
        out[o] = (-sgp[i, 1] * w - te + sgp[i, 2]) / sgp[i, 0]
        out[o + 1] = (psi * w * s - sgp[i, 3] * ia + u[sgr[i], 0]) / sgp[i, 4]
        out[o + 2] = (-psi * w * c - sgp[i, 3] * ib + u[sgr[i], 1]) / sgp[i, 4]
        out[o + 3] = w

    # shunt blocks: (Va, Vb) with local admittance G + jB
    for i in range(cpo.shape[0]):
        o = cpo[i]
        va = x[o]
        vb = x[o + 1]
        out[o] = (-cpp[i, 1] * va + cpp[i, 2] * vb + u[cpr[i], 0]) / cpp[i, 0]
        out[o + 1] = (-cpp[i, 1] * vb - cpp[i, 2] * va + u[cpr[i], 1]) / cpp[i, 0]

    # series R-L blocks (lines and RL loads): (Ia, Ib)
    for i in range(ino.shape[0]):
        o = ino[i]
        out[o] = (-inp[i, 0] * x[o] + u[inr[i], 0]) / inp[i, 1]
        out[o + 1] = (-inp[i, 0] * x[o + 1] + u[inr[i], 1]) / inp[i, 1]
    return out


@jit
def rhs_core(
    t, x, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, out
):
    """rhs_scratch with self-allocated buffers (one-shot evaluations)."""
    n_e = port.shape[0]
    y = np.empty((n_e, 2))
    u = np.empty((n_e, 2))
    return rhs_scratch(
        t, x, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, y, u, out
    )


@jit
def channels_core(x, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, hedges):
    """Per-edge stored energy into hedges; returns (H_total, source, dissipation)."""
    src = 0.0
    dis = 0.0
    for i in range(sgo.shape[0]):
        w = x[sgo[i]]
        i2 = x[sgo[i] + 1] ** 2 + x[sgo[i] + 2] ** 2
        hedges[sgr[i]] = 0.5 * (sgp[i, 0] * w * w + sgp[i, 4] * i2)
        src += sgp[i, 2] * w
        dis += sgp[i, 1] * w * w + sgp[i, 3] * i2
    for i in range(cpo.shape[0]):
        v2 = x[cpo[i]] ** 2 + x[cpo[i] + 1] ** 2
        hedges[cpr[i]] = 0.5 * cpp[i, 0] * v2
        dis += cpp[i, 1] * v2
    for i in range(ino.shape[0]):
        i2 = x[ino[i]] ** 2 + x[ino[i] + 1] ** 2
        hedges[inr[i]] = 0.5 * inp[i, 1] * i2
        dis += inp[i, 0] * i2
    return hedges.sum(), src, dis


@jit
def rk4_loop(
    x0,
    t0,
    dt,
    n_steps,
    stride,
    W,
    port,
    sgo,
    sgr,
    sgp,
    cpo,
    cpr,
    cpp,
    ino,
    inr,
    inp,
    fe,
    fa,
    fb,
    fw,
    times,
    states,
    hedges,
    hs,
    srcs,
    diss,
):
    """Fixed-step classic RK4 recording every ``stride``-th step.

    Output arrays are preallocated by the caller (n_steps/stride + 1 rows);
    nothing else is retained, so memory stays O(samples).
    """
    dim = x0.shape[0]
    n_e = port.shape[0]
    x = x0.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    xt = np.empty(dim)
    ybuf = np.empty((n_e, 2))
    ubuf = np.empty((n_e, 2))

    times[0] = t0
    states[0] = x
    h, s, d = channels_core(x, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, hedges[0])
    hs[0] = h
    srcs[0] = s
    diss[0] = d
    rec = 1

    t = t0
    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(1, n_steps + 1):
        rhs_scratch(t, x, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k1)
        for i in range(dim):
            xt[i] = x[i] + half * k1[i]
        rhs_scratch(t + half, xt, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k2)
        for i in range(dim):
            xt[i] = x[i] + half * k2[i]
        rhs_scratch(t + half, xt, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k3)
        for i in range(dim):
            xt[i] = x[i] + dt * k3[i]
        rhs_scratch(t + dt, xt, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k4)
        for i in range(dim):
            x[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
        t = t0 + step * dt
        if step % stride == 0:
            times[rec] = t
            states[rec] = x
            h, s, d = channels_core(
                x, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, hedges[rec]
            )
            hs[rec] = h
            srcs[rec] = s
            diss[rec] = d
            if not math.isfinite(h):
                return 1, rec + 1, step
            rec += 1
    return 0, rec, n_steps


# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    35.0 / 384.0 - 5179.0 / 57600.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
)


@jit
def rk45_loop(
    x0,
    t0,
    sample_every,
    n_rec,
    atol,
    rtol,
    dt_min,
    dt_max,
    max_steps,
    W,
    port,
    sgo,
    sgr,
    sgp,
    cpo,
    cpr,
    cpp,
    ino,
    inr,
    inp,
    fe,
    fa,
    fb,
    fw,
    times,
    states,
    hedges,
    hs,
    srcs,
    diss,
):
    """Embedded Dormand-Prince 5(4) with steps clamped onto the sample grid.

    Accepts a step when ||e||_2 <= atol + rtol ||x||_2.  Steps never cross a
    sample time; the landing step may be shorter than dt_min (only an error
    rejection at dt_min counts as failure).
    """
    dim = x0.shape[0]
    n_e = port.shape[0]
    x = x0.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    k5 = np.empty(dim)
    k6 = np.empty(dim)
    k7 = np.empty(dim)
    xt = np.empty(dim)
    x5 = np.empty(dim)
    ybuf = np.empty((n_e, 2))
    ubuf = np.empty((n_e, 2))

    times[0] = t0
    states[0] = x
    h, s, d = channels_core(x, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, hedges[0])
    hs[0] = h
    srcs[0] = s
    diss[0] = d

    t = t0
    dt = min(dt_max, sample_every)
    if dt < dt_min:
        dt = dt_min
    rec = 1
    n_steps = 0
    while rec < n_rec:
        t_target = t0 + rec * sample_every
        while t < t_target:
            if n_steps >= max_steps:
                return 3, rec, n_steps
            landing = t + dt >= t_target - 1e-14 * max(abs(t_target), 1.0)
            dt_step = t_target - t if landing else dt

            rhs_scratch(t, x, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k1)
            for i in range(dim):
                xt[i] = x[i] + dt_step * _A21 * k1[i]
            rhs_scratch(t + _C2 * dt_step, xt, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k2)
            for i in range(dim):
                xt[i] = x[i] + dt_step * (_A31 * k1[i] + _A32 * k2[i])
            rhs_scratch(t + _C3 * dt_step, xt, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k3)
            for i in range(dim):
                xt[i] = x[i] + dt_step * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
            rhs_scratch(t + _C4 * dt_step, xt, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k4)
            for i in range(dim):
                xt[i] = x[i] + dt_step * (
                    _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
                )
            rhs_scratch(t + _C5 * dt_step, xt, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k5)
            for i in range(dim):
                xt[i] = x[i] + dt_step * (
                    _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
                )
            rhs_scratch(t + dt_step, xt, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k6)
            for i in range(dim):
                x5[i] = x[i] + dt_step * (
                    _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
                )
            rhs_scratch(t + dt_step, x5, W, port, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, fe, fa, fb, fw, ybuf, ubuf, k7)

            err2 = 0.0
            xn2 = 0.0
            for i in range(dim):
                e = dt_step * (
                    _E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i]
                )
                err2 += e * e
                xn2 += x[i] * x[i]
            errn = math.sqrt(err2)
            tol = atol + rtol * math.sqrt(xn2)
            n_steps += 1
            if not math.isfinite(errn):
                return 1, rec, n_steps

            if errn <= tol:
                for i in range(dim):
                    x[i] = x5[i]
                t = t_target if landing else t + dt_step
                # 0.75 targets ~0.4 tol per step, keeping the accumulated
                # global error well under step_count * tol
                if errn > 0.0:
                    fac = 0.75 * (tol / errn) ** 0.2
                    if fac > 5.0:
                        fac = 5.0
                else:
                    fac = 5.0
                dt = dt_step * fac
                if dt > dt_max:
                    dt = dt_max
                if dt < dt_min:
                    dt = dt_min
            else:
                if dt_step <= dt_min * (1.0 + 1e-12):
                    return 2, rec, n_steps
                fac = 0.75 * (tol / errn) ** 0.2
                if fac < 0.2:
                    fac = 0.2
                dt = dt_step * fac
                if dt < dt_min:
                    dt = dt_min

        times[rec] = t_target
        states[rec] = x
        h, s, d = channels_core(x, sgo, sgr, sgp, cpo, cpr, cpp, ino, inr, inp, hedges[rec])
        hs[rec] = h
        srcs[rec] = s
        diss[rec] = d
        if not math.isfinite(h):
            return 1, rec + 1, n_steps
        rec += 1
    return 0, n_rec, n_steps
