"""Dormand-Prince 5(4) integrator for the interaction-picture equations.

The right-hand side is specialised to the built-in pulse families and
compiled with numba; everything else goes through scipy's RK45 (the same
embedded pair).  The state is an N x K block of K amplitude vectors that
are propagated together.
"""

from __future__ import annotations

import numba
import numpy as np
from scipy.integrate import solve_ivp

OK = 0
UNDERFLOW = 1
NONFINITE = 2

KIND_ZERO = 0
KIND_POLE = 1
KIND_GAUSS = 2

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40


@numba.njit(cache=True, nogil=True)
def _envelope(kind, A, tp, Om, sigma, t):
    if kind == KIND_POLE:
        d = t - 1j * tp
        return A / (d * d) * np.exp(-1j * Om * t)
    if kind == KIND_GAUSS:
        return A * np.exp(-(t * t) / (2.0 * sigma * sigma))
    return 0j


@numba.njit(cache=True, nogil=True)
def _rhs(xi, Y, omegas, M, shift, kind, A, tp, Om, sigma, delta, out):
    n, k = Y.shape
    t = xi + 1j * delta
    f = -1j * _envelope(kind, A, tp, Om, sigma, t)
    if shift != 0.0:
        f = f * np.exp(1j * shift * t)
    e = np.empty(n, dtype=np.complex128)
    for i in range(n):
        e[i] = np.exp(1j * omegas[i] * t)
    for i in range(n):
        for j in range(k):
            acc = 0j
            for s in range(n):
                acc += M[i, s] * Y[s, j] / e[s]
            out[i, j] = f * e[i] * acc


@numba.njit(cache=True, nogil=True)
def _err_norm(y, ynew, err, rtol, atol):
    n, k = y.shape
    acc = 0.0
    for i in range(n):
        for j in range(k):
            sc = atol + rtol * max(abs(y[i, j]), abs(ynew[i, j]))
            r = abs(err[i, j]) / sc
            acc += r * r
    return np.sqrt(acc / (n * k))


@numba.njit(cache=True, nogil=True)
def dopri5(omegas, M, shift, kind, A, tp, Om, sigma, delta, Y0, t_out, rtol, atol, max_step, h0):
    """Integrate from t_out[0] to t_out[-1], recording the state at each t_out.

    Returns (Y_out, status, t_last, n_steps).
    """
    n, k = Y0.shape
    nout = t_out.shape[0]
    Yout = np.zeros((nout, n, k), dtype=np.complex128)
    y = Y0.copy()
    Yout[0] = y
    t = t_out[0]
    t_end = t_out[-1]
    h = min(h0, max_step)
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    k5 = np.empty_like(y)
    k6 = np.empty_like(y)
    k7 = np.empty_like(y)
    _rhs(t, y, omegas, M, shift, kind, A, tp, Om, sigma, delta, k1)
    nxt = 1
    nsteps = 0
    while nxt < nout:
        target = t_out[nxt]
        hit = False
        hs = h
        if t + hs >= target:
            hs = target - t
            hit = True
        if hs <= 1e-14 * max(1.0, abs(t)):
            if hit:
                Yout[nxt] = y
                nxt += 1
                continue
            return Yout, UNDERFLOW, t, nsteps
        _rhs(t + C2 * hs, y + hs * (A21 * k1), omegas, M, shift, kind, A, tp, Om, sigma, delta, k2)
        _rhs(t + C3 * hs, y + hs * (A31 * k1 + A32 * k2), omegas, M, shift, kind, A, tp, Om, sigma, delta, k3)
        _rhs(t + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3), omegas, M, shift, kind, A, tp, Om, sigma, delta, k4)
        _rhs(t + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
             omegas, M, shift, kind, A, tp, Om, sigma, delta, k5)
        _rhs(t + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
             omegas, M, shift, kind, A, tp, Om, sigma, delta, k6)
        ynew = y + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        _rhs(t + hs, ynew, omegas, M, shift, kind, A, tp, Om, sigma, delta, k7)
        err = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        en = _err_norm(y, ynew, err, rtol, atol)
        if not np.isfinite(en):
            return Yout, NONFINITE, t, nsteps
        if en <= 1.0:
            t = target if hit else t + hs
            y = ynew
            k1[:, :] = k7
            nsteps += 1
            if hit:
                Yout[nxt] = y
                nxt += 1
            fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            if not hit or hs * fac > h:
                h = hs * fac
        else:
            h = hs * max(0.2, 0.9 * en ** -0.2)
        h = min(h, max_step)
        if h < 1e-14 * max(1.0, abs(t)):
            return Yout, UNDERFLOW, t, nsteps
    return Yout, OK, t, nsteps


def scipy_rk45(func, omegas, M, shift, delta, Y0, t_out, rtol, atol, max_step):
    """Same contract as :func:`dopri5` for an arbitrary Python envelope."""
    n, k = Y0.shape

    def rhs(xi, y):
        t = xi + 1j * delta
        f = -1j * complex(func(t))
        if shift:
            f *= np.exp(1j * shift * t)
        e = np.exp(1j * omegas * t)
        Y = y.reshape(n, k)
        return (f * e[:, None] * (M @ (Y / e[:, None]))).ravel()

    sol = solve_ivp(
        rhs, (t_out[0], t_out[-1]), Y0.ravel().astype(complex), method="RK45",
        t_eval=t_out, rtol=rtol, atol=atol, max_step=max_step,
    )
    nout = len(t_out)
    Yout = np.zeros((nout, n, k), dtype=complex)
    m = sol.y.shape[1]
    Yout[:m] = sol.y.T.reshape(m, n, k)
    if sol.status == 0 and m == nout:
        return Yout, OK, t_out[-1], int(sol.t.size)
    t_last = float(sol.t[-1]) if sol.t.size else float(t_out[0])
    status = NONFINITE if not np.all(np.isfinite(Yout[:m])) else UNDERFLOW
    return Yout, status, t_last, int(sol.t.size)
