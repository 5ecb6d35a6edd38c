"""Independent reference computations used by several test modules."""

import numpy as np
from scipy.integrate import quad


def fourier_quad(f, w):
    """integral f(t) exp(i w t) dt by Fourier-weighted quadrature on both half-lines."""
    total = 0j
    for s in (1, -1):
        def g(t, s=s):
            return f(s * t)

        if w == 0:
            total += quad(lambda t: g(t).real, 0, np.inf)[0] + 1j * quad(lambda t: g(t).imag, 0, np.inf)[0]
            continue
        ww, sgn = abs(w), np.sign(w) * s
        cr = quad(lambda t: g(t).real, 0, np.inf, weight="cos", wvar=ww)[0]
        ci = quad(lambda t: g(t).imag, 0, np.inf, weight="cos", wvar=ww)[0]
        sr = quad(lambda t: g(t).real, 0, np.inf, weight="sin", wvar=ww)[0]
        si = quad(lambda t: g(t).imag, 0, np.inf, weight="sin", wvar=ww)[0]
        total += (cr + 1j * ci) + 1j * sgn * (sr + 1j * si)
    return total


def bare_schrodinger(h0, h1, f, psi0, t0, t1, rtol=1e-12, atol=1e-14):
    """Schrodinger-picture solution of i psi' = (H0 + f(t) H1) psi with DOP853."""
    from scipy.integrate import solve_ivp

    H0 = np.asarray(h0, dtype=complex)
    H1 = np.asarray(h1, dtype=complex)
    sol = solve_ivp(
        lambda t, y: -1j * (H0 + f(t) * H1) @ y, (t0, t1), np.asarray(psi0, complex),
        method="DOP853", rtol=rtol, atol=atol, max_step=0.5,
    )
    return sol.y[:, -1]
