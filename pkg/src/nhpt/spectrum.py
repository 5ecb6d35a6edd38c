"""Numerical Fourier analysis of pulses (same convention as :mod:`nhpt.pulses`)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import write_csv
from .pulses import Holomorphy, Pulse, classify, evaluate, tail_integrals

REAL_AXIS_CLEARANCE = 1e-6


class NotApplicable(ValueError):
    pass


@dataclass(frozen=True)
class HalfLine:
    """Forbidden frequencies: w > edge (``side="above"``) or w < edge."""

    side: str
    edge: float = 0.0

    def __post_init__(self):
        if self.side not in ("above", "below"):
            raise ValueError("side must be 'above' or 'below'")

    def weights(self, omegas: np.ndarray, tol: float) -> np.ndarray:
        d = omegas - self.edge if self.side == "above" else self.edge - omegas
        w = (d > tol).astype(float)
        w[np.abs(d) <= tol] = 0.5
        return w


def forbidden_region(p: Pulse) -> HalfLine:
    sup = classify(p).support
    if sup.below:
        return HalfLine("above", sup.edge)
    if sup.above:
        return HalfLine("below", sup.edge)
    return HalfLine("above", 0.0)


@dataclass(frozen=True, eq=False)
class SpectrumGrid:
    omegas: np.ndarray
    values: np.ndarray
    leakage: float
    forbidden: HalfLine
    dt: float
    t_max: float
    time_energy: float

    def __post_init__(self):
        if not 0.0 <= self.leakage <= 1.0:
            raise ValueError(f"leakage {self.leakage} outside [0, 1]")

    @property
    def domega(self) -> float:
        return float(self.omegas[1] - self.omegas[0])

    @property
    def spectral_energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.domega / (2 * np.pi))

    def to_csv(self, path):
        F = self.values
        rows = zip(self.omegas, F.real, F.imag, np.abs(F))
        return write_csv(path, ["omega", "re_F", "im_F", "abs_F"], rows)


def _check_n(n: int):
    if n < 1024 or n & (n - 1):
        raise ValueError(f"n_samples must be a power of two >= 1024, got {n}")


def sample_grid(t_max: float, n: int) -> np.ndarray:
    return -t_max + np.arange(n) * (2.0 * t_max / n)


def numerical_spectrum(
    p: Pulse,
    t_max: float = 2000.0,
    n_samples: int = 2**18,
    *,
    tail_correction: bool = False,
    forbidden: HalfLine | None = None,
) -> SpectrumGrid:
    """Rectangle-rule DFT of f on [-t_max, t_max).

    With ``tail_correction`` the exact contribution of |t| > t_max is added
    for pole pulses.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    _check_n(n_samples)
    if p.is_pole and abs(p.t_p) < REAL_AXIS_CLEARANCE:
        raise ValueError("pole within 1e-6 of the real axis; spectrum integral is ill-conditioned")
    dt = 2.0 * t_max / n_samples
    t = sample_grid(t_max, n_samples)
    f = np.asarray(evaluate(p, t), dtype=complex)
    w = 2 * np.pi * np.fft.fftfreq(n_samples, dt)
    F = dt * n_samples * np.fft.ifft(f) * np.exp(1j * w * t[0])
    w = np.fft.fftshift(w)
    F = np.fft.fftshift(F)
    if tail_correction:
        pre, post = tail_integrals(p, w, -t_max, t_max)
        F = F + pre + post
    forbidden = forbidden or forbidden_region(p)
    sg = SpectrumGrid(
        omegas=w, values=F, leakage=0.0, forbidden=forbidden, dt=dt, t_max=t_max,
        time_energy=float(np.sum(np.abs(f) ** 2) * dt),
    )
    return SpectrumGrid(**{**sg.__dict__, "leakage": one_sidedness(sg, forbidden)})


def one_sidedness(sg: SpectrumGrid, forbidden: HalfLine | None = None) -> float:
    """Fraction of sum |F|**2 on the forbidden half-line (edge points count half)."""
    if sg.omegas.size == 0:
        raise ValueError("empty spectrum grid")
    forbidden = forbidden or sg.forbidden
    e = np.abs(sg.values) ** 2
    total = float(e.sum())
    if total == 0.0:
        return 0.0
    tol = 1e-9 * abs(sg.domega) if sg.omegas.size > 1 else 0.0
    frac = float(np.sum(e * forbidden.weights(sg.omegas, tol))) / total
    return min(max(frac, 0.0), 1.0)


def interpolate_spectrum(sg: SpectrumGrid, omegas) -> np.ndarray:
    om = np.asarray(omegas, dtype=float)
    re = np.interp(om, sg.omegas, sg.values.real, left=0.0, right=0.0)
    im = np.interp(om, sg.omegas, sg.values.imag, left=0.0, right=0.0)
    return re + 1j * im


def hilbert_transform(x: np.ndarray) -> np.ndarray:
    """Periodic discrete Hilbert transform (multiplier -i sgn(k), zero at DC/Nyquist)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    k = np.fft.fftfreq(n)
    h = -1j * np.sign(k)
    if n % 2 == 0:
        h[n // 2] = 0.0
    return np.fft.ifft(np.fft.fft(x) * h).real


def hilbert_check(p: Pulse, t_max: float = 2000.0, n: int = 2**18) -> float:
    """max |Im f - s H[Re f]| over |t| < t_max/2, s = +1 (upper) or -1 (lower)."""
    hol = classify(p).holomorphy
    if hol is Holomorphy.TWO_SIDED:
        raise NotApplicable("pulse is not holomorphic in either half-plane")
    _check_n(n)
    sign = 1.0 if hol is Holomorphy.UPPER else -1.0
    t = sample_grid(t_max, n)
    f = np.asarray(evaluate(p, t), dtype=complex)
    dev = np.abs(f.imag - sign * hilbert_transform(f.real))
    central = np.abs(t) < t_max / 2
    return float(np.max(dev[central]))
