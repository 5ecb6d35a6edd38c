"""Perturbation envelopes f(t).

Fourier convention throughout the package::

    F(w) = integral f(t) exp(+i w t) dt

so a pulse that is holomorphic and decaying in the upper half of the complex
time plane has a spectrum supported on w <= 0.

Pulse families:

* pole            f(t) = A / (t - i t_p)**2
* modulated pole  f(t) = A / (t - i t_p)**2 * exp(-i Omega t)
* real Gaussian   f(t) = A * exp(-t**2 / (2 sigma**2))
* custom          any callable (real axis only unless it handles complex t)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import exp1

POLE_GUARD = 1e-9


class PulseKind(enum.Enum):
    POLE = "PolePulse"
    MODULATED_POLE = "ModulatedPolePulse"
    GAUSSIAN_REAL = "GaussianReal"
    CUSTOM = "Custom"


class Holomorphy(enum.Enum):
    UPPER = "UpperHolomorphic"
    LOWER = "LowerHolomorphic"
    TWO_SIDED = "TwoSided"


class SupportKind(enum.Enum):
    NEGATIVE_ONLY = "NegativeOnly"
    POSITIVE_ONLY = "PositiveOnly"
    SHIFTED_NEGATIVE = "ShiftedNegative"
    SHIFTED_POSITIVE = "ShiftedPositive"
    TWO_SIDED = "TwoSided"


@dataclass(frozen=True)
class SpectrumSupport:
    """Where F(w) may be nonzero.

    ``*_NEGATIVE`` kinds mean support in (-inf, edge]; ``*_POSITIVE`` kinds
    mean support in [edge, +inf).
    """

    kind: SupportKind
    edge: float = 0.0

    @property
    def below(self) -> bool:
        return self.kind in (SupportKind.NEGATIVE_ONLY, SupportKind.SHIFTED_NEGATIVE)

    @property
    def above(self) -> bool:
        return self.kind in (SupportKind.POSITIVE_ONLY, SupportKind.SHIFTED_POSITIVE)

    def contains(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if self.below:
            return omega <= self.edge
        if self.above:
            return omega >= self.edge
        return np.ones_like(omega, dtype=bool)

    def __str__(self) -> str:
        if self.kind in (SupportKind.SHIFTED_NEGATIVE, SupportKind.SHIFTED_POSITIVE):
            return f"{self.kind.value}({self.edge:g})"
        return self.kind.value


class Classification(NamedTuple):
    holomorphy: Holomorphy
    support: SpectrumSupport
    warning: str | None = None


class SingularityError(ValueError):
    """Evaluation requested at (or within the guard radius of) the pole."""


class UnsupportedPulse(ValueError):
    pass


@dataclass(frozen=True)
class Pulse:
    kind: PulseKind
    A: complex = 1.0
    t_p: float = 0.0
    Omega: float = 0.0
    sigma: float = 1.0
    func: Callable | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "A", complex(self.A))
        if self.kind in (PulseKind.POLE, PulseKind.MODULATED_POLE) and self.t_p == 0:
            raise ValueError("pole pulses need t_p != 0 (pole must be off the real axis)")
        if self.kind is PulseKind.GAUSSIAN_REAL and self.sigma <= 0:
            raise ValueError("Gaussian width must be positive")
        if self.kind is PulseKind.CUSTOM and self.func is None:
            raise ValueError("custom pulse needs a callable")

    @property
    def is_pole(self) -> bool:
        return self.kind in (PulseKind.POLE, PulseKind.MODULATED_POLE)

    @property
    def pole(self) -> complex | None:
        return 1j * self.t_p if self.is_pole else None

    @property
    def modulation(self) -> float:
        return self.Omega if self.kind is PulseKind.MODULATED_POLE else 0.0

    @property
    def is_zero(self) -> bool:
        return self.kind is not PulseKind.CUSTOM and self.A == 0

    def scaled(self, s: complex) -> Pulse:
        if self.kind is PulseKind.CUSTOM:
            f = self.func
            return replace(self, func=lambda t: s * f(t))
        return replace(self, A=self.A * s)

    def envelope(self) -> Pulse:
        """The unmodulated pole part g(t) of a modulated pole pulse."""
        if self.kind is PulseKind.MODULATED_POLE:
            return replace(self, kind=PulseKind.POLE, Omega=0.0)
        return self

    def describe(self) -> str:
        """Inverse of :func:`parse_pulse` (up to float formatting)."""
        A = f"{self.A.real:g}" if self.A.imag == 0 else f"{self.A:g}".strip("()")
        if self.kind is PulseKind.POLE:
            return f"pole:A={A},tp={self.t_p:g}"
        if self.kind is PulseKind.MODULATED_POLE:
            return f"modpole:A={A},tp={self.t_p:g},Omega={self.Omega:g}"
        if self.kind is PulseKind.GAUSSIAN_REAL:
            return "none" if self.is_zero else f"gauss:A={A},sigma={self.sigma:g}"
        return self.label or "custom"


def pole_pulse(A: complex = 1.0, t_p: float = -0.5) -> Pulse:
    return Pulse(PulseKind.POLE, A=A, t_p=t_p)


def modulated_pole_pulse(A: complex = 1.0, t_p: float = -0.5, Omega: float = -2.0) -> Pulse:
    return Pulse(PulseKind.MODULATED_POLE, A=A, t_p=t_p, Omega=Omega)


def gaussian_pulse(A: float = 1.0, sigma: float = 1.0) -> Pulse:
    return Pulse(PulseKind.GAUSSIAN_REAL, A=A, sigma=sigma)


def zero_pulse() -> Pulse:
    return Pulse(PulseKind.GAUSSIAN_REAL, A=0.0, sigma=1.0, label="none")


def custom_pulse(func: Callable, label: str = "custom") -> Pulse:
    return Pulse(PulseKind.CUSTOM, func=func, label=label)


def evaluate(p: Pulse, t):
    """f(t) for real or complex t (scalar or array)."""
    t = np.asarray(t)
    if p.kind is PulseKind.CUSTOM:
        return p.func(t)
    if p.is_pole:
        d = t - 1j * p.t_p
        if np.any(np.abs(d) < POLE_GUARD):
            raise SingularityError(f"evaluation within {POLE_GUARD:g} of the pole at {1j * p.t_p}")
        out = p.A / d**2
        if p.kind is PulseKind.MODULATED_POLE:
            out = out * np.exp(-1j * p.Omega * t)
        return out
    return p.A * np.exp(-(t**2) / (2.0 * p.sigma**2))


def _pole_spectrum(A: complex, t_p: float, omega: np.ndarray) -> np.ndarray:
    # Residue at t = i t_p; only the half-line with omega * t_p > 0 survives.
    allowed = omega * t_p > 0
    out = np.zeros(omega.shape, dtype=complex)
    w = np.abs(omega[allowed])
    out[allowed] = -2.0 * np.pi * A * w * np.exp(-w * abs(t_p))
    return out


def analytic_spectrum(p: Pulse, omega):
    """Closed-form F(omega); exactly zero outside the support."""
    om = np.asarray(omega, dtype=float)
    scalar = om.ndim == 0
    om = np.atleast_1d(om)
    if p.kind is PulseKind.POLE:
        out = _pole_spectrum(p.A, p.t_p, om)
    elif p.kind is PulseKind.MODULATED_POLE:
        # exp(-i Omega t) translates the spectrum: F_mod(w) = F_pole(w - Omega)
        out = _pole_spectrum(p.A, p.t_p, om - p.Omega)
    elif p.kind is PulseKind.GAUSSIAN_REAL:
        out = p.A * p.sigma * np.sqrt(2 * np.pi) * np.exp(-0.5 * (p.sigma * om) ** 2)
        out = out.astype(complex)
    else:
        raise UnsupportedPulse("custom pulses have no closed-form spectrum; use spectrum.numerical_spectrum")
    return out[0] if scalar else out


def classify(p: Pulse) -> Classification:
    if p.kind is PulseKind.CUSTOM:
        return Classification(
            Holomorphy.TWO_SIDED,
            SpectrumSupport(SupportKind.TWO_SIDED),
            "custom pulse: holomorphy not analysed, assumed two-sided",
        )
    if p.kind is PulseKind.GAUSSIAN_REAL:
        return Classification(Holomorphy.TWO_SIDED, SpectrumSupport(SupportKind.TWO_SIDED))
    edge = p.modulation
    if p.t_p < 0:
        kind = SupportKind.SHIFTED_NEGATIVE if edge != 0 else SupportKind.NEGATIVE_ONLY
        support = SpectrumSupport(kind, edge)
        hol = Holomorphy.UPPER if edge <= 0 else Holomorphy.TWO_SIDED
    else:
        kind = SupportKind.SHIFTED_POSITIVE if edge != 0 else SupportKind.POSITIVE_ONLY
        support = SpectrumSupport(kind, edge)
        hol = Holomorphy.LOWER if edge >= 0 else Holomorphy.TWO_SIDED
    return Classification(hol, support)


def transitionless_eligible(p: Pulse, spread: float) -> bool:
    """True when the spectral support clears every level difference."""
    sup = classify(p).support
    if sup.below:
        return sup.edge <= -spread
    if sup.above:
        return sup.edge >= spread
    return False


def _tail_pole(kappa, a, T):
    # integral_T^inf exp(i kappa s) / (s - a)**2 ds, closed form through E1
    kappa = np.asarray(kappa, dtype=float)
    out = np.exp(1j * kappa * T) / (T - a)
    nz = kappa != 0
    if np.any(nz):
        k = kappa[nz]
        out = out.astype(complex)
        out[nz] = out[nz] + 1j * k * np.exp(1j * k * a) * exp1(-1j * k * (T - a))
    return out


def tail_integrals(p: Pulse, nu, t_lo: float, t_hi: float, offset: float = 0.0):
    """Integrals of f(x + i*offset) * exp(i nu (x + i*offset)) over the tails.

    Returns ``(pre, post)``: the integral over x in (-inf, t_lo] and over
    [t_hi, +inf).  Nonzero only for pole pulses; Gaussian tails are below
    double precision for any usable window and custom pulses are assumed
    to be negligible there.
    """
    nu = np.asarray(nu, dtype=float)
    if not p.is_pole or p.A == 0:
        z = np.zeros(nu.shape, dtype=complex)
        return z, z.copy()
    kappa = nu - p.modulation
    # f(x + i d) e^{i nu (x + i d)} = A e^{-kappa d} e^{i kappa x} / (x - a)^2
    a = 1j * (p.t_p - offset)
    pref = p.A * np.exp(-kappa * offset)
    post = pref * _tail_pole(kappa, a, t_hi)
    pre = pref * _tail_pole(-kappa, -a, -t_lo)
    return pre, post


def parse_pulse(spec: str) -> Pulse:
    """Parse ``kind:key=value,...`` (kinds: pole, modpole, gauss, none)."""
    spec = spec.strip()
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    params: dict[str, str] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"bad pulse parameter {item!r} (expected key=value)")
        params[key.strip()] = val.strip()

    def num(*names, default=None):
        for n in names:
            if n in params:
                return float(params.pop(n))
        if default is None:
            raise ValueError(f"pulse {kind!r} needs parameter {names[0]}")
        return default

    def amplitude():
        if "A" in params:
            return complex(params.pop("A").replace(" ", ""))
        return complex(num("A_re", default=1.0), num("A_im", default=0.0))

    if kind in ("none", "zero", "off"):
        p = zero_pulse()
    elif kind == "pole":
        p = pole_pulse(amplitude(), num("tp", "t_p"))
    elif kind in ("modpole", "modulated", "modulated_pole"):
        p = modulated_pole_pulse(amplitude(), num("tp", "t_p"), num("Omega", "omega", "W"))
    elif kind in ("gauss", "gaussian"):
        A = amplitude()
        if A.imag != 0:
            raise ValueError("Gaussian pulse amplitude must be real")
        p = gaussian_pulse(A.real, num("sigma", default=1.0))
    else:
        raise ValueError(f"unknown pulse kind {kind!r}")
    if params:
        raise ValueError(f"unused pulse parameters: {', '.join(params)}")
    return p
