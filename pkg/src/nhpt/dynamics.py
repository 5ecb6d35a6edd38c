"""Integration of the interaction-picture amplitude equations.

    i dc_l/dt = f(t) sum_s (H1)_{l,s} c_s exp[i (w_l - w_s) t]

on the real axis or along a shifted line t = xi + i*delta in the region where
the pulse is holomorphic.

The 1/t**2 tails of pole pulses are handled analytically: the part of the
evolution outside the integration window is folded in as a first-order
Magnus factor exp(-i K), where K[l, s] = (H1)_{l,s} times the exact tail
integral of f(t) exp[i (w_l - w_s) t].  What remains is O(1/T**2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from . import _rk
from .io import write_csv
from .operators import DimensionMismatch, EigenSystem, GeneralOperator
from .perturbation import TransitionMatrix
from .pulses import Pulse, PulseKind, tail_integrals

log = logging.getLogger(__name__)

POLE_CLEARANCE = 1e-6
FIT_RESIDUAL_TOL = 1e-6


class IntegrationError(RuntimeError):
    def __init__(self, msg: str, t_last: float):
        super().__init__(f"{msg} (last good time {t_last:.6g})")
        self.t_last = t_last


class StepSizeUnderflow(IntegrationError):
    pass


class DivergenceError(IntegrationError):
    pass


class AsymptoticsNotReached(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegrationConfig:
    t_start: float = -2000.0
    t_end: float = 2000.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 1.0
    delta: float = 0.0
    tail_correction: bool = True
    # output sampling: uniform on [-center, center], geometric outside
    center: float = 25.0
    n_center: int = 2001
    n_tail: int = 200

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError("t_start must be < t_end")
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0 < v <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {v}")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")

    @classmethod
    def symmetric(cls, t_max: float, **kw) -> IntegrationConfig:
        return cls(t_start=-t_max, t_end=t_max, **kw)

    def scaled_window(self, factor: float) -> IntegrationConfig:
        return replace(self, t_start=self.t_start * factor, t_end=self.t_end * factor)


def output_grid(cfg: IntegrationConfig) -> np.ndarray:
    a, b = cfg.t_start, cfg.t_end
    lo, hi = max(a, -cfg.center), min(b, cfg.center)
    parts = [np.array([a, b])]
    if lo < hi:
        parts.append(np.linspace(lo, hi, cfg.n_center))
    if a < lo and lo > 0:
        parts.append(np.linspace(a, lo, cfg.n_tail))
    elif a < lo:
        parts.append(-np.geomspace(-a, max(-lo, 1e-3), cfg.n_tail))
    if hi < b and hi < 0:
        parts.append(np.linspace(hi, b, cfg.n_tail))
    elif hi < b:
        parts.append(np.geomspace(max(hi, 1e-3), b, cfg.n_tail))
    g = np.unique(np.concatenate(parts))
    return g[(g >= a) & (g <= b)]


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    """Amplitudes c_l on a time grid.

    ``times`` holds the real coordinate xi; the path is t = xi + i*offset.
    ``final`` is the asymptotic (t -> +inf) estimate including the analytic
    tail factor; ``final_raw`` is the state at the last grid point.
    """

    times: np.ndarray
    c: np.ndarray
    final: np.ndarray
    final_raw: np.ndarray
    offset: float = 0.0
    n_steps: int = 0
    populations: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "populations", np.abs(self.c) ** 2)

    @property
    def final_populations(self) -> np.ndarray:
        return np.abs(self.final) ** 2

    @property
    def norms(self) -> np.ndarray:
        return self.populations.sum(axis=1)

    def to_csv(self, path):
        n = self.c.shape[1]
        header = ["t"]
        for l in range(1, n + 1):
            header += [f"re_c_{l}", f"im_c_{l}", f"pop_{l}"]
        rows = []
        for k, t in enumerate(self.times):
            row = [t]
            for l in range(n):
                z = self.c[k, l]
                row += [z.real, z.imag, self.populations[k, l]]
            rows.append(row)
        return write_csv(path, header, rows)


@dataclass(frozen=True)
class ContourAsymptotics:
    """Large-xi coefficients along t = xi + i*side*delta.

    In plain mode ``B[l]`` is B_l(delta) of A_l ~ B_l exp[-i (w_l - w_n) xi];
    in frequency-shifted mode it is the constant limit D_l(delta).
    """

    delta: float
    B: np.ndarray
    fit_residual: float
    mode: str
    side: int
    initial: int


@dataclass(frozen=True)
class ConvergenceReport:
    windows: tuple
    rel_tols: tuple
    finals: tuple
    drift: float
    pop_change: float
    converged: bool
    eps_trunc: float

    @property
    def base(self) -> np.ndarray:
        return self.finals[0]

    @property
    def final(self) -> np.ndarray:
        return self.finals[-1]


def _kernel_args(p: Pulse, shift_mode: bool):
    q = p.envelope() if shift_mode else p
    shift = -p.modulation if shift_mode else 0.0
    if q.kind is PulseKind.CUSTOM:
        return None, shift
    if q.is_zero:
        return (_rk.KIND_ZERO, 0j, 1.0, 0.0, 1.0), shift
    if q.is_pole:
        return (_rk.KIND_POLE, q.A, q.t_p, q.modulation, 1.0), shift
    return (_rk.KIND_GAUSS, q.A, 0.0, 0.0, q.sigma), shift


def _check_path(p: Pulse, offset: float):
    if not p.is_pole or p.is_zero:
        return
    if abs(p.t_p - offset) < POLE_CLEARANCE:
        raise ValueError(f"integration path passes within {POLE_CLEARANCE:g} of the pole")
    lo, hi = min(0.0, offset), max(0.0, offset)
    if lo - POLE_CLEARANCE <= p.t_p <= hi + POLE_CLEARANCE:
        raise ValueError(
            f"pulse pole at {p.t_p:+g}i lies between the real axis and the contour "
            f"Im t = {offset:+g}; the shifted solution would not continue the real one"
        )


def _tail_factors(omegas, M, p, t_lo, t_hi, offset):
    nu = omegas[:, None] - omegas[None, :]
    pre, post = tail_integrals(p, nu, t_lo, t_hi, offset)
    return expm(-1j * M * pre), expm(-1j * M * post)


def _as_matrix(h1e, basis: EigenSystem) -> np.ndarray:
    M = np.asarray(h1e, dtype=complex)
    if M.shape != (basis.dim, basis.dim):
        raise DimensionMismatch(f"matrix elements have shape {M.shape}, basis dimension {basis.dim}")
    return np.ascontiguousarray(M)


def propagate(
    basis: EigenSystem,
    h1e,
    p: Pulse,
    Y0: np.ndarray,
    cfg: IntegrationConfig,
    *,
    times: np.ndarray | None = None,
    side: int = 1,
    shift_mode: bool = False,
):
    """Propagate a block of amplitude vectors (columns of Y0).

    Returns ``(times, Y, Y_inf, n_steps)`` with Y of shape (len(times), N, K)
    and Y_inf the tail-corrected asymptotic block.
    """
    M = _as_matrix(h1e, basis)
    Y0 = np.asarray(Y0, dtype=complex)
    if Y0.ndim == 1:
        Y0 = Y0[:, None]
    if Y0.shape[0] != basis.dim:
        raise DimensionMismatch(f"initial state has {Y0.shape[0]} rows, basis dimension {basis.dim}")
    if not np.all(np.isfinite(Y0)):
        raise ValueError("initial amplitudes must be finite")
    offset = side * cfg.delta
    _check_path(p, offset)
    if p.is_pole and abs(p.t_p) < POLE_CLEARANCE:
        raise ValueError("pole too close to the real axis")

    if times is None:
        times = output_grid(cfg)
    times = np.unique(np.concatenate([[cfg.t_start, cfg.t_end], np.asarray(times, float)]))
    times = times[(times >= cfg.t_start) & (times <= cfg.t_end)]

    omegas = np.ascontiguousarray(basis.omegas, dtype=float)
    if cfg.tail_correction:
        pre, post = _tail_factors(omegas, M, p, cfg.t_start, cfg.t_end, offset)
        Ystart = pre @ Y0
    else:
        post = None
        Ystart = Y0.copy()

    args, shift = _kernel_args(p, shift_mode)
    if args is None:
        g = p.envelope() if shift_mode else p
        Y, status, t_last, nsteps = _rk.scipy_rk45(
            g.func, omegas, M, shift, offset, Ystart, times, cfg.rel_tol, cfg.abs_tol, cfg.max_step
        )
    else:
        kind, A, tp, Om, sigma = args
        Y, status, t_last, nsteps = _rk.dopri5(
            omegas, M, float(shift), kind, complex(A), float(tp), float(Om), float(sigma),
            float(offset), np.ascontiguousarray(Ystart), times,
            cfg.rel_tol, cfg.abs_tol, cfg.max_step, 1e-2,
        )
    if status == _rk.UNDERFLOW:
        raise StepSizeUnderflow("step size underflow", t_last)
    if status == _rk.NONFINITE or not np.all(np.isfinite(Y)):
        raise DivergenceError("amplitudes became non-finite", t_last)
    Yinf = post @ Y[-1] if post is not None else Y[-1].copy()
    return times, Y, Yinf, nsteps


def integrate(
    basis: EigenSystem,
    h1e,
    p: Pulse,
    init,
    cfg: IntegrationConfig | None = None,
    *,
    side: int = 1,
    shift_mode: bool = False,
    times=None,
) -> AmplitudeTrajectory:
    """Solve the amplitude equations from ``init`` (the state at t -> -inf)."""
    cfg = cfg or IntegrationConfig()
    init = np.asarray(init, dtype=complex)
    if init.shape != (basis.dim,):
        raise DimensionMismatch(f"init has shape {init.shape}, basis dimension {basis.dim}")
    t, Y, Yinf, nsteps = propagate(
        basis, h1e, p, init[:, None], cfg, times=times, side=side, shift_mode=shift_mode
    )
    return AmplitudeTrajectory(
        times=t, c=Y[:, :, 0], final=Yinf[:, 0], final_raw=Y[-1, :, 0].copy(),
        offset=side * cfg.delta, n_steps=nsteps,
    )


def basis_state(n: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def final_block(basis: EigenSystem, h1e, p: Pulse, cfg: IntegrationConfig | None = None) -> np.ndarray:
    """Asymptotic amplitudes for every initial basis state: C[m, n] = c_m(+inf | n)."""
    cfg = cfg or IntegrationConfig()
    N = basis.dim
    _, _, Yinf, _ = propagate(basis, h1e, p, np.eye(N, dtype=complex), cfg, times=np.array([cfg.t_start, cfg.t_end]))
    return Yinf


def transition_matrix(basis: EigenSystem, h1e, p: Pulse, cfg: IntegrationConfig | None = None) -> TransitionMatrix:
    """W[n, m] = |c_m(+inf)|**2 for c_l(-inf) = delta_{l,n}, all n at once."""
    C = final_block(basis, h1e, p, cfg)
    return TransitionMatrix(np.abs(C.T) ** 2, source="numeric", amplitudes=C.T.copy())


def convergence_study(
    basis: EigenSystem,
    h1e,
    p: Pulse,
    cfg: IntegrationConfig | None = None,
    *,
    init=None,
    tol: float = 2e-3,
    max_doublings: int = 3,
    tighten: float = 10.0,
    safety: float = 10.0,
    floor: float = 1e-9,
) -> ConvergenceReport:
    """Double the window (and tighten tolerances) until final populations settle.

    Populations are compared relative to max(P, 1).  The truncation budget is
    ``max(safety * drift, floor)`` where drift is the largest change of any
    final amplitude between the last two levels.
    """
    cfg = cfg or IntegrationConfig()
    N = basis.dim
    Y0 = np.eye(N, dtype=complex) if init is None else np.asarray(init, dtype=complex).reshape(N, -1)
    finals, windows, rtols = [], [], []
    level_cfg = cfg
    drift = pop_change = np.inf
    for level in range(max_doublings + 1):
        _, _, Yinf, _ = propagate(basis, h1e, p, Y0, level_cfg, times=np.array([level_cfg.t_start, level_cfg.t_end]))
        finals.append(Yinf)
        windows.append((level_cfg.t_start, level_cfg.t_end))
        rtols.append(level_cfg.rel_tol)
        if level > 0:
            drift = float(np.max(np.abs(finals[-1] - finals[-2])))
            P1, P0 = np.abs(finals[-1]) ** 2, np.abs(finals[-2]) ** 2
            pop_change = float(np.max(np.abs(P1 - P0) / np.maximum(P1, 1.0)))
            if pop_change < tol:
                break
        level_cfg = replace(
            level_cfg.scaled_window(2.0),
            rel_tol=max(level_cfg.rel_tol / tighten, 1e-13),
            abs_tol=max(level_cfg.abs_tol / tighten, 1e-15),
        )
    converged = pop_change < tol
    if not converged:
        log.warning("final populations still moving by %.3g after %d doublings", pop_change, max_doublings)
    return ConvergenceReport(
        windows=tuple(windows), rel_tols=tuple(rtols), finals=tuple(finals),
        drift=drift, pop_change=pop_change, converged=converged,
        eps_trunc=max(safety * drift, floor),
    )


def _contour_side(p: Pulse, mode: str) -> int:
    if p.kind is PulseKind.CUSTOM:
        raise ValueError("contour integration needs a pulse with a known analytic continuation")
    if p.is_pole:
        return 1 if p.t_p < 0 else -1
    return 1


def contour_asymptotics(
    basis: EigenSystem,
    h1e,
    p: Pulse,
    n: int,
    delta: float,
    cfg: IntegrationConfig | None = None,
    *,
    mode: str = "plain",
    fit_fraction: float = 0.1,
    n_fit: int = 201,
    residual_tol: float = FIT_RESIDUAL_TOL,
) -> ContourAsymptotics:
    """Integrate along t = xi + i*side*delta and extract the large-xi coefficients.

    The contour lies on the side of the real axis where the pulse is
    holomorphic (above for t_p < 0, below for t_p > 0).

    plain: fits A_l(xi) exp[i (w_l - w_n) xi] -> B_l, with
        A_l = c_l exp[i (w_n - w_l) t] the amplitudes of the rotating frame.
    frequency_shifted: writes f = g exp(i W t) with W = -Omega and integrates
        with the phases exp[i (w_l - w_s + W) t] in the right-hand side; the
        limit of c_l along the contour is D_l.
    """
    if mode not in ("plain", "frequency_shifted"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "frequency_shifted" and p.kind not in (PulseKind.MODULATED_POLE, PulseKind.POLE):
        raise ValueError("frequency-shifted mode needs a (modulated) pole pulse")
    cfg = replace(cfg or IntegrationConfig(), delta=delta)
    side = _contour_side(p, mode)
    M = _as_matrix(h1e, basis)
    w = basis.omegas
    L = cfg.t_end - cfg.t_start
    fit_xi = np.linspace(cfg.t_end - fit_fraction * L, cfg.t_end, n_fit)
    times = np.concatenate([output_grid(cfg), fit_xi])
    t, Y, _, _ = propagate(
        basis, M, p, basis_state(n, basis.dim)[:, None], cfg,
        times=times, side=side, shift_mode=(mode == "frequency_shifted"),
    )
    offset = side * delta
    idx = np.searchsorted(t, fit_xi)
    samples = np.empty((n_fit, basis.dim), dtype=complex)
    nu = w[:, None] - w[None, :]
    for j, k in enumerate(idx):
        xi = t[k]
        c = Y[k, :, 0]
        if cfg.tail_correction:
            _, post = tail_integrals(p, nu, cfg.t_start, xi, offset)
            c = expm(-1j * M * post) @ c
        if mode == "plain":
            tc = xi + 1j * offset
            a = c * np.exp(1j * (w[n] - w) * tc)
            samples[j] = a * np.exp(1j * (w - w[n]) * xi)
        else:
            samples[j] = c
    B = samples.mean(axis=0)
    scale = max(1.0, float(np.max(np.abs(samples))))
    resid = float(np.max(np.abs(samples - B))) / scale
    if resid > residual_tol:
        raise AsymptoticsNotReached(
            f"fit residual {resid:.3g} exceeds {residual_tol:g}; increase t_end"
        )
    return ContourAsymptotics(delta=delta, B=B, fit_residual=resid, mode=mode, side=side, initial=n)
