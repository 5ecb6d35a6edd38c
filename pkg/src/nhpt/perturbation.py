"""First-order transition probabilities and their check against full numerics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import write_csv
from .operators import EigenSystem
from .pulses import Pulse, PulseKind, UnsupportedPulse, analytic_spectrum

ABS_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """W[n, m]: probability of n -> m (0-based indices).

    For ``source == "first_order"`` the diagonal is the unperturbed survival
    value 1, flagged by ``survival_is_unperturbed``.
    """

    W: np.ndarray
    source: str
    amplitudes: np.ndarray | None = None
    survival_is_unperturbed: bool = False

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("W must be square")
        if np.any(W < 0):
            raise ValueError("transition probabilities must be nonnegative")
        if self.source not in ("first_order", "numeric"):
            raise ValueError(f"unknown source {self.source!r}")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    def off_diagonal(self) -> np.ndarray:
        return self.W[~np.eye(self.dim, dtype=bool)]

    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.W - self.W.T)))

    def to_csv(self, path):
        rows = [
            [self.source, n + 1, m + 1, self.W[n, m]]
            for n in range(self.dim) for m in range(self.dim)
        ]
        return write_csv(path, ["source", "n", "m", "W"], rows)


def _spectrum_at(p: Pulse, omegas: np.ndarray) -> np.ndarray:
    try:
        return analytic_spectrum(p, omegas)
    except UnsupportedPulse:
        from .spectrum import interpolate_spectrum, numerical_spectrum

        sg = numerical_spectrum(p, t_max=2000.0, n_samples=2**18)
        return interpolate_spectrum(sg, omegas)


def first_order(basis: EigenSystem, h1e, p: Pulse) -> TransitionMatrix:
    """W[n, m] = |(H1)_{m,n}|**2 |F(w_m - w_n)|**2 for m != n."""
    M = np.asarray(h1e, dtype=complex)
    w = basis.omegas
    dw = w[None, :] - w[:, None]  # [n, m] -> w_m - w_n
    F = _spectrum_at(p, dw.ravel()).reshape(dw.shape)
    W = np.abs(M.T) ** 2 * np.abs(F) ** 2
    np.fill_diagonal(W, 1.0)
    return TransitionMatrix(W, source="first_order", survival_is_unperturbed=True)


@dataclass(frozen=True)
class WeakLimitReport:
    scale: float
    first_order: TransitionMatrix
    numeric: TransitionMatrix
    max_rel_deviation: float
    higher_order_residual: float
    compared: int

    def passed(self, rel_tol: float = 0.01) -> bool:
        return self.max_rel_deviation < rel_tol


def weak_limit_compare(basis: EigenSystem, h1e, p: Pulse, scale: float, cfg=None) -> WeakLimitReport:
    """Compare first-order W with full integration for the pulse scaled by ``scale``.

    The relative deviation is taken over off-diagonal entries whose
    first-order value exceeds the 1e-12 floor.  Entries that vanish at
    first order (zero coupling or zero spectrum) are reported separately as
    ``higher_order_residual``: their largest numeric value divided by the
    largest first-order entry, which is O(scale**2) when only multi-step
    paths feed them.
    """
    from .dynamics import transition_matrix

    if not 0 <= abs(scale) <= 1e-2:
        raise ValueError("weak-limit comparison needs |scale| <= 1e-2")
    q = p.scaled(scale)
    fo = first_order(basis, h1e, q)
    num = transition_matrix(basis, h1e, q, cfg)
    off = ~np.eye(basis.dim, dtype=bool)
    Wf, Wn = fo.W[off], num.W[off]
    sel = Wf > ABS_FLOOR
    if np.any(sel):
        rel = float(np.max(np.abs(Wn[sel] - Wf[sel]) / Wf[sel]))
        resid = float(np.max(Wn[~sel], initial=0.0)) / float(np.max(Wf))
    else:
        rel = 0.0 if np.all(Wn <= ABS_FLOOR) else np.inf
        resid = 0.0
    return WeakLimitReport(
        scale=scale, first_order=fo, numeric=num, max_rel_deviation=rel,
        higher_order_residual=resid, compared=int(np.sum(sel)),
    )


def is_real_pulse(p: Pulse) -> bool:
    return p.kind is PulseKind.GAUSSIAN_REAL and p.A.imag == 0
