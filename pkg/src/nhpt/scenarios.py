"""Two- and three-level exceptional-point models and the figure runs.

Both models have the form H(t) = H0 + f(t) H1 with z(t) = 1 + f(t); the
origin z = 0 is an EP (a single Jordan block).  Each figure panel is a pulse
plus an initial state, see :data:`FIGURES`.
"""

from __future__ import annotations

import math
import textwrap
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import (
    AmplitudeTrajectory,
    ConvergenceReport,
    IntegrationConfig,
    basis_state,
    convergence_study,
    integrate,
    output_grid,
)
from .io import write_csv
from .operators import GeneralOperator, HermitianOperator, eigendecompose, matrix_elements
from .pulses import Pulse, evaluate, modulated_pole_pulse, pole_pulse

DOMINANCE = 0.9
EP_CLEARANCE = 1e-6


class DegenerateLoop(ValueError):
    pass


def build_ep2() -> tuple[HermitianOperator, GeneralOperator]:
    """H0 = |I><II| + |II><I|, H1 = |II><I|."""
    h0 = np.array([[0, 1], [1, 0]], dtype=complex)
    h1 = np.array([[0, 0], [1, 0]], dtype=complex)
    return HermitianOperator(h0), GeneralOperator(h1)


def build_ep3() -> tuple[HermitianOperator, GeneralOperator]:
    """Tridiagonal H0 with unit hoppings; H1 = |II><I| + |III><II|."""
    h0 = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    h1 = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=complex)
    return HermitianOperator(h0), GeneralOperator(h1)


SYSTEMS = {"ep2": build_ep2, "ep3": build_ep3}


def hamiltonian_at(h0, h1, z: complex) -> np.ndarray:
    return np.asarray(h0) + (z - 1.0) * np.asarray(h1)


def _sort_eigs(ev: np.ndarray) -> np.ndarray:
    return ev[np.lexsort((ev.imag, ev.real))]


def instantaneous_eigenvalues(h0, h1, p: Pulse, times) -> np.ndarray:
    """Eigenvalues of H(t), each row sorted by (real, imag)."""
    z = 1.0 + np.asarray(evaluate(p, np.asarray(times, dtype=float)))
    return np.array([_sort_eigs(np.linalg.eigvals(hamiltonian_at(h0, h1, zk))) for zk in z])


def expected_eigenvalues(system: str, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    r = np.sqrt(z) if system == "ep2" else np.sqrt(2 * z)
    cols = [-r, r] if system == "ep2" else [-r, np.zeros_like(r), r]
    out = np.stack(cols, axis=1)
    return np.array([_sort_eigs(row) for row in out])


def jordan_blocks(h: np.ndarray, tol: float = 1e-9) -> list[int]:
    """Jordan block sizes of a matrix with a single (numerically) repeated eigenvalue."""
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    lam = np.trace(h) / n
    nil = h - lam * np.eye(n)
    if np.max(np.abs(np.linalg.matrix_power(nil, n))) > tol:
        raise ValueError("matrix has more than one distinct eigenvalue")
    # number of blocks of size >= k is rank(N^{k-1}) - rank(N^k)
    ranks = [n] + [np.linalg.matrix_rank(np.linalg.matrix_power(nil, k), tol=tol) for k in range(1, n + 1)]
    ge = [ranks[k - 1] - ranks[k] for k in range(1, n + 1)]
    sizes = []
    for k in range(1, n + 1):
        exact = ge[k - 1] - (ge[k] if k < n else 0)
        sizes += [k] * exact
    return sorted(sizes, reverse=True)


@dataclass(frozen=True, eq=False)
class Loop:
    times: np.ndarray
    samples: np.ndarray
    winding: int
    winding_residual: float
    min_distance_to_EP: float

    def to_csv(self, path):
        return write_csv(path, ["re_z", "im_z"], zip(self.samples.real, self.samples.imag))


def _refine_arg_steps(p: Pulse, t: np.ndarray, z: np.ndarray, max_step: float, depth: int = 0):
    # sum of arg(z[k+1] / z[k]); bisect any interval whose phase step is large
    steps = np.angle(z[1:] / z[:-1])
    bad = np.flatnonzero(np.abs(steps) > max_step)
    if bad.size == 0 or depth > 30:
        return float(np.sum(steps)), t, z
    ins_t = 0.5 * (t[bad] + t[bad + 1])
    ins_z = 1.0 + np.asarray(evaluate(p, ins_t))
    t2 = np.insert(t, bad + 1, ins_t)
    z2 = np.insert(z, bad + 1, ins_z)
    return _refine_arg_steps(p, t2, z2, max_step, depth + 1)


def _loop_grid(t_max: float) -> np.ndarray:
    return output_grid(IntegrationConfig.symmetric(t_max))


def analyze_loop(p: Pulse, times=None) -> Loop:
    """Winding of z(t) = 1 + f(t) around the EP at z = 0 and distance to it."""
    t = _loop_grid(2000.0) if times is None else np.asarray(times, dtype=float)
    z = 1.0 + np.asarray(evaluate(p, t), dtype=complex)
    if np.min(np.abs(z)) < EP_CLEARANCE:
        raise DegenerateLoop(f"loop passes within {np.min(np.abs(z)):.2e} of the EP")
    total, tr, zr = _refine_arg_steps(p, t, z, math.pi / 8)
    dmin = float(np.min(np.abs(zr)))
    if dmin < EP_CLEARANCE:
        raise DegenerateLoop(f"loop passes within {dmin:.2e} of the EP")
    turns = total / (2 * math.pi)
    w = int(round(turns))
    return Loop(times=t, samples=z, winding=w, winding_residual=abs(turns - w), min_distance_to_EP=dmin)


@dataclass(frozen=True)
class Verdict:
    kind: str  # "remained" | "flipped" | "mixed"
    state: int | None = None  # 1-based target state when flipped

    def __str__(self) -> str:
        return f"flipped_to({self.state})" if self.kind == "flipped" else self.kind


def verdict(final_populations, init: int) -> Verdict:
    """Dominant final population above 0.9 of the total decides; ``init`` is 0-based."""
    P = np.asarray(final_populations, dtype=float)
    total = P.sum()
    dom = int(np.argmax(P))
    if total > 0 and P[dom] / total > DOMINANCE:
        return Verdict("remained") if dom == init else Verdict("flipped", dom + 1)
    return Verdict("mixed")


@dataclass(frozen=True)
class FigureSpec:
    system: str
    pulse: Pulse
    init: int  # 0-based
    note: str = ""


_S2 = math.sqrt(2.0)
FIGURES: dict[str, FigureSpec] = {
    "fig1a": FigureSpec("ep2", pole_pulse(1.0, -0.5), 0, "counter-clockwise loop"),
    "fig1b": FigureSpec("ep2", pole_pulse(1.0, 0.5), 0, "clockwise loop"),
    "fig2a": FigureSpec("ep2", modulated_pole_pulse(1.0, -0.5, -2.0), 0, "Omega*t_p > 0"),
    "fig2b": FigureSpec("ep2", modulated_pole_pulse(1.0, 0.5, 2.0), 0, "Omega*t_p > 0"),
    "fig3a": FigureSpec("ep2", modulated_pole_pulse(1.0, -0.5, 2.0), 0, "Omega*t_p < 0"),
    "fig3b": FigureSpec("ep2", modulated_pole_pulse(1.0, 0.5, -2.0), 0, "Omega*t_p < 0"),
    "fig4a": FigureSpec("ep3", pole_pulse(1.0, -0.5), 1, "counter-clockwise loop"),
    "fig4b": FigureSpec("ep3", pole_pulse(1.0, 0.5), 1, "clockwise loop"),
    "fig5a": FigureSpec("ep3", modulated_pole_pulse(1.0, -0.5, -2 * _S2), 1, "Omega*t_p > 0"),
    "fig5b": FigureSpec("ep3", modulated_pole_pulse(1.0, 0.5, 2 * _S2), 1, "Omega*t_p > 0"),
}


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    figure: str
    system: str
    pulse: Pulse
    init: int
    loop: Loop | None
    trajectory: AmplitudeTrajectory
    instantaneous_eigenvalues: np.ndarray
    verdict: Verdict
    convergence: ConvergenceReport
    final: np.ndarray = field(default=None)

    @property
    def final_populations(self) -> np.ndarray:
        return np.abs(self.final) ** 2

    def export(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if self.loop is not None:
            self.loop.to_csv(out / "loop.csv")
        tr = self.trajectory
        n = tr.c.shape[1]
        write_csv(
            out / "populations.csv",
            ["t"] + [f"pop_{l}" for l in range(1, n + 1)],
            ([t, *row] for t, row in zip(tr.times, tr.populations)),
        )
        write_csv(
            out / "final_amplitudes.csv",
            ["state", "re_c", "im_c", "pop"],
            ([l + 1, c.real, c.imag, abs(c) ** 2] for l, c in enumerate(self.final)),
        )
        (out / "verdict.txt").write_text(
            f"figure {self.figure}\nsystem {self.system}\npulse {self.pulse.describe()}\n"
            f"initial_state {self.init + 1}\n"
            f"winding {self.loop.winding if self.loop is not None else 'none'}\n"
            + "".join(f"pop_{l + 1} {P:.12g}\n" for l, P in enumerate(self.final_populations))
            + f"eps_trunc {self.convergence.eps_trunc:.3g}\nverdict {self.verdict}\n"
        )
        (out / "plot.py").write_text(PLOT_SCRIPT)
        return out


PLOT_SCRIPT = textwrap.dedent(
    """\
    # Plot loop.csv (if present) and populations.csv from this directory; writes figure.png.
    import csv
    import sys
    from pathlib import Path

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent


    def load(name):
        with open(here / name) as fh:
            rows = list(csv.reader(fh))
        return rows[0], [[float(x) for x in r] for r in rows[1:]]


    head, pops = load("populations.csv")
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5, 7))
    if (here / "loop.csv").exists():
        _, loop = load("loop.csv")
        ax1.plot([r[0] for r in loop], [r[1] for r in loop])
    ax1.plot([0], [0], "k*")
    ax1.set_xlabel("Re z")
    ax1.set_ylabel("Im z")
    t = [r[0] for r in pops]
    for j, name in enumerate(head[1:], start=1):
        ax2.plot(t, [r[j] for r in pops], label=name)
    ax2.set_xlim(-10, 10)
    ax2.set_xlabel("t")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(here / "figure.png", dpi=120)
    """
)


def run_scenario(
    system: str,
    p: Pulse,
    init: int,
    cfg: IntegrationConfig | None = None,
    *,
    figure: str = "custom",
    h0=None,
    h1=None,
) -> ScenarioResult:
    """Integrate one initial state, certify the window, and classify the outcome."""
    cfg = cfg or IntegrationConfig()
    if h0 is None:
        h0, h1 = SYSTEMS[system]()
    basis = eigendecompose(h0)
    M = matrix_elements(h1, basis)
    if not 0 <= init < basis.dim:
        raise ValueError(f"initial state must be in 1..{basis.dim}")
    v0 = basis_state(init, basis.dim)
    traj = integrate(basis, M, p, v0, cfg)
    conv = convergence_study(basis, M, p, cfg, init=v0)
    final = conv.final[:, 0]
    try:
        loop = analyze_loop(p, traj.times)
    except DegenerateLoop:
        loop = None  # z(t) touches the EP: no winding is defined
    t_c = traj.times[np.abs(traj.times) <= cfg.center]
    eigs = instantaneous_eigenvalues(h0, h1, p, t_c)
    return ScenarioResult(
        figure=figure, system=system, pulse=p, init=init, loop=loop, trajectory=traj,
        instantaneous_eigenvalues=eigs, verdict=verdict(np.abs(final) ** 2, init),
        convergence=conv, final=final,
    )


def run_figure(fig_id: str, cfg: IntegrationConfig | None = None, out_dir=None) -> ScenarioResult:
    try:
        spec = FIGURES[fig_id]
    except KeyError:
        raise ValueError(f"unknown figure {fig_id!r}; choose from {', '.join(FIGURES)}") from None
    res = run_scenario(spec.system, spec.pulse, spec.init, cfg, figure=fig_id)
    if out_dir is not None:
        res.export(Path(out_dir) / fig_id)
    return res


@dataclass(frozen=True)
class ScanPoint:
    Omega: float
    verdict: Verdict
    populations: np.ndarray
    max_transfer: float  # largest non-initial final population

    @property
    def transitionless(self) -> bool:
        return self.max_transfer < 1e-3


def omega_threshold_scan(init: int, omegas, *, A: complex = 1.0, t_p: float = 0.5, cfg=None) -> list[ScanPoint]:
    """Three-level model driven by modulated pole pulses at each Omega (Omega = 0: plain pole)."""
    h0, h1 = build_ep3()
    basis = eigendecompose(h0)
    M = matrix_elements(h1, basis)
    v0 = basis_state(init, basis.dim)
    out = []
    for Om in omegas:
        p = pole_pulse(A, t_p) if Om == 0 else modulated_pole_pulse(A, t_p, float(Om))
        tr = integrate(basis, M, p, v0, cfg, times=np.array([]))
        P = tr.final_populations
        others = np.delete(P, init)
        out.append(ScanPoint(float(Om), verdict(P, init), P, float(others.max())))
    return out
