"""Randomized checks of unidirectional and transitionless dynamics.

Every trial draws a Hermitian H0 = (X + X^dagger)/2, an arbitrary complex H1
and a pulse from the requested family, all from a per-trial seed spawned from
the root seed.  A trial's truncation budget eps_trunc comes from
:func:`nhpt.dynamics.convergence_study` on that trial, so nothing about the
tolerance is fixed in advance.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .io import thread_count
from .dynamics import IntegrationConfig, convergence_study, final_block
from .operators import EigenSystem, GeneralOperator, HermitianOperator, eigendecompose, matrix_elements
from .perturbation import first_order
from .pulses import Pulse, analytic_spectrum, gaussian_pulse, modulated_pole_pulse, pole_pulse

STRENGTH_CAP = 10.0
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class RandomSystemSpec:
    """Recipe for random trials.

    N cycles through ``n_levels`` trial by trial.  ``fixed_h0``/``fixed_h1``
    pin the operators so that only the pulse is drawn.

    ``family`` is one of "pole", "modpole", "gauss".  ``upper`` picks the pole
    half-plane: True puts the pole below the real axis (t_p < 0), making the
    pulse holomorphic above it.  ``aligned`` pairs the modulation sign with
    t_p so the shifted support clears the level spread; False gives the
    opposite pairing.
    """

    n_levels: tuple = (2, 3, 4, 5, 6)
    seed: int = 42
    h0_scale: float = 1.0
    h1_scale: float = 1.0
    family: str = "pole"
    amplitude: tuple = (0.2, 2.0)
    t_p: tuple = (0.3, 1.0)
    upper: bool = True
    omega_factor: tuple = (1.1, 2.0)
    aligned: bool = True
    hermitian_h1: bool = False
    sigma_factor: tuple = (0.5, 1.5)
    fixed_h0: object = None
    fixed_h1: object = None

    def __post_init__(self):
        if not all(2 <= n <= 8 for n in self.n_levels):
            raise ValueError("random systems need 2 <= N <= 8")
        if self.family not in ("pole", "modpole", "gauss"):
            raise ValueError(f"unknown pulse family {self.family!r}")


@dataclass(frozen=True, eq=False)
class Trial:
    seed: int
    h0: HermitianOperator
    h1: GeneralOperator
    pulse: Pulse
    basis: EigenSystem

    @property
    def dim(self) -> int:
        return self.basis.dim


def trial_seeds(root: int, trials: int) -> list[int]:
    ss = np.random.SeedSequence(root)
    return [int(s.generate_state(1, dtype=np.uint64)[0]) for s in ss.spawn(trials)]


def generate_trial(spec: RandomSystemSpec, seed: int, index: int = 0) -> Trial:
    rng = np.random.default_rng(seed)
    if spec.fixed_h0 is not None:
        h0 = np.asarray(spec.fixed_h0, dtype=complex)
        h1 = np.asarray(spec.fixed_h1, dtype=complex)
    else:
        N = spec.n_levels[index % len(spec.n_levels)]
        X = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        h0 = spec.h0_scale * 0.5 * (X + X.conj().T)
        h1 = spec.h1_scale * (rng.uniform(-1, 1, (N, N)) + 1j * rng.uniform(-1, 1, (N, N)))
        if spec.hermitian_h1:
            h1 = 0.5 * (h1 + h1.conj().T)
    h0op = HermitianOperator(h0)
    basis = eigendecompose(h0op)
    spread = basis.spread
    M = matrix_elements(h1, basis).entries

    amp = rng.uniform(*spec.amplitude)
    cap = STRENGTH_CAP / max(np.linalg.norm(M, 2), 1e-300)
    amp = min(amp, cap)
    phase = rng.uniform(0, 2 * np.pi)
    tp = rng.uniform(*spec.t_p) * (-1.0 if spec.upper else 1.0)
    if spec.family == "pole":
        p = pole_pulse(amp * np.exp(1j * phase), tp)
    elif spec.family == "modpole":
        k = rng.uniform(*spec.omega_factor)
        sign = np.sign(tp) if spec.aligned else -np.sign(tp)
        p = modulated_pole_pulse(amp * np.exp(1j * phase), tp, float(sign * k * spread))
    else:
        # width comparable to the inverse level spacing keeps transitions visible
        sigma = rng.uniform(*spec.sigma_factor) / max(spread, 1e-3)
        p = gaussian_pulse(amp, sigma)
    return Trial(seed, h0op, GeneralOperator(h1), p, basis)


@dataclass(frozen=True)
class TrialResult:
    seed: int
    dim: int
    pulse: str
    worst_violation: float
    eps_trunc: float
    passed: bool


@dataclass(frozen=True)
class VerifyReport:
    name: str
    root_seed: int
    trials: tuple
    eps_trunc: float
    expect_violation: bool = False
    notes: tuple = field(default=())

    @property
    def worst(self) -> TrialResult | None:
        if not self.trials:
            return None
        return max(self.trials, key=lambda r: r.worst_violation)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.trials)

    def format(self) -> str:
        kind = "negative control" if self.expect_violation else "assertion"
        lines = [
            f"suite {self.name} ({kind})",
            f"root_seed {self.root_seed}",
            f"eps_trunc {self.eps_trunc:.3e}",
        ]
        w = self.worst
        if w is not None:
            lines.append(f"worst_violation {w.worst_violation:.3e} seed {w.seed} N {w.dim}")
        lines.append("trial seed N pulse worst_violation eps_trunc status")
        for i, r in enumerate(self.trials):
            lines.append(
                f"{i} {r.seed} {r.dim} {r.pulse} {r.worst_violation:.3e} {r.eps_trunc:.3e} "
                f"{'PASS' if r.passed else 'FAIL'}"
            )
        lines += [f"note {n}" for n in self.notes]
        lines.append(f"result {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _map(fn, items):
    n = thread_count()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _unidirectional_violation(basis: EigenSystem, C: np.ndarray, forbid_up: bool) -> float:
    """C[m, n] = c_m(+inf) from initial n."""
    w = basis.omegas
    N = basis.dim
    worst = 0.0
    for n in range(N):
        worst = max(worst, abs(C[n, n] - 1.0))
        for m in range(N):
            if m == n:
                continue
            if (forbid_up and w[m] >= w[n]) or (not forbid_up and w[m] <= w[n]):
                worst = max(worst, abs(C[m, n]) ** 2)
    return worst


def _transitionless_violation(C: np.ndarray) -> float:
    off = C.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.max(np.abs(off) ** 2))


def _run_suite(name, spec, trials, cfg, violation, *, root_seed, eps_override=None, expect_violation=False):
    cfg = cfg or IntegrationConfig()
    seeds = trial_seeds(root_seed, trials)

    def one(args):
        i, seed = args
        tr = generate_trial(spec, seed, i)
        M = matrix_elements(tr.h1, tr.basis)
        if eps_override is None:
            conv = convergence_study(tr.basis, M, tr.pulse, cfg, max_doublings=1)
            C, eps = conv.base, conv.eps_trunc
        else:
            C, eps = final_block(tr.basis, M, tr.pulse, cfg), eps_override
        v = violation(tr.basis, C)
        ok = v > 10 * eps if expect_violation else v < eps
        return TrialResult(seed, tr.dim, tr.pulse.describe(), float(v), float(eps), bool(ok))

    results = tuple(_map(one, list(enumerate(seeds))))
    eps = eps_override if eps_override is not None else max((r.eps_trunc for r in results), default=0.0)
    return VerifyReport(name, root_seed, results, float(eps), expect_violation)


def check_unidirectional(
    spec: RandomSystemSpec | None = None, trials: int = 50, cfg=None, *, root_seed: int | None = None
) -> VerifyReport:
    """One-sided pole pulses: no transitions against the allowed direction, survival amplitude 1.

    With ``spec.upper`` (t_p < 0) upward transitions are forbidden; otherwise
    downward ones are.
    """
    spec = spec or RandomSystemSpec()
    forbid_up = spec.upper
    return _run_suite(
        "unidirectional" if forbid_up else "unidirectional-mirrored", spec, trials, cfg,
        lambda b, C: _unidirectional_violation(b, C, forbid_up),
        root_seed=spec.seed if root_seed is None else root_seed,
    )


def check_transitionless(
    spec: RandomSystemSpec | None = None, trials: int = 50, cfg=None, *, root_seed: int | None = None
) -> VerifyReport:
    """Modulated pole pulses whose support clears the spread: all other final populations vanish."""
    spec = spec or RandomSystemSpec(family="modpole")
    return _run_suite(
        "transitionless", spec, trials, cfg, lambda b, C: _transitionless_violation(C),
        root_seed=spec.seed if root_seed is None else root_seed,
    )


def hermitian_control(eps_trunc: float, trials: int = 10, cfg=None, *, root_seed: int = 7) -> VerifyReport:
    """Real Gaussian pulses with Hermitian H1; must violate the unidirectional assertion."""
    spec = RandomSystemSpec(family="gauss", hermitian_h1=True, amplitude=(0.5, 1.5), seed=root_seed)
    return _run_suite(
        "control-hermitian-gaussian", spec, trials, cfg,
        lambda b, C: _unidirectional_violation(b, C, True),
        root_seed=root_seed, eps_override=eps_trunc, expect_violation=True,
    )


def misaligned_control(eps_trunc: float, trials: int = 10, cfg=None, *, root_seed: int = 11) -> VerifyReport:
    """Omega * t_p < 0: the support does not clear the spread; transitions must appear."""
    spec = RandomSystemSpec(family="modpole", aligned=False, omega_factor=(1.0, 1.2), seed=root_seed)
    return _run_suite(
        "control-misaligned-modulation", spec, trials, cfg, lambda b, C: _transitionless_violation(C),
        root_seed=root_seed, eps_override=eps_trunc, expect_violation=True,
    )


@dataclass(frozen=True)
class SymmetryReport:
    root_seed: int
    hermitian_max_asymmetry: float
    complex_f_asymmetric: int
    complex_f_h1_magnitudes_symmetric: int
    nonnormal_asymmetric: int
    spectrum_magnitude_symmetric: int
    trials: int

    @property
    def passed(self) -> bool:
        n = self.trials
        return (
            self.hermitian_max_asymmetry <= SYMMETRY_TOL
            and self.complex_f_asymmetric == n
            and self.complex_f_h1_magnitudes_symmetric == n
            and self.nonnormal_asymmetric == n
            and self.spectrum_magnitude_symmetric == n
        )

    def format(self) -> str:
        return (
            "suite first-order-symmetry\n"
            f"root_seed {self.root_seed}\n"
            f"trials {self.trials}\n"
            f"hermitian_max_relative_asymmetry {self.hermitian_max_asymmetry:.3e} (tol {SYMMETRY_TOL:g})\n"
            f"complex_f_hermitian_h1 asymmetric {self.complex_f_asymmetric}/{self.trials}, "
            f"|H1| symmetric {self.complex_f_h1_magnitudes_symmetric}/{self.trials}\n"
            f"real_f_nonnormal_h1 asymmetric {self.nonnormal_asymmetric}/{self.trials}, "
            f"|F| symmetric {self.spectrum_magnitude_symmetric}/{self.trials}\n"
            f"result {'PASS' if self.passed else 'FAIL'}\n"
        )


def check_first_order_symmetry(spec: RandomSystemSpec | None = None, trials: int = 50) -> SymmetryReport:
    """First-order W: symmetric in the Hermitian case, asymmetric in both non-Hermitian cases."""
    spec = spec or RandomSystemSpec()
    root_seed = spec.seed
    seeds = trial_seeds(root_seed, trials)
    herm_spec = replace(spec, family="gauss", hermitian_h1=True)
    nonnormal_spec = replace(spec, family="gauss", hermitian_h1=False)
    worst = 0.0
    cplx_asym = cplx_mag = nn_asym = nn_mag = 0
    for i, seed in enumerate(seeds):
        tr = generate_trial(herm_spec, seed, i)
        M = matrix_elements(tr.h1, tr.basis)
        W = first_order(tr.basis, M, tr.pulse).W
        worst = max(worst, float(np.max(np.abs(W - W.T)) / max(1.0, np.max(W))))

        # same Hermitian H1, complex one-sided pulse
        p = pole_pulse(1.0, -0.5)
        W = first_order(tr.basis, M, p).W
        absM = np.abs(M.entries)
        cplx_mag += bool(np.allclose(absM, absM.T, rtol=0, atol=1e-12))
        cplx_asym += bool(np.max(np.abs(W - W.T)) > 1e-6 * max(1.0, np.max(W)))

        # real pulse, non-normal H1
        tr2 = generate_trial(nonnormal_spec, seed, i)
        M2 = matrix_elements(tr2.h1, tr2.basis)
        W2 = first_order(tr2.basis, M2, tr2.pulse).W
        w = tr2.basis.omegas
        F = np.abs(analytic_spectrum(tr2.pulse, (w[None, :] - w[:, None]).ravel())).reshape(len(w), len(w))
        nn_mag += bool(np.allclose(F, F.T, rtol=1e-13, atol=0))
        nn_asym += bool(np.max(np.abs(W2 - W2.T)) > 1e-6 * max(1.0, np.max(W2)))
    return SymmetryReport(root_seed, worst, cplx_asym, cplx_mag, nn_asym, nn_mag, trials)


SUITES = ("unidirectional", "transitionless", "symmetry", "all")


def run_suites(suite: str = "all", seed: int = 42, trials: int = 50, cfg=None) -> list:
    """Run the named suite(s) with their negative controls; returns report objects.

    Controls use ``max(1, trials // 5)`` trials and are judged against the
    largest eps_trunc of the assertion suite they accompany.
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    n_ctrl = max(1, trials // 5)
    ss = np.random.SeedSequence(seed)
    s_uni, s_tl, s_sym, s_c1, s_c2 = (int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(5))
    reports = []
    if suite in ("unidirectional", "all"):
        up = check_unidirectional(RandomSystemSpec(seed=s_uni), trials, cfg)
        down = check_unidirectional(RandomSystemSpec(seed=s_uni, upper=False), max(1, trials // 5), cfg)
        eps = max(up.eps_trunc, down.eps_trunc)
        reports += [up, down, hermitian_control(eps, n_ctrl, cfg, root_seed=s_c1)]
    if suite in ("transitionless", "all"):
        tl = check_transitionless(RandomSystemSpec(family="modpole", seed=s_tl), trials, cfg)
        reports += [tl, misaligned_control(tl.eps_trunc, n_ctrl, cfg, root_seed=s_c2)]
    if suite in ("symmetry", "all"):
        reports.append(check_first_order_symmetry(RandomSystemSpec(seed=s_sym), trials))
    return reports
