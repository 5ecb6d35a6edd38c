import subprocess
import sys

import numpy as np
import pytest

from nhpt.dynamics import IntegrationConfig
from nhpt.io import read_csv
from nhpt.pulses import gaussian_pulse, pole_pulse
from nhpt.scenarios import (
    FIGURES,
    DegenerateLoop,
    Verdict,
    analyze_loop,
    build_ep2,
    build_ep3,
    expected_eigenvalues,
    hamiltonian_at,
    instantaneous_eigenvalues,
    jordan_blocks,
    omega_threshold_scan,
    run_figure,
    run_scenario,
    verdict,
)

EXPECTED = {
    "fig1a": "remained",
    "fig1b": "flipped_to(2)",
    "fig2a": "remained",
    "fig2b": "remained",
    "fig3a": "mixed",
    "fig3b": "mixed",
    "fig4a": "flipped_to(1)",
    "fig4b": "flipped_to(3)",
    "fig5a": "remained",
    "fig5b": "remained",
}


@pytest.fixture(scope="module")
def figures():
    return {f: run_figure(f) for f in FIGURES}


@pytest.mark.parametrize("builder,size", [(build_ep2, 2), (build_ep3, 3)])
def test_single_jordan_block_at_origin(builder, size):
    h0, h1 = builder()
    assert jordan_blocks(hamiltonian_at(h0, h1, 0.0)) == [size]
    assert np.allclose(hamiltonian_at(h0, h1, 1.0), np.asarray(h0))


def test_jordan_blocks_diagonalizable():
    assert jordan_blocks(np.eye(3)) == [1, 1, 1]
    with pytest.raises(ValueError):
        jordan_blocks(np.diag([1.0, 2.0]))


@pytest.mark.parametrize("system,builder", [("ep2", build_ep2), ("ep3", build_ep3)])
def test_instantaneous_eigenvalues_closed_form(system, builder):
    h0, h1 = builder()
    t = np.linspace(-5, 5, 41)
    p = pole_pulse(1.0, 0.5)
    got = instantaneous_eigenvalues(h0, h1, p, t)
    want = expected_eigenvalues(system, 1.0 + 1 / (t - 0.5j) ** 2)
    # compare as multisets: each expected eigenvalue has a numerical partner
    for g, w in zip(got, want):
        assert np.max(np.min(np.abs(g[:, None] - w[None, :]), axis=0)) < 1e-7


@pytest.mark.parametrize("fid", list(FIGURES))
def test_figure_verdicts(figures, fid):
    r = figures[fid]
    assert str(r.verdict) == EXPECTED[fid]
    assert r.convergence.converged


def test_figure_populations(figures):
    assert figures["fig1b"].final_populations[1] == pytest.approx(31.47, rel=2e-2)
    assert figures["fig4a"].final_populations[0] == pytest.approx(12.26, rel=2e-2)
    assert figures["fig4b"].final_populations[2] == pytest.approx(12.26, rel=2e-2)
    for f in ("fig2a", "fig2b", "fig5a", "fig5b"):
        r = figures[f]
        assert np.max(np.delete(r.final_populations, r.init)) < 1e-3
    a, b = figures["fig3a"].final_populations, figures["fig3b"].final_populations
    assert np.max(np.abs(a - b)) > 1.0


@pytest.mark.parametrize("pair", [("fig1a", "fig1b"), ("fig2a", "fig2b"), ("fig4a", "fig4b"), ("fig5a", "fig5b")])
def test_loop_chirality(figures, pair):
    la, lb = (figures[f].loop for f in pair)
    assert (la.winding, lb.winding) == (1, -1)
    # same point set traversed backwards: z_b(t) = z_a(-t) on a symmetric grid
    np.testing.assert_allclose(la.times, -la.times[::-1], atol=1e-12)
    np.testing.assert_allclose(lb.samples, la.samples[::-1], atol=1e-10, rtol=0)
    assert la.winding_residual < 1e-6 and lb.winding_residual < 1e-6


def test_loop_of_weak_pulse_does_not_wind():
    assert analyze_loop(pole_pulse(0.1, 0.5)).winding == 0


def test_loop_through_ep_is_rejected():
    with pytest.raises(DegenerateLoop):
        analyze_loop(gaussian_pulse(-1.0, 1.0))


def test_scenario_without_loop(tmp_path):
    r = run_scenario("ep2", gaussian_pulse(-1.0, 1.0), 0, IntegrationConfig.symmetric(50.0))
    assert r.loop is None
    out = r.export(tmp_path)
    assert not (out / "loop.csv").exists()
    assert "winding none" in (out / "verdict.txt").read_text()


def test_verdict_rules():
    assert verdict([1.0, 0.0], 0) == Verdict("remained")
    assert str(verdict([1.0, 31.5], 0)) == "flipped_to(2)"
    assert verdict([1.0, 1.0], 0).kind == "mixed"
    assert verdict([0.05, 1.0, 0.05], 1).kind == "remained"


def test_export(figures, tmp_path):
    out = figures["fig4a"].export(tmp_path / "fig4a")
    names = sorted(p.name for p in out.iterdir())
    assert names == ["final_amplitudes.csv", "loop.csv", "plot.py", "populations.csv", "verdict.txt"]
    head, rows = read_csv(out / "populations.csv")
    assert head == ["t", "pop_1", "pop_2", "pop_3"]
    head, _ = read_csv(out / "loop.csv")
    assert head == ["re_z", "im_z"]
    text = (out / "verdict.txt").read_text()
    assert "verdict flipped_to(1)" in text and "initial_state 2" in text
    pytest.importorskip("matplotlib")
    subprocess.run([sys.executable, str(out / "plot.py")], check=True, capture_output=True)
    assert (out / "figure.png").exists()


def test_unknown_figure():
    with pytest.raises(ValueError):
        run_figure("fig9")


def test_omega_threshold_scan():
    pts = omega_threshold_scan(1, [0.0, 1.0, 1.25, 1.5, 2.0, 3.0], t_p=0.5)
    assert str(pts[0].verdict) == "flipped_to(3)"
    assert not pts[1].transitionless and not pts[2].transitionless
    assert all(p.transitionless and p.verdict.kind == "remained" for p in pts[3:])
