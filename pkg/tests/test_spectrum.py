import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nhpt.io import read_csv
from nhpt.pulses import analytic_spectrum, custom_pulse, gaussian_pulse, modulated_pole_pulse, pole_pulse, zero_pulse
from nhpt.spectrum import (
    HalfLine,
    NotApplicable,
    forbidden_region,
    hilbert_check,
    hilbert_transform,
    interpolate_spectrum,
    numerical_spectrum,
    one_sidedness,
)

POLES = [pole_pulse(1, -0.5), pole_pulse(1, 0.5), modulated_pole_pulse(0.5 + 0.5j, -1.0, -2.0)]


def _check_agreement(p, sg, seed, edge_gap=0.0):
    rng = np.random.default_rng(seed)
    ok = (np.abs(sg.omegas) <= 20) & (np.abs(sg.omegas - p.modulation) >= edge_gap)
    idx = rng.choice(np.flatnonzero(ok), 100, replace=False)
    a = analytic_spectrum(p, sg.omegas[idx])
    err = np.abs(sg.values[idx] - a)
    return float(np.max(err / np.maximum(1e-6, 1e-4 * np.abs(a))))


@pytest.fixture(scope="module")
def spectra():
    return {(p.describe(), tc): numerical_spectrum(p, 2000, 2**18, tail_correction=tc) for p in POLES for tc in (0, 1)}


@pytest.mark.parametrize("p", POLES, ids=lambda p: p.describe())
def test_tail_corrected_spectrum_matches_closed_form(p, spectra):
    assert _check_agreement(p, spectra[(p.describe(), 1)], 0) < 1.0


@pytest.mark.parametrize("p", POLES, ids=lambda p: p.describe())
def test_plain_spectrum_matches_closed_form_away_from_edge(p, spectra):
    # untreated 1/t**2 tails leave an error ~ 1/(t_max**2 |w - edge|) near the support edge
    assert _check_agreement(p, spectra[(p.describe(), 0)], 1, edge_gap=0.5) < 1.0


def test_plain_spectrum_truncation_at_zero_frequency(spectra):
    # integral of 1/(t - i t_p)**2 over [-T, T] is -2T/(T**2 + t_p**2): the truncation error at w = 0
    sg = spectra[("pole:A=1,tp=-0.5", 0)]
    k = int(np.argmin(np.abs(sg.omegas)))
    assert sg.omegas[k] == 0
    assert sg.values[k].real == pytest.approx(-2 * 2000 / (2000**2 + 0.25), rel=1e-6)


def test_interpolation_off_grid(spectra):
    p = POLES[0]
    sg = spectra[(p.describe(), 1)]
    w = np.random.default_rng(2).uniform(-20, 20, 100)
    a = analytic_spectrum(p, w)
    assert np.all(np.abs(interpolate_spectrum(sg, w) - a) <= np.maximum(1e-6, 1e-4 * np.abs(a)))


@pytest.mark.parametrize("p", POLES[:2], ids=lambda p: p.describe())
def test_leakage_small_and_monotone(p):
    leaks = [numerical_spectrum(p, T, 2**18).leakage for T in (500, 1000, 2000, 4000)]
    assert leaks[2] < 1e-3
    assert all(b <= a + 1e-9 for a, b in zip(leaks, leaks[1:]))
    assert leaks[-1] < leaks[0]


def test_forbidden_region_follows_classification():
    assert forbidden_region(pole_pulse(1, -0.5)) == HalfLine("above", 0.0)
    assert forbidden_region(pole_pulse(1, 0.5)) == HalfLine("below", 0.0)
    assert forbidden_region(modulated_pole_pulse(1, -0.5, -2)) == HalfLine("above", -2.0)


def test_modulated_leakage_about_shifted_edge():
    sg = numerical_spectrum(modulated_pole_pulse(1, -0.5, -2.0), 2000, 2**18)
    assert sg.forbidden.edge == -2.0 and sg.leakage < 1e-3


def test_gaussian_spectrum_symmetric_and_half_leakage():
    sg = numerical_spectrum(gaussian_pulse(1.0, 0.8), 200, 2**14)
    # grid runs from -N/2 to N/2 - 1; pair each w with -w
    F = np.abs(sg.values)
    mid = len(F) // 2
    assert sg.omegas[mid] == 0
    np.testing.assert_allclose(F[mid + 1:], F[mid - 1:0:-1], atol=1e-10, rtol=0)
    assert one_sidedness(sg, HalfLine("above", 0.0)) == pytest.approx(0.5, abs=1e-10)


def test_zero_pulse_spectrum():
    sg = numerical_spectrum(zero_pulse(), 100, 1024)
    assert np.all(sg.values == 0) and sg.leakage == 0.0


def test_exact_one_sided_sampling_scores_zero():
    sg = numerical_spectrum(pole_pulse(1, -0.5), 2000, 2**12)
    exact = type(sg)(**{**sg.__dict__, "values": analytic_spectrum(pole_pulse(1, -0.5), sg.omegas)})
    assert one_sidedness(exact) == 0.0


@pytest.mark.parametrize("p", POLES[:2] + [gaussian_pulse(1, 1)], ids=lambda p: p.describe())
def test_parseval(p):
    sg = numerical_spectrum(p, 2000, 2**18)
    assert sg.spectral_energy == pytest.approx(sg.time_energy, rel=1e-2)
    # |f|**2 integral for a pole pulse: pi / (2 |t_p|**3)
    if p.is_pole:
        assert sg.time_energy == pytest.approx(np.pi / (2 * 0.5**3), rel=1e-6)


def test_input_validation():
    p = pole_pulse(1, 0.5)
    with pytest.raises(ValueError):
        numerical_spectrum(p, 100, 1000)
    with pytest.raises(ValueError):
        numerical_spectrum(p, 100, 512)
    with pytest.raises(ValueError):
        numerical_spectrum(p, -1, 1024)
    with pytest.raises(ValueError, match="1e-6"):
        numerical_spectrum(pole_pulse(1, 5e-7), 100, 1024)


def test_custom_pulse_spectrum():
    p = custom_pulse(lambda t: np.exp(-t * t / 2))
    sg = numerical_spectrum(p, 100, 2**14)
    w = sg.omegas[np.abs(sg.omegas) < 5]
    np.testing.assert_allclose(interpolate_spectrum(sg, w), np.sqrt(2 * np.pi) * np.exp(-w * w / 2), atol=1e-10)


def test_spectrum_csv(tmp_path):
    sg = numerical_spectrum(pole_pulse(1, -0.5), 100, 1024)
    sg.to_csv(tmp_path / "s.csv")
    head, rows = read_csv(tmp_path / "s.csv")
    assert head == ["omega", "re_F", "im_F", "abs_F"] and len(rows) == 1024


@pytest.mark.parametrize("tp", [-0.5, 0.5])
def test_hilbert_relation(tp):
    assert hilbert_check(pole_pulse(1, tp), 2000, 2**18) < 1e-3


def test_hilbert_sign_matters():
    # the wrong-sign relation fails for a one-sided pulse
    from nhpt.pulses import evaluate
    from nhpt.spectrum import sample_grid

    t = sample_grid(2000, 2**18)
    f = evaluate(pole_pulse(1, 0.5), t)
    central = np.abs(t) < 1000
    assert np.max(np.abs(f.imag - hilbert_transform(f.real))[central]) > 0.1


def test_hilbert_not_applicable():
    with pytest.raises(NotApplicable):
        hilbert_check(gaussian_pulse(1, 1))
    with pytest.raises(NotApplicable):
        hilbert_check(modulated_pole_pulse(1, -0.5, 2.0))


@given(st.integers(0, 2**31))
def test_hilbert_transform_of_cosine_is_sine(seed):
    k = np.random.default_rng(seed).integers(1, 100)
    n = 1024
    x = np.arange(n)
    h = hilbert_transform(np.cos(2 * np.pi * k * x / n))
    np.testing.assert_allclose(h, np.sin(2 * np.pi * k * x / n), atol=1e-10)
