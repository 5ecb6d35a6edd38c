"""Numerical toolkit for N-level systems driven by non-Hermitian pulses f(t) H1."""

from .dynamics import (
    AmplitudeTrajectory,
    IntegrationConfig,
    contour_asymptotics,
    convergence_study,
    integrate,
    transition_matrix,
)
from .operators import EigenSystem, GeneralOperator, HermitianOperator, eigendecompose, matrix_elements
from .perturbation import TransitionMatrix, first_order, weak_limit_compare
from .pulses import Pulse, analytic_spectrum, classify, modulated_pole_pulse, parse_pulse, pole_pulse
from .scenarios import FIGURES, run_figure, run_scenario
from .spectrum import hilbert_check, numerical_spectrum

__all__ = [
    "AmplitudeTrajectory", "EigenSystem", "FIGURES", "GeneralOperator", "HermitianOperator",
    "IntegrationConfig", "Pulse", "TransitionMatrix", "analytic_spectrum", "classify",
    "contour_asymptotics", "convergence_study", "eigendecompose", "first_order", "hilbert_check",
    "integrate", "matrix_elements", "modulated_pole_pulse", "numerical_spectrum", "parse_pulse",
    "pole_pulse", "run_figure", "run_scenario", "transition_matrix", "weak_limit_compare",
]
