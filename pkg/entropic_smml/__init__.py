"""Entropic strict minimum message length codebooks."""

from .engine import analyze_fit, build_codebook_report, figure_comparison, sweep_tau
from .family import beta_binomial_predictive, make_binomial
from .invariants import run_invariant_suite
from .models import Codebook, CriterionSpec, Partition, SolverConfig
from .optimize import fit_codebook, interval_dp

__all__ = [
    "Codebook",
    "CriterionSpec",
    "Partition",
    "SolverConfig",
    "analyze_fit",
    "beta_binomial_predictive",
    "build_codebook_report",
    "figure_comparison",
    "fit_codebook",
    "interval_dp",
    "make_binomial",
    "run_invariant_suite",
    "sweep_tau",
]
