from __future__ import annotations

import unittest
from unittest import mock

import numpy as np

from entropic_smml.family import beta_binomial_predictive, make_binomial
from entropic_smml.invariants import (
    check_codebook_simplex,
    check_codepoint_slope,
    check_cumulant_expansion,
    check_dp_exhaustive,
    check_fitted_codepoints,
    check_interpolation_bounds,
    check_mean_map_monotone,
    check_model_normalization,
    check_nml,
    check_partition_structure,
    check_predictive_quadrature,
    check_regimes,
    check_regret_nonnegative,
    check_variational,
    check_worst_case_endpoint,
    random_codebook,
    run_invariant_suite,
)
from entropic_smml.errors import InvalidArgumentError
from entropic_smml.models import Codebook, CriterionSpec
from entropic_smml.optimize import fit_codebook


class InvariantChecksTestCase(unittest.TestCase):
    def setUp(self) -> None:
        self.model = make_binomial(8)
        self.rpred = beta_binomial_predictive(self.model, 2.0, 3.0)
        rng = np.random.default_rng(11)
        self.codebooks = [random_codebook(self.model, rng) for _ in range(5)]

    def assertAllPassed(self, results) -> None:
        for result in results:
            self.assertTrue(result.passed, f"{result.name}: {result.magnitude}")

    def test_model_checks(self) -> None:
        self.assertAllPassed(check_model_normalization([2, 7]))
        self.assertAllPassed([check_predictive_quadrature([3]), check_mean_map_monotone()])

    def test_codebook_checks(self) -> None:
        self.assertAllPassed(
            [
                check_codebook_simplex(self.model, self.codebooks),
                check_regret_nonnegative(self.model, self.codebooks),
                check_partition_structure(self.model, self.codebooks),
                check_cumulant_expansion(),
            ]
        )
        self.assertAllPassed(check_interpolation_bounds(self.model, self.rpred, self.codebooks))
        self.assertAllPassed(check_variational(self.model, self.rpred, self.codebooks, seed=3))

    def test_solver_checks(self) -> None:
        fit = fit_codebook(self.model, self.rpred, CriterionSpec.entropic(1.0))
        self.assertAllPassed(check_fitted_codepoints(self.model, self.rpred, fit))
        rng = np.random.default_rng(5)
        self.assertAllPassed([check_dp_exhaustive([4, 6], rng)])
        self.assertAllPassed(check_nml([3, 9], rng, draws=50))

    def test_tilted_codepoints_move_linearly_in_tau(self) -> None:
        result = check_codepoint_slope()
        self.assertTrue(result.passed, result.detail)
        self.assertEqual(result.name, "tilted_codepoint_linear_in_tau")
        self.assertTrue(result.detail.startswith("C="))

    def test_worst_case_agrees_with_large_tau(self) -> None:
        results = check_worst_case_endpoint(ns=(10, 20))
        self.assertEqual(
            [result.name for result in results],
            [
                "worst_case_regret_chain",
                "worst_case_matches_large_tau",
                "worst_case_partition_matches_large_tau",
            ],
        )
        self.assertAllPassed(results)

    def test_regime_bounds_hold_at_every_n(self) -> None:
        results = check_regimes(ns=(10, 20, 30))
        self.assertEqual(
            [result.name for result in results],
            ["regime_gaps_nonnegative", "regime_sup_gap_bound"],
        )
        self.assertAllPassed(results)
        self.assertIn("largest rise in n", results[1].detail)

    def test_corrupted_assertions_fail_simplex_check(self) -> None:
        good = self.codebooks[0]
        bad = Codebook(
            partition=good.partition,
            codepoints=good.codepoints,
            log_q=tuple(value + 0.1 for value in good.log_q),
        )
        result = check_codebook_simplex(self.model, [bad])
        self.assertFalse(result.passed)
        self.assertEqual(result.name, "codebook_simplex")

    def test_broken_aggregation_is_detected(self) -> None:
        with mock.patch(
            "entropic_smml.criteria.logsumexp", side_effect=lambda values: np.max(values)
        ):
            results = check_interpolation_bounds(self.model, self.rpred, self.codebooks)
        failed = {result.name for result in results if not result.passed}
        self.assertIn("ordinary_le_entropic_le_worst", failed)


class SuiteTestCase(unittest.TestCase):
    def test_rejects_sizes_outside_range(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            run_invariant_suite(sizes=[1, 3])
        with self.assertRaises(ValueError):
            run_invariant_suite(sizes=[51])

    def test_small_suite_passes(self) -> None:
        report = run_invariant_suite(seed=7, sizes=[2, 3], codebooks_per_size=3)
        self.assertEqual(report.sizes, [2, 3])
        names = [result.name for result in report.results]
        self.assertEqual(len(names), len(set(names)))
        self.assertIn("dp_equals_exhaustive", names)
        self.assertIn("nml_regret_constant", names)
        self.assertTrue(report.passed, [result.name for result in report.failures])


if __name__ == "__main__":
    unittest.main()
