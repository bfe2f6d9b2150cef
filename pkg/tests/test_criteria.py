from __future__ import annotations

import math
import unittest

import numpy as np

from entropic_smml.codebook import codelengths
from entropic_smml.criteria import (
    cell_A,
    codelength_variance,
    entropic_objective,
    escort_distribution,
    escort_log_distribution,
    exponential_length,
    grouped_entropic_objective,
    ordinary_objective,
    profiled_objective,
    renyi_entropy,
    smml_redundancy,
    worst_case_codelength,
)
from entropic_smml.errors import InfeasibleCodepointError, InvalidArgumentError
from entropic_smml.family import beta_binomial_predictive, make_binomial
from entropic_smml.models import Codebook, Partition, PriorPredictive


class CriteriaTestCase(unittest.TestCase):
    def setUp(self) -> None:
        self.model = make_binomial(2)
        self.rpred = beta_binomial_predictive(self.model, 1.0, 1.0)
        self.single = Codebook(partition=Partition(((0, 3),)), codepoints=(0.5,), log_q=(0.0,))
        self.split = Codebook(
            partition=Partition(((0, 1), (1, 3))),
            codepoints=(0.0, 0.75),
            log_q=(math.log(1 / 3), math.log(2 / 3)),
        )

    def test_single_cell_closed_forms(self) -> None:
        ln2 = math.log(2)
        self.assertAlmostEqual(
            ordinary_objective(self.single, self.model, self.rpred), 5 / 3 * ln2, places=14
        )
        self.assertAlmostEqual(
            entropic_objective(self.single, self.model, self.rpred, 1.0),
            math.log(10 / 3),
            places=14,
        )
        self.assertAlmostEqual(
            codelength_variance(self.single, self.model, self.rpred),
            2 / 9 * ln2**2,
            places=14,
        )
        worst, argmax = worst_case_codelength(self.single, self.model)
        self.assertAlmostEqual(worst, math.log(4), places=14)
        self.assertEqual(argmax, 0)

    def test_split_codebook_ordinary(self) -> None:
        self.assertAlmostEqual(
            ordinary_objective(self.split, self.model, self.rpred),
            math.log(32) / 3,
            places=14,
        )

    def test_expectations_sum_left_to_right(self) -> None:
        model = make_binomial(20)
        rpred = beta_binomial_predictive(model, 2.0, 3.0)
        cb = Codebook(
            partition=Partition(((0, 8), (8, 21))),
            codepoints=(0.2, 0.6),
            log_q=(math.log(0.4), math.log(0.6)),
        )
        lengths = codelengths(cb, model)
        total = 0.0
        for p, length in zip(rpred.probabilities, lengths):
            total += float(p * length)
        self.assertEqual(ordinary_objective(cb, model, rpred), total)

    def test_entropic_between_mean_and_max(self) -> None:
        mean = ordinary_objective(self.split, self.model, self.rpred)
        sup, _ = worst_case_codelength(self.split, self.model)
        previous = mean
        for tau in (1e-3, 1e-1, 1.0, 10.0, 1e3):
            value = entropic_objective(self.split, self.model, self.rpred, tau)
            self.assertGreaterEqual(value, previous - 1e-12)
            self.assertLessEqual(value, sup + 1e-12)
            self.assertLessEqual(sup - value, math.log(3) / tau + 1e-12)
            previous = value

    def test_entropic_requires_positive_tau(self) -> None:
        for tau in (0.0, -1.0, math.inf):
            with self.assertRaises(InvalidArgumentError):
                entropic_objective(self.single, self.model, self.rpred, tau)

    def test_cell_A_and_regrouping(self) -> None:
        self.assertAlmostEqual(
            cell_A(self.model, self.rpred, (1, 3), 0.75, 1.0), math.log(40 / 27), places=14
        )
        self.assertEqual(cell_A(self.model, self.rpred, (0, 3), 0.0, 1.0), math.inf)
        for tau in (0.5, 1.0, 4.0):
            self.assertAlmostEqual(
                grouped_entropic_objective(self.split, self.model, self.rpred, tau),
                entropic_objective(self.split, self.model, self.rpred, tau),
                places=12,
            )

    def test_profiled_objective_eliminates_q(self) -> None:
        value, log_q = profiled_objective(
            self.model, self.rpred, self.split.partition, (0.0, 0.75), 1.0
        )
        a0, a1 = math.sqrt(1 / 3), math.sqrt(40 / 27)
        self.assertAlmostEqual(math.exp(log_q[0]), a0 / (a0 + a1), places=12)
        self.assertAlmostEqual(value, 2 * math.log(a0 + a1), places=12)
        profiled = Codebook(
            partition=self.split.partition, codepoints=(0.0, 0.75), log_q=log_q
        )
        self.assertAlmostEqual(
            entropic_objective(profiled, self.model, self.rpred, 1.0), value, places=12
        )
        # the profiled q beats any other assertion distribution
        self.assertLess(value, entropic_objective(self.split, self.model, self.rpred, 1.0))

    def test_profiled_objective_reports_infeasible_cell(self) -> None:
        with self.assertRaises(InfeasibleCodepointError) as ctx:
            profiled_objective(self.model, self.rpred, Partition(((0, 3),)), (0.0,), 1.0)
        self.assertEqual(ctx.exception.cell, (0, 3))


class RenyiTestCase(unittest.TestCase):
    def test_uniform_renyi_is_log_support(self) -> None:
        rpred = beta_binomial_predictive(make_binomial(5), 1.0, 1.0)
        for alpha in (0.1, 0.5, 0.9):
            self.assertAlmostEqual(renyi_entropy(rpred, alpha), math.log(6), places=13)
        with self.assertRaises(InvalidArgumentError):
            renyi_entropy(rpred, 1.0)

    def test_renyi_approaches_shannon_as_alpha_tends_to_one(self) -> None:
        rpred = PriorPredictive.from_probabilities([0.5, 0.25, 0.25])
        shannon = -sum(p * math.log(p) for p in (0.5, 0.25, 0.25))
        self.assertAlmostEqual(renyi_entropy(rpred, 1.0 - 1e-6), shannon, delta=1e-4)
        self.assertGreater(renyi_entropy(rpred, 0.5), shannon)

    def test_escort_of_skewed_predictive(self) -> None:
        rpred = PriorPredictive.from_probabilities([0.5, 0.25, 0.25])
        expected = np.array([math.sqrt(0.5), 0.5, 0.5])
        np.testing.assert_allclose(
            escort_distribution(rpred, 1.0), expected / expected.sum(), rtol=1e-13
        )

    def test_escort_attains_renyi_floor(self) -> None:
        rpred = beta_binomial_predictive(make_binomial(6), 2.0, 3.0)
        for tau in (0.3, 1.0, 5.0):
            log_escort = escort_log_distribution(rpred, tau)
            self.assertAlmostEqual(
                exponential_length(rpred, log_escort, tau),
                renyi_entropy(rpred, 1.0 / (1.0 + tau)),
                places=12,
            )
            self.assertAlmostEqual(float(escort_distribution(rpred, tau).sum()), 1.0, places=14)

    def test_redundancy_is_nonnegative(self) -> None:
        model = make_binomial(2)
        rpred = beta_binomial_predictive(model, 1.0, 1.0)
        single = Codebook(partition=Partition(((0, 3),)), codepoints=(0.5,), log_q=(0.0,))
        for tau in (0.1, 1.0, 10.0):
            self.assertGreaterEqual(smml_redundancy(single, model, rpred, tau), -1e-12)
        np.testing.assert_allclose(
            smml_redundancy(single, model, rpred, 1.0), math.log(10 / 3) - math.log(3)
        )


if __name__ == "__main__":
    unittest.main()
