from __future__ import annotations

import math
import unittest

from entropic_smml.engine import analyze_fit, figure_comparison, load_model, sweep_tau
from entropic_smml.errors import InvalidArgumentError
from entropic_smml.models import CriterionSpec


class EngineTestCase(unittest.TestCase):
    def test_ordinary_fit_report(self) -> None:
        report = analyze_fit(n_trials=50, spec=CriterionSpec.ordinary())

        self.assertEqual(report.family, "binomial")
        self.assertEqual(report.criterion, "ordinary")
        self.assertIsNone(report.tau)
        self.assertEqual(report.cells[0].lo, 0)
        self.assertEqual(report.cells[-1].hi, 51)
        for left, right in zip(report.cells, report.cells[1:]):
            self.assertEqual(left.hi, right.lo)
        self.assertAlmostEqual(sum(cell.q for cell in report.cells), 1.0, places=12)
        self.assertEqual(len(report.points), 51)
        for point in report.points:
            self.assertGreaterEqual(point.regret, -1e-12)
            self.assertGreaterEqual(point.lam, point.lam_ml - 1e-12)
        self.assertGreaterEqual(report.sup_regret, report.log_shtarkov - 1e-12)
        self.assertAlmostEqual(
            report.objective_bits, report.objective_nats / math.log(2), places=12
        )

    def test_large_n_structure_for_entropic_and_worst_case(self) -> None:
        for spec in (CriterionSpec.entropic(1.0), CriterionSpec.worst_case()):
            with self.subTest(criterion=spec.label):
                report = analyze_fit(n_trials=50, spec=spec)
                self.assertEqual(report.cells[0].lo, 0)
                self.assertEqual(report.cells[-1].hi, 51)
                for left, right in zip(report.cells, report.cells[1:]):
                    self.assertEqual(left.hi, right.lo)
                for point in report.points:
                    self.assertGreaterEqual(point.regret, -1e-12)
                    self.assertGreaterEqual(point.lam, point.lam_ml - 1e-12)
                cells = {(cell.lo, cell.hi) for cell in report.cells}
                mirrored = {(51 - hi, 51 - lo) for lo, hi in cells}
                # an even cell count cannot be symmetric on 51 points
                if cells != mirrored:
                    self.assertTrue(
                        any("attains the same objective" in note for note in report.tie_notes),
                        msg=f"asymmetric partition without a recorded tie: {sorted(cells)}",
                    )

    def test_mirrored_prior_gives_same_objective(self) -> None:
        for spec in (CriterionSpec.ordinary(), CriterionSpec.entropic(1.0)):
            left = analyze_fit(n_trials=7, spec=spec, prior_a=2.0, prior_b=3.0)
            right = analyze_fit(n_trials=7, spec=spec, prior_a=3.0, prior_b=2.0)
            self.assertAlmostEqual(left.objective_nats, right.objective_nats, places=9)

    def test_regret_fit_records_reference(self) -> None:
        report = analyze_fit(
            n_trials=5, spec=CriterionSpec.regret_entropic(2.0), mu="uniform"
        )
        self.assertEqual(report.criterion, "regret_entropic")
        self.assertEqual(report.tau, 2.0)
        with self.assertRaises(InvalidArgumentError):
            analyze_fit(n_trials=5, spec=CriterionSpec.regret_entropic(2.0), mu="other")

    def test_unknown_family_is_rejected(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            load_model("poisson", 5, 1.0, 1.0)


class SweepTestCase(unittest.TestCase):
    def test_fixed_codebook_sweep_interpolates(self) -> None:
        model, rpred = load_model("binomial", 2, 1.0, 1.0)
        records = sweep_tau(model, rpred, [1e-3, 1.0, 1e3], k=1, fixed_codebook=True)

        ordinary = 5 / 3 * math.log(2)
        self.assertAlmostEqual(records[0].objective, ordinary, places=3)
        self.assertAlmostEqual(records[1].objective, math.log(10 / 3), places=12)
        self.assertAlmostEqual(records[2].objective, math.log(4), delta=math.log(3) / 1e3)
        previous = -math.inf
        for record in records:
            self.assertEqual(record.k, 1)
            self.assertAlmostEqual(record.ordinary, ordinary, places=12)
            self.assertAlmostEqual(record.worst_case, math.log(4), places=12)
            self.assertAlmostEqual(record.renyi_bound, math.log(3), places=12)
            self.assertLessEqual(record.ordinary, record.objective + 1e-12)
            self.assertLessEqual(record.objective, record.worst_case + 1e-12)
            self.assertGreaterEqual(record.objective, previous)
            previous = record.objective

    def test_refit_sweep_beats_fixed_codebook(self) -> None:
        model, rpred = load_model("binomial", 6, 2.0, 3.0)
        taus = [0.5, 2.0]
        refit = sweep_tau(model, rpred, taus)
        fixed = sweep_tau(model, rpred, taus, fixed_codebook=True)
        for best, held in zip(refit, fixed):
            self.assertLessEqual(best.objective, held.objective + 1e-10)
            self.assertGreaterEqual(best.objective, best.renyi_bound - 1e-12)

    def test_rejects_nonpositive_tau(self) -> None:
        model, rpred = load_model("binomial", 3, 1.0, 1.0)
        with self.assertRaises(InvalidArgumentError):
            sweep_tau(model, rpred, [1.0, 0.0])


class FigureTestCase(unittest.TestCase):
    def test_three_criteria_are_ordered(self) -> None:
        model, rpred = load_model("binomial", 10, 1.0, 1.0)
        comparison = figure_comparison(model, rpred, tau=1.0)

        self.assertEqual(list(comparison.fits), ["ordinary", "entropic", "worstcase"])
        ordinary = comparison.fits["ordinary"].objective
        entropic = comparison.fits["entropic"].objective
        worst = comparison.fits["worstcase"].objective
        self.assertLessEqual(ordinary, entropic + 1e-12)
        self.assertLessEqual(entropic, worst + 1e-9)


if __name__ == "__main__":
    unittest.main()
