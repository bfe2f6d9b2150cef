from __future__ import annotations

import math
import unittest

from entropic_smml.diagnostics import Schedule, run_regime_sweep, run_regime_sweeps
from entropic_smml.errors import InvalidArgumentError


class ScheduleTestCase(unittest.TestCase):
    def test_parse_and_aliases(self) -> None:
        schedule = Schedule.parse("c_over_logn:0.5")
        self.assertEqual(schedule.name, "c_over_log_n")
        self.assertEqual(schedule.parameter, 0.5)
        self.assertAlmostEqual(schedule.tau(10), 0.5 / math.log(10), places=14)
        self.assertEqual(Schedule.parse("c_logn:2").name, "c_log_n")
        self.assertAlmostEqual(Schedule.parse("c_log2n:1").tau(20), math.log(20) ** 2, places=12)
        self.assertEqual(Schedule.parse("constant:3").tau(7), 3.0)

    def test_rejects_bad_input(self) -> None:
        for text in ("nope:1", "constant", "constant:x", "constant:0", "c_logn:-1"):
            with self.assertRaises(InvalidArgumentError):
                Schedule.parse(text)
        with self.assertRaises(InvalidArgumentError):
            Schedule("c_log_n", 1.0).tau(1)


class RegimeSweepTestCase(unittest.TestCase):
    def test_records_follow_schedule_and_bounds(self) -> None:
        sweep = run_regime_sweep(Schedule("constant", 1.0), [4, 8, 12])
        self.assertEqual(sweep.schedule, "constant")
        self.assertEqual([record.n for record in sweep.records], [4, 8, 12])
        for record in sweep.records:
            self.assertEqual(record.tau, 1.0)
            self.assertGreaterEqual(record.gap_to_mean, -1e-12)
            self.assertGreaterEqual(record.gap_to_sup, -1e-12)
            self.assertLessEqual(record.gap_to_sup, math.log(record.n + 1) / record.tau + 1e-12)
            self.assertAlmostEqual(record.neg_log_min_r, math.log(record.n + 1), places=12)
            self.assertAlmostEqual(record.entropic - record.mean, record.gap_to_mean, places=14)
            self.assertGreaterEqual(record.variance, 0.0)

    def test_growing_tau_keeps_softmax_bound(self) -> None:
        sweep = run_regime_sweep(Schedule("c_log2_n", 1.0), [10, 20, 40], prior=(2.0, 3.0))
        for record in sweep.records:
            self.assertAlmostEqual(record.tau, math.log(record.n) ** 2, places=12)
            self.assertLessEqual(
                record.gap_to_sup, record.neg_log_min_r / record.tau + 1e-12
            )

    def test_schedules_share_one_fit_per_n(self) -> None:
        schedules = [Schedule("c_log2_n", 1.0), Schedule("c_over_log_n", 0.5)]
        steep, shallow = run_regime_sweeps(schedules, [10, 20])
        self.assertEqual((steep.schedule, shallow.schedule), ("c_log2_n", "c_over_log_n"))
        for high, low in zip(steep.records, shallow.records):
            self.assertEqual(high.n, low.n)
            self.assertEqual(high.mean, low.mean)
            self.assertEqual(high.sup, low.sup)
            self.assertGreater(high.tau, low.tau)
            self.assertGreaterEqual(high.entropic, low.entropic - 1e-12)
        single = run_regime_sweep(schedules[1], [10, 20])
        self.assertEqual(
            [record.entropic for record in single.records],
            [record.entropic for record in shallow.records],
        )

    def test_ns_must_increase(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            run_regime_sweep(Schedule("constant", 1.0), [5, 5])
        with self.assertRaises(InvalidArgumentError):
            run_regime_sweep(Schedule("constant", 1.0), [])


if __name__ == "__main__":
    unittest.main()
