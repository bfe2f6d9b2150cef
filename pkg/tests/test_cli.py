from __future__ import annotations

import contextlib
import io
import json
import math
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from entropic_smml.cli import main
from entropic_smml.models import InvariantReport, InvariantResult
from entropic_smml.report import REGIMES_HEADER, SWEEP_HEADER


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    stdout, stderr = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
        code = main(argv)
    return code, stdout.getvalue(), stderr.getvalue()


class CliTestCase(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def assertUsageError(self, argv: list[str]) -> None:
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(argv)
        self.assertEqual(ctx.exception.code, 2)

    def test_fit_writes_reports(self) -> None:
        out = self.tmp / "fit" / "codebook.json"
        table = self.tmp / "points.csv"
        markdown = self.tmp / "codebook.md"
        code, stdout, _ = run_cli(
            [
                "fit", "--n", "2", "--k", "1",
                "--out", str(out), "--table", str(table), "--markdown", str(markdown),
            ]
        )
        self.assertEqual(code, 0)
        payload = json.loads(out.read_text(encoding="utf-8"))
        self.assertAlmostEqual(payload["objective"]["nats"], 5 / 3 * math.log(2), places=12)
        self.assertEqual(payload["k"], 1)
        self.assertTrue(table.read_text(encoding="utf-8").startswith("x,lambda,"))
        self.assertIn("## Cells", markdown.read_text(encoding="utf-8"))
        self.assertIn("Criterion: ordinary", stdout)
        self.assertIn("JSON report written:", stdout)

    def test_entropic_fit(self) -> None:
        out = self.tmp / "entropic.json"
        code, stdout, _ = run_cli(
            ["fit", "--n", "2", "--criterion", "entropic", "--tau", "1", "--out", str(out)]
        )
        self.assertEqual(code, 0)
        payload = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual(payload["criterion"], {"kind": "entropic", "tau": 1.0})
        self.assertEqual(payload["k"], 2)
        self.assertIn("Cells: 2", stdout)

    def test_usage_errors_exit_with_two(self) -> None:
        self.assertUsageError(["fit", "--n", "2", "--criterion", "entropic"])
        self.assertUsageError(["fit", "--n", "2", "--criterion", "regret"])
        self.assertUsageError(["fit", "--n", "2", "--criterion", "entropic", "--tau", "0"])
        self.assertUsageError(["fit", "--n", "2", "--k", "zero"])
        self.assertUsageError(["regimes", "--schedule", "nope:1", "--ns", "5:10:5"])
        self.assertUsageError(["regimes", "--schedule", "constant:1", "--ns", "1:5:1"])
        self.assertUsageError(["verify", "--sizes", "1,2"])
        self.assertUsageError(["fit", "--n", "2", "--tau", "1"])
        self.assertUsageError(["fit", "--n", "2", "--criterion", "worstcase", "--tau", "1"])

    def test_domain_errors_return_one(self) -> None:
        code, _, stderr = run_cli(["nml", "--n", "0", "--out", str(self.tmp / "nml.json")])
        self.assertEqual(code, 1)
        self.assertTrue(stderr.startswith("error: "))

    def test_nml_command(self) -> None:
        out = self.tmp / "nml.json"
        code, stdout, _ = run_cli(["nml", "--n", "2", "--out", str(out)])
        self.assertEqual(code, 0)
        payload = json.loads(out.read_text(encoding="utf-8"))
        self.assertAlmostEqual(payload["log_S_n"], math.log(2.5), places=14)
        self.assertIn("log S_n (nats): 0.916290731874", stdout)

    def test_sweep_and_regimes_write_csv(self) -> None:
        sweep = self.tmp / "sweep.csv"
        code, _, _ = run_cli(
            [
                "sweep-tau", "--n", "2", "--k", "1", "--taus", "0.001,1,1000",
                "--fixed-codebook", "--out", str(sweep),
            ]
        )
        self.assertEqual(code, 0)
        lines = sweep.read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], ",".join(SWEEP_HEADER))
        self.assertEqual(len(lines), 4)

        regimes = self.tmp / "regimes.csv"
        code, stdout, _ = run_cli(
            [
                "regimes", "--schedule", "c_over_logn:0.5", "--ns", "5:15:5",
                "--bits", "--out", str(regimes),
            ]
        )
        self.assertEqual(code, 0)
        lines = regimes.read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], ",".join(REGIMES_HEADER))
        self.assertEqual([line.split(",")[0] for line in lines[1:]], ["5", "10", "15"])
        self.assertIn("Schedule: c_over_log_n:0.5", stdout)

    def test_figure_command(self) -> None:
        curves = self.tmp / "curves.csv"
        cells = self.tmp / "cells.csv"
        code, stdout, _ = run_cli(
            ["figure", "--n", "6", "--out", str(curves), "--cells-out", str(cells)]
        )
        self.assertEqual(code, 0)
        self.assertEqual(len(curves.read_text(encoding="utf-8").splitlines()), 8)
        self.assertTrue(cells.read_text(encoding="utf-8").startswith("criterion,lo,hi,q,theta"))
        for name in ("ordinary:", "entropic:", "worstcase:"):
            self.assertIn(name, stdout)

    def test_verify_reports_failures(self) -> None:
        report = InvariantReport(
            seed=1,
            sizes=[2],
            results=[
                InvariantResult("codebook_simplex", True, 0.0, 1e-10),
                InvariantResult("renyi_floor", False, 0.5, 1e-12, "n=2"),
            ],
        )
        with mock.patch("entropic_smml.cli.run_invariant_suite", return_value=report) as suite:
            code, stdout, _ = run_cli(["verify", "--seed", "1", "--sizes", "2"])
        suite.assert_called_once_with(seed=1, sizes=[2])
        self.assertEqual(code, 1)
        self.assertIn("PASS codebook_simplex", stdout)
        self.assertIn("FAIL renyi_floor magnitude=0.5 tol=1e-12 (n=2)", stdout)
        self.assertIn("Invariants failed: 1 of 2", stdout)


if __name__ == "__main__":
    unittest.main()
