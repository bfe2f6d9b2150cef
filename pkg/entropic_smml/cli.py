from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Literal

from .diagnostics import Schedule, run_regime_sweep
from .engine import MU_CHOICES, analyze_fit, figure_comparison, load_model, sweep_tau
from .errors import InvalidArgumentError, SMMLError
from .invariants import DEFAULT_SIZES, run_invariant_suite
from .models import CriterionSpec, SolverConfig
from .report import (
    build_json_report,
    build_markdown_report,
    build_nml_report,
    figure_cells_csv,
    figure_curves_csv,
    points_csv,
    regimes_csv,
    sweep_csv,
)

CRITERIA = ("ordinary", "entropic", "worstcase", "regret")


def _k_value(text: str) -> int | Literal["auto"]:
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an integer, got {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"k must be >= 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from exc
    if not value > 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"expected a finite positive number, got {text!r}")
    return value


def _tau_list(text: str) -> list[float]:
    return [_positive_float(part.strip()) for part in text.split(",") if part.strip()]


def _int_range(text: str) -> list[int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (int(part) for part in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers in {text!r}") from exc
    if step < 1 or lo < 2 or hi < lo:
        raise argparse.ArgumentTypeError(f"need 2 <= lo <= hi and step >= 1, got {text!r}")
    return list(range(lo, hi + 1, step))


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected a comma list of integers, got {text!r}"
        ) from exc


def _add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model",
        default="binomial",
        choices=("binomial",),
        help="Model family (default: binomial).",
    )
    parser.add_argument("--n", type=int, required=True, help="Number of trials.")
    parser.add_argument(
        "--prior-a",
        type=_positive_float,
        default=1.0,
        help="Beta prior shape a (default: 1).",
    )
    parser.add_argument(
        "--prior-b",
        type=_positive_float,
        default=1.0,
        help="Beta prior shape b (default: 1).",
    )


def _add_solver_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--k",
        type=_k_value,
        default="auto",
        help="Number of cells, or 'auto' to choose it (default: auto).",
    )
    parser.add_argument(
        "--kmax",
        type=int,
        default=None,
        help="Largest cell count considered by --k auto (default: support size).",
    )
    parser.add_argument(
        "--bits",
        action="store_true",
        help="Write CSV codelengths in bits instead of nats.",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description=(
            "Strict minimum message length codebooks under ordinary, "
            "entropic and worst-case criteria."
        )
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress to stderr (-v info, -vv debug).",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="Fit one codebook and write its JSON report.")
    _add_model_arguments(fit)
    _add_solver_arguments(fit)
    fit.add_argument(
        "--criterion",
        choices=CRITERIA,
        default="ordinary",
        help="Coding criterion (default: ordinary).",
    )
    fit.add_argument(
        "--tau",
        type=_positive_float,
        default=None,
        help="Risk parameter; required for entropic and regret.",
    )
    fit.add_argument(
        "--mu",
        choices=MU_CHOICES,
        default="prior",
        help="Reference distribution for --criterion regret (default: prior).",
    )
    fit.add_argument(
        "--out",
        default="reports/codebook.json",
        help="JSON output path (default: reports/codebook.json).",
    )
    fit.add_argument("--table", default=None, help="Optional per-point CSV output path.")
    fit.add_argument("--markdown", default=None, help="Optional markdown summary path.")

    sweep = commands.add_parser("sweep-tau", help="Entropic objective across several tau.")
    _add_model_arguments(sweep)
    _add_solver_arguments(sweep)
    sweep.add_argument(
        "--taus",
        type=_tau_list,
        required=True,
        help="Comma list of positive tau values.",
    )
    sweep.add_argument(
        "--fixed-codebook",
        action="store_true",
        help="Hold the ordinary codebook fixed instead of refitting per tau.",
    )
    sweep.add_argument(
        "--out",
        default="reports/tau_sweep.csv",
        help="CSV output path (default: reports/tau_sweep.csv).",
    )

    nml = commands.add_parser("nml", help="Shtarkov sum and NML coding distribution.")
    nml.add_argument(
        "--model",
        default="binomial",
        choices=("binomial",),
        help="Model family (default: binomial).",
    )
    nml.add_argument("--n", type=int, required=True, help="Number of trials.")
    nml.add_argument(
        "--out",
        default="reports/nml.json",
        help="JSON output path (default: reports/nml.json).",
    )

    regimes = commands.add_parser("regimes", help="Joint sample-size / tau regime sweep.")
    regimes.add_argument(
        "--schedule",
        required=True,
        help="tau_n rule as name:param, e.g. c_over_logn:0.5.",
    )
    regimes.add_argument("--ns", type=_int_range, required=True, help="Sample sizes lo:hi:step.")
    regimes.add_argument(
        "--prior-a",
        type=_positive_float,
        default=1.0,
        help="Beta prior shape a (default: 1).",
    )
    regimes.add_argument(
        "--prior-b",
        type=_positive_float,
        default=1.0,
        help="Beta prior shape b (default: 1).",
    )
    regimes.add_argument("--bits", action="store_true", help="Write lengths in bits.")
    regimes.add_argument(
        "--out",
        default="reports/regimes.csv",
        help="CSV output path (default: reports/regimes.csv).",
    )

    verify = commands.add_parser("verify", help="Run the invariant suite.")
    verify.add_argument("--seed", type=int, default=42, help="Random seed (default: 42).")
    verify.add_argument(
        "--sizes",
        type=_int_list,
        default=list(DEFAULT_SIZES),
        help="Comma list of n in [2, 50] (default: 2..20).",
    )

    figure = commands.add_parser(
        "figure", help="Ordinary, entropic and worst-case codebooks side by side."
    )
    _add_model_arguments(figure)
    figure.add_argument(
        "--tau",
        type=_positive_float,
        default=1.0,
        help="Entropic risk parameter (default: 1).",
    )
    figure.add_argument("--bits", action="store_true", help="Write lengths in bits.")
    figure.add_argument(
        "--out",
        default="reports/figure_curves.csv",
        help="Per-point curves CSV (default: reports/figure_curves.csv).",
    )
    figure.add_argument(
        "--cells-out",
        default="reports/figure_cells.csv",
        help="Cells CSV (default: reports/figure_cells.csv).",
    )
    return parser


def _write(path: str | Path, text: str) -> Path:
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text(text, encoding="utf-8")
    return output_path


def _criterion(args: argparse.Namespace, parser: argparse.ArgumentParser) -> CriterionSpec:
    if args.criterion in ("entropic", "regret") and args.tau is None:
        parser.error(f"--criterion {args.criterion} requires --tau")
    if args.criterion in ("ordinary", "worstcase") and args.tau is not None:
        parser.error(f"--tau does not apply to --criterion {args.criterion}")
    if args.criterion == "ordinary":
        return CriterionSpec.ordinary()
    if args.criterion == "worstcase":
        return CriterionSpec.worst_case()
    if args.criterion == "entropic":
        return CriterionSpec.entropic(args.tau)
    return CriterionSpec.regret_entropic(args.tau)


def _cmd_fit(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    spec = _criterion(args, parser)
    report = analyze_fit(
        n_trials=args.n,
        spec=spec,
        prior_a=args.prior_a,
        prior_b=args.prior_b,
        k=args.k,
        cfg=SolverConfig(k_max=args.kmax),
        mu=args.mu,
        family=args.model,
    )
    out = _write(args.out, json.dumps(build_json_report(report), indent=2, sort_keys=False))
    print(f"Criterion: {spec.label}")
    print(f"Cells: {report.k}")
    print(f"Objective (nats): {report.objective_nats:.12g}")
    print(f"Converged: {report.converged}")
    for note in report.tie_notes:
        print(f"Tie: {note}")
    print(f"JSON report written: {out.resolve()}")
    if args.table:
        table = _write(args.table, points_csv(report, bits=args.bits))
        print(f"Point table written: {table.resolve()}")
    if args.markdown:
        markdown = _write(args.markdown, build_markdown_report(report))
        print(f"Report written: {markdown.resolve()}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    model, rpred = load_model(args.model, args.n, args.prior_a, args.prior_b)
    records = sweep_tau(
        model,
        rpred,
        args.taus,
        k=args.k,
        cfg=SolverConfig(k_max=args.kmax),
        fixed_codebook=args.fixed_codebook,
    )
    out = _write(args.out, sweep_csv(records, bits=args.bits))
    print(f"Tau values: {len(records)}")
    print(f"Sweep written: {out.resolve()}")
    return 0


def _cmd_nml(args: argparse.Namespace) -> int:
    model, _ = load_model(args.model, args.n, 1.0, 1.0)
    payload = build_nml_report(model)
    out = _write(args.out, json.dumps(payload, indent=2, sort_keys=False))
    print(f"log S_n (nats): {payload['log_S_n']:.12g}")
    print(f"Regret spread: {payload['spread']:.3g}")
    print(f"JSON report written: {out.resolve()}")
    return 0


def _cmd_regimes(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        schedule = Schedule.parse(args.schedule)
    except InvalidArgumentError as exc:
        parser.error(str(exc))
    sweep = run_regime_sweep(schedule, args.ns, prior=(args.prior_a, args.prior_b))
    out = _write(args.out, regimes_csv(sweep, bits=args.bits))
    print(f"Schedule: {schedule.name}:{schedule.parameter:g}")
    print(f"Sample sizes: {len(sweep.records)}")
    print(f"Regimes written: {out.resolve()}")
    return 0


def _cmd_verify(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not args.sizes or min(args.sizes) < 2 or max(args.sizes) > 50:
        parser.error("--sizes must be integers in [2, 50]")
    report = run_invariant_suite(seed=args.seed, sizes=args.sizes)
    for result in report.results:
        status = "PASS" if result.passed else "FAIL"
        line = (
            f"{status} {result.name} "
            f"magnitude={result.magnitude:.3g} tol={result.tolerance:.3g}"
        )
        if result.detail:
            line += f" ({result.detail})"
        print(line)
    print(f"Invariants failed: {len(report.failures)} of {len(report.results)}")
    return 0 if report.passed else 1


def _cmd_figure(args: argparse.Namespace) -> int:
    model, rpred = load_model(args.model, args.n, args.prior_a, args.prior_b)
    comparison = figure_comparison(model, rpred, tau=args.tau)
    curves = _write(args.out, figure_curves_csv(comparison, bits=args.bits))
    cells = _write(args.cells_out, figure_cells_csv(comparison))
    for name, fit in comparison.fits.items():
        print(f"{name}: k={fit.k} objective={fit.objective:.12g}")
    print(f"Curves written: {curves.resolve()}")
    print(f"Cells written: {cells.resolve()}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(
            level=logging.DEBUG if args.verbose > 1 else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )

    try:
        if args.command == "fit":
            return _cmd_fit(args, parser)
        if args.command == "sweep-tau":
            return _cmd_sweep(args)
        if args.command == "nml":
            return _cmd_nml(args)
        if args.command == "regimes":
            return _cmd_regimes(args, parser)
        if args.command == "verify":
            return _cmd_verify(args, parser)
        return _cmd_figure(args)
    except SMMLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
