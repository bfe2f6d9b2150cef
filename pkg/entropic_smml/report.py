from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict
from datetime import datetime, timezone
from typing import Iterable, Optional

from .codebook import codelengths
from .models import (
    CellRecord,
    CodebookReport,
    FigureComparison,
    Model,
    PointRecord,
    RegimeSweep,
    TauSweepRecord,
)
from .nml import nml_distribution, shtarkov_sum

POINTS_HEADER = ("x", "lambda", "lambda_ml", "neg_log_r", "regret")
SWEEP_HEADER = ("tau", "objective", "ordinary", "worst_case", "renyi_bound", "k")
REGIMES_HEADER = ("n", "tau", "I", "mean", "sup", "gap_mean", "gap_sup")
FIGURE_CURVES_HEADER = (
    "x",
    "lambda_ordinary",
    "lambda_entropic",
    "lambda_worstcase",
    "lambda_ml",
    "neg_log_r",
)
FIGURE_CELLS_HEADER = ("criterion", "lo", "hi", "q", "theta")

LN2 = math.log(2.0)


def _generated_at() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M:%SZ")


def _number(value: float) -> str:
    return f"{value:.12g}"


def _length(value: float, bits: bool) -> str:
    return _number(value / LN2 if bits else value)


def _csv_text(header: Iterable[str], rows: Iterable[Iterable[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def build_json_report(report: CodebookReport) -> dict[str, object]:
    return {
        "meta": {"generated_at": _generated_at(), "units": "nats"},
        "model": {
            "family": report.family,
            "n_trials": report.n_trials,
            "prior_a": report.prior_a,
            "prior_b": report.prior_b,
        },
        "criterion": {"kind": report.criterion, "tau": report.tau},
        "k": report.k,
        "cells": [asdict(cell) for cell in report.cells],
        "objective": {"nats": report.objective_nats, "bits": report.objective_bits},
        "converged": report.converged,
        "nml": {"sup_regret": report.sup_regret, "log_shtarkov": report.log_shtarkov},
        "tie_notes": list(report.tie_notes),
        "points": [asdict(point) for point in report.points],
    }


def parse_codebook_report(payload: dict[str, object]) -> CodebookReport:
    """Inverse of :func:`build_json_report`; ``meta`` is ignored."""
    model = payload["model"]
    criterion = payload["criterion"]
    objective = payload["objective"]
    nml = payload["nml"]
    return CodebookReport(
        family=str(model["family"]),
        n_trials=int(model["n_trials"]),
        prior_a=None if model["prior_a"] is None else float(model["prior_a"]),
        prior_b=None if model["prior_b"] is None else float(model["prior_b"]),
        criterion=str(criterion["kind"]),
        tau=None if criterion["tau"] is None else float(criterion["tau"]),
        k=int(payload["k"]),
        cells=[CellRecord(**cell) for cell in payload["cells"]],
        objective_nats=float(objective["nats"]),
        objective_bits=float(objective["bits"]),
        converged=bool(payload["converged"]),
        sup_regret=float(nml["sup_regret"]),
        log_shtarkov=float(nml["log_shtarkov"]),
        tie_notes=[str(note) for note in payload["tie_notes"]],
        points=[PointRecord(**point) for point in payload["points"]],
    )


def points_csv(report: CodebookReport, bits: bool = False) -> str:
    return _csv_text(
        POINTS_HEADER,
        (
            (
                point.x,
                _length(point.lam, bits),
                _length(point.lam_ml, bits),
                _length(point.neg_log_r, bits),
                _length(point.regret, bits),
            )
            for point in report.points
        ),
    )


def sweep_csv(records: Iterable[TauSweepRecord], bits: bool = False) -> str:
    return _csv_text(
        SWEEP_HEADER,
        (
            (
                _number(record.tau),
                _length(record.objective, bits),
                _length(record.ordinary, bits),
                _length(record.worst_case, bits),
                _length(record.renyi_bound, bits),
                record.k,
            )
            for record in records
        ),
    )


def regimes_csv(sweep: RegimeSweep, bits: bool = False) -> str:
    return _csv_text(
        REGIMES_HEADER,
        (
            (
                record.n,
                _number(record.tau),
                _length(record.entropic, bits),
                _length(record.mean, bits),
                _length(record.sup, bits),
                _length(record.gap_to_mean, bits),
                _length(record.gap_to_sup, bits),
            )
            for record in sweep.records
        ),
    )


def figure_curves_csv(comparison: FigureComparison, bits: bool = False) -> str:
    model, rpred = comparison.model, comparison.rpred
    curves = {
        name: codelengths(fit.codebook, model) for name, fit in comparison.fits.items()
    }
    rows = []
    for x in range(model.support_size):
        rows.append(
            (
                x,
                _length(float(curves["ordinary"][x]), bits),
                _length(float(curves["entropic"][x]), bits),
                _length(float(curves["worstcase"][x]), bits),
                _length(-float(model.ml_log_likelihood[x]), bits),
                _length(-float(rpred.log_r[x]), bits),
            )
        )
    return _csv_text(FIGURE_CURVES_HEADER, rows)


def figure_cells_csv(comparison: FigureComparison) -> str:
    rows = []
    for name, fit in comparison.fits.items():
        cb = fit.codebook
        for (lo, hi), q, theta in zip(cb.partition.cells, cb.q, cb.codepoints):
            rows.append((name, lo, hi, _number(float(q)), _number(theta)))
    return _csv_text(FIGURE_CELLS_HEADER, rows)


def build_nml_report(model: Model) -> dict[str, object]:
    profile = nml_distribution(model)
    return {
        "meta": {"generated_at": _generated_at(), "units": "nats"},
        "model": {"family": model.family, "n_trials": model.n_trials},
        "log_S_n": shtarkov_sum(model),
        "points": [
            {
                "x": x,
                "Q": math.exp(float(profile.log_Q[x])),
                "regret": float(profile.regret[x]),
            }
            for x in range(model.support_size)
        ],
        "spread": profile.spread,
    }


def build_markdown_report(report: CodebookReport, title: Optional[str] = None) -> str:
    criterion = report.criterion
    if report.tau is not None:
        criterion = f"{criterion} (tau={report.tau:g})"
    if report.prior_a is None:
        prior = "custom prior predictive"
    else:
        prior = f"Beta({report.prior_a:g}, {report.prior_b:g})"

    lines: list[str] = []
    lines.append(f"# {title or 'Strict MML Codebook'}")
    lines.append("")
    lines.append("## Setup")
    lines.append(f"- Model: `{report.family}` with n = `{report.n_trials}`")
    lines.append(f"- Prior: `{prior}`")
    lines.append(f"- Criterion: `{criterion}`")
    lines.append(f"- Generated at: `{_generated_at()}`")
    lines.append("")

    lines.append("## Summary")
    lines.append(
        f"- Objective: **{report.objective_nats:.6f} nats** ({report.objective_bits:.6f} bits)"
    )
    lines.append(f"- Cells: **{report.k}**")
    lines.append(f"- Converged: **{'yes' if report.converged else 'no'}**")
    lines.append(
        f"- Worst-case regret: **{report.sup_regret:.6f}** nats "
        f"(NML minimax regret {report.log_shtarkov:.6f})"
    )
    lines.append("")

    lines.append("## Cells")
    lines.append("| Cell | x range | q | theta |")
    lines.append("| ---: | --- | ---: | ---: |")
    for index, cell in enumerate(report.cells, start=1):
        lines.append(f"| {index} | {cell.lo}..{cell.hi - 1} | {cell.q:.6f} | {cell.theta:.6f} |")
    lines.append("")

    if report.tie_notes:
        lines.append("## Ties")
        for note in report.tie_notes:
            lines.append(f"- {note}")
        lines.append("")

    lines.append("## Notes")
    lines.append("- Lengths are natural-log codelengths unless marked as bits.")
    lines.append("- Cells are intervals of the sufficient statistic.")
    return "\n".join(lines) + "\n"
