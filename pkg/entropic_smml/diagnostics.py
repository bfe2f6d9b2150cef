"""Joint sample-size / risk-parameter regime sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np

from .criteria import (
    codelength_variance,
    entropic_objective,
    ordinary_objective,
    worst_case_codelength,
)
from .errors import InvalidArgumentError
from .family import beta_binomial_predictive, make_binomial
from .models import CriterionSpec, RegimeRecord, RegimeSweep, SolverConfig
from .optimize import fit_codebook

logger = logging.getLogger(__name__)

_SCHEDULES: dict[str, Callable[[float, int], float]] = {
    "constant": lambda c, n: c,
    "c_over_log_n": lambda c, n: c / math.log(n),
    "c_log_n": lambda c, n: c * math.log(n),
    "c_log2_n": lambda c, n: c * math.log(n) ** 2,
}
_ALIASES = {
    "c_over_logn": "c_over_log_n",
    "c_logn": "c_log_n",
    "c_log2n": "c_log2_n",
}


@dataclass(frozen=True)
class Schedule:
    name: str
    parameter: float

    def __post_init__(self) -> None:
        canonical = _ALIASES.get(self.name, self.name)
        if canonical not in _SCHEDULES:
            known = ", ".join(sorted(_SCHEDULES))
            raise InvalidArgumentError(f"unknown schedule {self.name!r}; known: {known}")
        if not (math.isfinite(self.parameter) and self.parameter > 0):
            raise InvalidArgumentError(f"schedule parameter must be > 0, got {self.parameter!r}")
        object.__setattr__(self, "name", canonical)

    @classmethod
    def parse(cls, text: str) -> Schedule:
        name, sep, value = text.partition(":")
        if not sep:
            raise InvalidArgumentError(f"schedule must look like name:param, got {text!r}")
        try:
            parameter = float(value)
        except ValueError as exc:
            raise InvalidArgumentError(f"bad schedule parameter {value!r}") from exc
        return cls(name=name.strip(), parameter=parameter)

    def tau(self, n: int) -> float:
        if n < 2 and self.name != "constant":
            raise InvalidArgumentError(f"schedule {self.name} needs n >= 2")
        return _SCHEDULES[self.name](self.parameter, n)


def run_regime_sweeps(
    schedules: list[Schedule],
    ns: list[int],
    prior: tuple[float, float] = (1.0, 1.0),
    spec_k: int | Literal["auto"] = "auto",
    cfg: Optional[SolverConfig] = None,
) -> list[RegimeSweep]:
    """One sweep per schedule, sharing the ordinary SMML codebook fitted at each n."""
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
        raise InvalidArgumentError("ns must be a non-empty increasing list")
    sweeps = [
        RegimeSweep(ns=list(ns), schedule=schedule.name, parameter=schedule.parameter)
        for schedule in schedules
    ]
    for n in ns:
        model = make_binomial(n)
        rpred = beta_binomial_predictive(model, *prior)
        cb = fit_codebook(model, rpred, CriterionSpec.ordinary(), k=spec_k, cfg=cfg).codebook
        mean = ordinary_objective(cb, model, rpred)
        sup, _ = worst_case_codelength(cb, model, rpred)
        variance = codelength_variance(cb, model, rpred)
        for schedule, sweep in zip(schedules, sweeps):
            tau = schedule.tau(n)
            entropic = entropic_objective(cb, model, rpred, tau)
            record = RegimeRecord(
                n=n,
                tau=tau,
                entropic=entropic,
                mean=mean,
                sup=sup,
                gap_to_mean=entropic - mean,
                gap_to_sup=sup - entropic,
                variance=variance,
                neg_log_min_r=-float(np.min(rpred.log_r)),
            )
            logger.info(
                "%s n=%d tau=%.6g k=%d gap_mean=%.6g gap_sup=%.6g",
                schedule.name, n, tau, cb.k, record.gap_to_mean, record.gap_to_sup,
            )
            sweep.records.append(record)
    return sweeps


def run_regime_sweep(
    schedule: Schedule,
    ns: list[int],
    prior: tuple[float, float] = (1.0, 1.0),
    spec_k: int | Literal["auto"] = "auto",
    cfg: Optional[SolverConfig] = None,
) -> RegimeSweep:
    """Evaluate the entropic objective at ``tau_n`` on the ordinary SMML codebook per n."""
    return run_regime_sweeps([schedule], ns, prior=prior, spec_k=spec_k, cfg=cfg)[0]
