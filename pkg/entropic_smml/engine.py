from __future__ import annotations

import logging
import math
from typing import Literal, Optional

import numpy as np

from .codebook import codelengths
from .criteria import entropic_objective, ordinary_objective, renyi_entropy, worst_case_codelength
from .errors import InvalidArgumentError
from .family import beta_binomial_predictive, make_binomial
from .models import (
    CellRecord,
    CodebookFit,
    CodebookReport,
    CriterionSpec,
    FigureComparison,
    Model,
    PointRecord,
    PriorPredictive,
    SolverConfig,
    TauSweepRecord,
)
from .nml import codebook_regret, shtarkov_sum, uniform_log_mu
from .optimize import fit_codebook

logger = logging.getLogger(__name__)

MU_CHOICES = ("prior", "uniform")


def load_model(
    family: str, n_trials: int, prior_a: float, prior_b: float
) -> tuple[Model, PriorPredictive]:
    if family != "binomial":
        raise InvalidArgumentError(
            f"unsupported model family {family!r}; only binomial is built in"
        )
    model = make_binomial(n_trials)
    return model, beta_binomial_predictive(model, prior_a, prior_b)


def reference_log_mu(model: Model, rpred: PriorPredictive, mu: str) -> np.ndarray:
    if mu == "prior":
        return rpred.log_r
    if mu == "uniform":
        return uniform_log_mu(model)
    raise InvalidArgumentError(f"mu must be one of {MU_CHOICES}, got {mu!r}")


def build_codebook_report(
    model: Model, rpred: PriorPredictive, fit: CodebookFit
) -> CodebookReport:
    """Serializable summary of a fitted codebook with its per-point codelength table."""
    cb = fit.codebook
    lengths = codelengths(cb, model)
    profile = codebook_regret(cb, model)
    cells = [
        CellRecord(lo=lo, hi=hi, q=float(q), theta=theta)
        for (lo, hi), q, theta in zip(cb.partition.cells, cb.q, cb.codepoints)
    ]
    points = [
        PointRecord(
            x=x,
            lam=float(lengths[x]),
            lam_ml=-float(model.ml_log_likelihood[x]),
            neg_log_r=-float(rpred.log_r[x]),
            regret=float(profile.regret[x]),
        )
        for x in range(model.support_size)
    ]
    prior_a, prior_b = rpred.prior_params if rpred.prior_params else (None, None)
    return CodebookReport(
        family=model.family,
        n_trials=model.n_trials,
        prior_a=prior_a,
        prior_b=prior_b,
        criterion=fit.spec.kind,
        tau=fit.spec.tau,
        k=cb.k,
        cells=cells,
        objective_nats=fit.objective,
        objective_bits=fit.objective / math.log(2.0),
        converged=fit.converged,
        sup_regret=profile.sup_regret,
        log_shtarkov=shtarkov_sum(model),
        tie_notes=list(fit.tie_notes),
        points=points,
    )


def analyze_fit(
    n_trials: int,
    spec: CriterionSpec,
    prior_a: float = 1.0,
    prior_b: float = 1.0,
    k: int | Literal["auto"] = "auto",
    cfg: Optional[SolverConfig] = None,
    mu: str = "prior",
    family: str = "binomial",
) -> CodebookReport:
    model, rpred = load_model(family, n_trials, prior_a, prior_b)
    log_mu = reference_log_mu(model, rpred, mu) if spec.kind == "regret_entropic" else None
    fit = fit_codebook(model, rpred, spec, k=k, cfg=cfg, log_mu=log_mu)
    return build_codebook_report(model, rpred, fit)


def sweep_tau(
    model: Model,
    rpred: PriorPredictive,
    taus: list[float],
    k: int | Literal["auto"] = "auto",
    cfg: Optional[SolverConfig] = None,
    fixed_codebook: bool = False,
) -> list[TauSweepRecord]:
    """Entropic objective per tau, refitting each time unless the codebook is held fixed.

    The fixed codebook is the ordinary SMML fit with the requested k.
    """
    if any(not (math.isfinite(tau) and tau > 0) for tau in taus):
        raise InvalidArgumentError(f"every tau must be finite and > 0, got {taus}")
    fixed = None
    if fixed_codebook:
        fixed = fit_codebook(model, rpred, CriterionSpec.ordinary(), k=k, cfg=cfg)
    records: list[TauSweepRecord] = []
    for tau in taus:
        if fixed is not None:
            cb = fixed.codebook
            objective = entropic_objective(cb, model, rpred, tau)
        else:
            fit = fit_codebook(model, rpred, CriterionSpec.entropic(tau), k=k, cfg=cfg)
            cb, objective = fit.codebook, fit.objective
        records.append(
            TauSweepRecord(
                tau=tau,
                objective=objective,
                ordinary=ordinary_objective(cb, model, rpred),
                worst_case=worst_case_codelength(cb, model, rpred)[0],
                renyi_bound=renyi_entropy(rpred, 1.0 / (1.0 + tau)),
                k=cb.k,
            )
        )
        logger.info("tau=%g objective=%.12g k=%d", tau, objective, cb.k)
    return records


def figure_comparison(
    model: Model,
    rpred: PriorPredictive,
    tau: float = 1.0,
    cfg: Optional[SolverConfig] = None,
) -> FigureComparison:
    """Free-k ordinary, entropic(tau) and worst-case fits side by side."""
    comparison = FigureComparison(model=model, rpred=rpred)
    for name, spec in (
        ("ordinary", CriterionSpec.ordinary()),
        ("entropic", CriterionSpec.entropic(tau)),
        ("worstcase", CriterionSpec.worst_case()),
    ):
        comparison.fits[name] = fit_codebook(model, rpred, spec, cfg=cfg)
    return comparison
