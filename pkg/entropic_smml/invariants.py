"""Consolidated invariant suite.

Each check returns :class:`InvariantResult` records carrying the worst
violation seen; failures are data, never exceptions.
"""

from __future__ import annotations

import itertools
import logging
import math
from typing import Iterable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import betaln, logsumexp

from .codebook import assign_partition, pairwise_margin, simplex_violation
from .criteria import (
    codelength_variance,
    entropic_objective,
    grouped_entropic_objective,
    ordinary_objective,
    profiled_objective,
    renyi_entropy,
    worst_case_codelength,
)
from .diagnostics import Schedule, run_regime_sweeps
from .errors import InvalidArgumentError
from .family import beta_binomial_predictive, make_binomial
from .models import (
    Codebook,
    CodebookFit,
    CriterionSpec,
    InvariantReport,
    InvariantResult,
    Model,
    Partition,
    PriorPredictive,
    SolverConfig,
)
from .nml import codebook_regret, nml_distribution, regret_entropic, regret_profile, shtarkov_sum
from .optimize import (
    fit_codebook,
    interval_dp,
    ordinary_codepoint,
    tilted_codepoint,
    tilted_residual,
    tilted_weights,
)
from .robustness import (
    batch_kl_divergence,
    model_kl,
    optimal_tilt,
    pac_bayes_gap,
    random_tilts,
    variational_supremum,
    variational_value,
    variational_values,
)

logger = logging.getLogger(__name__)

DEFAULT_SIZES = tuple(range(2, 21))
TAU_GRID = tuple(10.0 ** e for e in range(-3, 4))
SOFTMAX_TAUS = (10.0, 100.0, 1000.0)
VARIATIONAL_TAUS = (0.1, 1.0, 10.0)
PRIORS = ((1.0, 1.0), (2.0, 3.0), (0.5, 0.5))
BOUND_TOL = 1e-12
SLOPE_TAUS = (1e-1, 1e-2, 1e-3, 1e-4)
REGIME_SIZES = tuple(range(10, 201, 10))


def _result(name: str, magnitude: float, tolerance: float, detail: str = "") -> InvariantResult:
    magnitude = float(magnitude)
    return InvariantResult(
        name=name,
        passed=bool(magnitude <= tolerance),
        magnitude=magnitude,
        tolerance=tolerance,
        detail=detail,
    )


def random_codebook(
    model: Model, rng: np.random.Generator, k: Optional[int] = None
) -> Codebook:
    """Contiguous cells with codepoints in (0.05, 0.95) and Dirichlet(2) assertions."""
    size = model.support_size
    if k is None:
        k = int(rng.integers(1, min(size, 5) + 1))
    cuts = rng.choice(np.arange(1, size), size=k - 1, replace=False)
    log_q = np.log(rng.dirichlet(np.full(k, 2.0)))
    return Codebook(
        partition=Partition.from_boundaries(sorted(int(c) for c in cuts), size),
        codepoints=tuple(rng.uniform(0.05, 0.95, size=k)),
        log_q=tuple(log_q - logsumexp(log_q)),
    )


def check_model_normalization(sizes: Iterable[int]) -> list[InvariantResult]:
    normalization = 0.0
    agreement = 0.0
    for n in sizes:
        model = make_binomial(n)
        for theta in np.linspace(0.01, 0.99, 25):
            log_p = model.log_likelihood(theta)
            normalization = max(normalization, abs(float(np.exp(logsumexp(log_p))) - 1.0))
            natural = model.natural_log_likelihood(float(model.natural_param(theta)))
            relative = np.abs(natural - log_p) / np.maximum(1.0, np.abs(log_p))
            agreement = max(agreement, float(np.max(relative)))
    return [
        _result("model_normalization", normalization, 1e-10),
        _result("exponential_family_form", agreement, 1e-12),
    ]


def check_predictive_quadrature(sizes: Iterable[int]) -> InvariantResult:
    """Closed-form Beta-binomial predictive against algebraic-weight quadrature."""
    worst = 0.0
    for n in sizes:
        model = make_binomial(n)
        for a, b in PRIORS:
            rpred = beta_binomial_predictive(model, a, b)
            worst = max(worst, abs(float(np.exp(logsumexp(rpred.log_r))) - 1.0))
            log_beta = betaln(a, b)
            for x in range(model.support_size):
                value, _ = quad(
                    lambda p: math.exp(model.log_likelihood(p)[x] - log_beta),
                    0.0,
                    1.0,
                    weight="alg",
                    wvar=(a - 1.0, b - 1.0),
                    epsabs=1e-13,
                    epsrel=1e-11,
                    limit=200,
                )
                worst = max(worst, abs(value - math.exp(rpred.log_r[x])))
    return _result("predictive_quadrature", worst, 1e-8)


def check_mean_map_monotone() -> InvariantResult:
    model = make_binomial(1)
    steps = np.diff(model.mean_map(np.linspace(-20.0, 20.0, 401)))
    return _result("mean_map_monotone", float(np.sum(steps <= 0)), 0.0)


def check_codebook_simplex(model: Model, codebooks: Iterable[Codebook]) -> InvariantResult:
    worst = 0.0
    for cb in codebooks:
        worst = max(worst, simplex_violation(cb))
        for (lo, hi), theta in zip(cb.partition.cells, cb.codepoints):
            if not np.all(np.isfinite(model.log_likelihood(theta)[lo:hi])):
                worst = math.inf
    return _result("codebook_simplex", worst, 1e-10)


def check_regret_nonnegative(model: Model, codebooks: Iterable[Codebook]) -> InvariantResult:
    worst = 0.0
    for cb in codebooks:
        worst = max(worst, -float(np.min(codebook_regret(cb, model).regret)))
    return _result("regret_nonnegative", worst, BOUND_TOL)


def check_partition_structure(model: Model, codebooks: Iterable[Codebook]) -> InvariantResult:
    """Reassigned cells are intervals; each adjacent margin changes sign exactly once."""
    violations = 0
    for cb in codebooks:
        reassigned = assign_partition(model, cb.codepoints, cb.log_q)
        for j in range(reassigned.k - 1):
            margin = pairwise_margin(
                model,
                reassigned.codepoints[j],
                reassigned.log_q[j],
                reassigned.codepoints[j + 1],
                reassigned.log_q[j + 1],
            )
            signs = margin[~np.isnan(margin)] >= 0
            downs = int(np.sum(signs[:-1] & ~signs[1:]))
            ups = int(np.sum(~signs[:-1] & signs[1:]))
            if downs != 1 or ups != 0:
                violations += 1
    return _result("affine_cell_boundaries", violations, 0.0)


def check_interpolation_bounds(
    model: Model, rpred: PriorPredictive, codebooks: Iterable[Codebook]
) -> list[InvariantResult]:
    order_gap = monotone_gap = renyi_gap = softmax_gap = regroup_gap = 0.0
    neg_log_min_r = -float(np.min(rpred.log_r))
    for cb in codebooks:
        mean = ordinary_objective(cb, model, rpred)
        sup, _ = worst_case_codelength(cb, model, rpred)
        previous = -math.inf
        for tau in TAU_GRID:
            value = entropic_objective(cb, model, rpred, tau)
            order_gap = max(order_gap, mean - value, value - sup)
            monotone_gap = max(monotone_gap, previous - value)
            previous = value
            renyi_gap = max(renyi_gap, renyi_entropy(rpred, 1.0 / (1.0 + tau)) - value)
            grouped = grouped_entropic_objective(cb, model, rpred, tau)
            regroup_gap = max(regroup_gap, abs(value - grouped) / max(1.0, abs(value)))
        for tau in SOFTMAX_TAUS:
            value = entropic_objective(cb, model, rpred, tau)
            softmax_gap = max(softmax_gap, (sup - value) - neg_log_min_r / tau)
    return [
        _result("ordinary_le_entropic_le_worst", order_gap, BOUND_TOL),
        _result("entropic_monotone_in_tau", monotone_gap, BOUND_TOL),
        _result("renyi_floor", renyi_gap, BOUND_TOL),
        _result("softmax_error_bound", softmax_gap, BOUND_TOL),
        _result("regrouping_identity", regroup_gap, 1e-12),
    ]


def check_cumulant_expansion(tau: float = 1e-3) -> InvariantResult:
    model = make_binomial(2)
    rpred = beta_binomial_predictive(model, 1.0, 1.0)
    cb = Codebook(partition=Partition(((0, 3),)), codepoints=(0.5,), log_q=(0.0,))
    variance = codelength_variance(cb, model, rpred)
    excess = entropic_objective(cb, model, rpred, tau) - ordinary_objective(cb, model, rpred)
    return _result(
        "cumulant_expansion", abs(excess - 0.5 * tau * variance) / (tau * variance), 0.01
    )


def check_variational(
    model: Model,
    rpred: PriorPredictive,
    codebooks: Iterable[Codebook],
    seed: int,
    tilt_count: int = 100,
) -> list[InvariantResult]:
    tilts = random_tilts(model.support_size, tilt_count, seed)
    exact = gibbs = pac = pac_at_optimum = supremum = 0.0
    for cb in codebooks:
        for tau in VARIATIONAL_TAUS:
            value = entropic_objective(cb, model, rpred, tau)
            s_star = optimal_tilt(cb, model, rpred, tau)
            exact = max(exact, abs(value - variational_value(cb, model, rpred, tau, s_star)))
            pac_at_optimum = max(
                pac_at_optimum, abs(pac_bayes_gap(cb, model, rpred, tau, s_star))
            )
            inner = variational_values(cb, model, rpred, tau, tilts)
            # the batch path must agree with the one-tilt path
            single = variational_value(cb, model, rpred, tau, tilts[0])
            exact = max(exact, abs(inner[0] - single))
            residual = inner + batch_kl_divergence(tilts, s_star) / tau - value
            gibbs = max(gibbs, float(np.max(np.abs(residual))))
            pac = max(pac, float(np.max(inner - value)))
            supremum = max(supremum, variational_supremum(cb, model, rpred, tau, tilts) - value)
    return [
        _result("variational_exactness", exact, 1e-10),
        _result("gibbs_decomposition", gibbs, 1e-10),
        _result("pac_bayes_nonnegative", pac, BOUND_TOL),
        _result("pac_bayes_equality_at_optimal_tilt", pac_at_optimum, 1e-10),
        _result("variational_supremum", supremum, 1e-10),
    ]


def check_nml(
    sizes: Iterable[int], rng: np.random.Generator, draws: int = 1000
) -> list[InvariantResult]:
    spread = minimax = constant_j = 0.0
    for n in sizes:
        model = make_binomial(n)
        log_s = shtarkov_sum(model)
        profile = nml_distribution(model)
        spread = max(spread, profile.spread)
        rpred = beta_binomial_predictive(model, 1.0, 1.0)
        for tau in TAU_GRID:
            constant_j = max(constant_j, abs(regret_entropic(profile, rpred.log_r, tau) - log_s))
        weights = rng.dirichlet(np.ones(model.support_size), size=draws)
        scales = rng.uniform(0.5, 1.0, size=draws)
        for row, scale in zip(weights, scales):
            with np.errstate(divide="ignore"):
                candidate = regret_profile(model, np.log(row * scale))
            minimax = max(minimax, log_s - candidate.sup_regret)
    return [
        _result("nml_regret_constant", spread, 1e-12),
        _result("nml_minimax_lower_bound", minimax, BOUND_TOL),
        _result("nml_regret_entropic_constant", constant_j, 1e-12),
    ]


def check_fitted_codepoints(
    model: Model, rpred: PriorPredictive, fit: CodebookFit
) -> list[InvariantResult]:
    tau = fit.spec.tau
    stationarity = mean_value = projection = 0.0
    for cell, theta in zip(fit.codebook.partition.cells, fit.codebook.codepoints):
        lo, hi = cell
        stationarity = max(stationarity, tilted_residual(model, rpred, cell, theta, tau))
        if hi - lo > 1:
            weights = tilted_weights(model, rpred, cell, theta, tau)
            tilted_mean = float(np.dot(weights, model.t_stat[lo:hi])) / model.n_trials
            mean_value = max(mean_value, abs(theta - tilted_mean))
            log_s = np.full(model.support_size, -np.inf)
            with np.errstate(divide="ignore"):
                log_s[lo:hi] = np.log(weights)
            centre = model_kl(model, log_s, theta)
            for neighbour in (theta - 1e-4, theta + 1e-4):
                if 0.0 < neighbour < 1.0:
                    projection = max(projection, centre - model_kl(model, log_s, neighbour))
    return [
        _result("tilted_stationarity", stationarity, 1e-8),
        _result("tilted_mean_value", mean_value, 1e-8),
        _result("tilted_m_projection", projection, BOUND_TOL),
    ]


def _grid_minimizer(
    model: Model, rpred: PriorPredictive, cell: tuple[int, int], tau: float
) -> float:
    lo, hi = cell

    def log_A(thetas: np.ndarray) -> np.ndarray:
        log_lik = model.log_density(thetas[:, None])[:, lo:hi]
        return logsumexp(rpred.log_r[lo:hi][None, :] - tau * log_lik, axis=1)

    # coarse pass, then a 1e-6 pass around the coarse winner
    coarse = np.linspace(1e-3, 1.0 - 1e-3, 999)
    centre = float(coarse[int(np.argmin(log_A(coarse)))])
    fine = np.clip(centre + 1e-6 * np.arange(-2000, 2001), 1e-9, 1.0 - 1e-9)
    return float(fine[int(np.argmin(log_A(fine)))])


def check_codepoint_grid_search(
    rng: np.random.Generator, instances: int = 50, n_cap: int = 20
) -> InvariantResult:
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, n_cap + 1))
        model = make_binomial(n)
        rpred = beta_binomial_predictive(model, 1.0, 1.0)
        lo = int(rng.integers(0, n))
        hi = int(rng.integers(lo + 2, n + 2))
        tau = float(10.0 ** rng.uniform(-1.0, 1.0))
        theta, _ = tilted_codepoint(model, rpred, (lo, hi), tau)
        worst = max(worst, abs(theta - _grid_minimizer(model, rpred, (lo, hi), tau)))
    return _result("tilted_codepoint_grid_search", worst, 1e-6)


def _exhaustive_objective(
    model: Model, rpred: PriorPredictive, k: int, spec: CriterionSpec
) -> float:
    size = model.support_size
    cache: dict[tuple[int, int], float] = {}

    def codepoint(cell: tuple[int, int]) -> float:
        if cell not in cache:
            if spec.kind == "ordinary":
                cache[cell] = ordinary_codepoint(model, rpred, cell)
            else:
                cache[cell] = tilted_codepoint(model, rpred, cell, spec.tau)[0]
        return cache[cell]

    best = math.inf
    for boundaries in itertools.combinations(range(1, size), k - 1):
        partition = Partition.from_boundaries(list(boundaries), size)
        thetas = [codepoint(cell) for cell in partition.cells]
        if spec.kind == "ordinary":
            log_q = np.array([logsumexp(rpred.log_r[lo:hi]) for lo, hi in partition.cells])
            cb = Codebook(partition=partition, codepoints=tuple(thetas), log_q=tuple(log_q))
            value = ordinary_objective(cb, model, rpred)
        else:
            value, _ = profiled_objective(model, rpred, partition, thetas, spec.tau)
        best = min(best, value)
    return best


def check_dp_exhaustive(
    sizes: Iterable[int], rng: np.random.Generator, k_cap: int = 4
) -> InvariantResult:
    """Interval DP against enumeration of every interval partition."""
    specs = (CriterionSpec.ordinary(), CriterionSpec.entropic(0.5), CriterionSpec.entropic(2.0))
    worst = 0.0
    for n in sizes:
        model = make_binomial(n)
        a, b = rng.uniform(0.5, 3.0, size=2)
        rpred = beta_binomial_predictive(model, float(a), float(b))
        for spec in specs:
            for k in range(1, min(k_cap, model.support_size) + 1):
                dp = interval_dp(model, rpred, k, spec)
                oracle = _exhaustive_objective(model, rpred, k, spec)
                worst = max(worst, abs(dp.objective - oracle) / max(1.0, abs(oracle)))
    return _result("dp_equals_exhaustive", worst, 1e-10)


def check_tau_zero_recovery(
    ns: Iterable[int] = (10, 25, 50), cfg: Optional[SolverConfig] = None
) -> InvariantResult:
    worst = 0.0
    for n in ns:
        model = make_binomial(n)
        rpred = beta_binomial_predictive(model, 1.0, 1.0)
        ordinary = fit_codebook(model, rpred, CriterionSpec.ordinary(), cfg=cfg)
        entropic = fit_codebook(model, rpred, CriterionSpec.entropic(1e-6), cfg=cfg)
        if ordinary.codebook.partition != entropic.codebook.partition:
            return _result("tau_zero_recovery", math.inf, 1e-4, f"partitions differ at n={n}")
        gap = max(
            abs(a - b)
            for a, b in zip(ordinary.codebook.codepoints, entropic.codebook.codepoints)
        )
        worst = max(worst, gap)
    return _result("tau_zero_recovery", worst, 1e-4)


def check_worst_case_endpoint(
    ns: Iterable[int] = (10, 20, 50), cfg: Optional[SolverConfig] = None
) -> list[InvariantResult]:
    """Worst-case fits against tau=1e3 entropic fits: objectives and partitions."""
    tau = 1e3
    chain = gap = 0.0
    mismatched: list[int] = []
    for n in ns:
        model = make_binomial(n)
        rpred = beta_binomial_predictive(model, 1.0, 1.0)
        worst_fit = fit_codebook(model, rpred, CriterionSpec.worst_case(), cfg=cfg)
        sup, _ = worst_case_codelength(worst_fit.codebook, model, rpred)
        profile = codebook_regret(worst_fit.codebook, model)
        chain = max(chain, abs(sup - float(np.max(-model.ml_log_likelihood + profile.regret))))

        entropic_fit = fit_codebook(model, rpred, CriterionSpec.entropic(tau), cfg=cfg)
        below = entropic_fit.objective - worst_fit.objective
        above = worst_fit.objective - entropic_fit.objective - math.log(n + 1) / tau
        gap = max(gap, below, above)
        if worst_fit.codebook.partition != entropic_fit.codebook.partition:
            mismatched.append(n)
    detail = f"partitions differ at n={mismatched}" if mismatched else ""
    return [
        _result("worst_case_regret_chain", chain, 1e-12),
        _result("worst_case_matches_large_tau", max(gap, 0.0), 1e-9),
        _result("worst_case_partition_matches_large_tau", len(mismatched), 0.0, detail),
    ]


def check_codepoint_slope(
    n: int = 20, prior: tuple[float, float] = (2.0, 3.0)
) -> InvariantResult:
    """``max_j |theta_tau - theta_0| / tau`` settles to a constant as tau shrinks."""
    model = make_binomial(n)
    rpred = beta_binomial_predictive(model, *prior)
    cells = fit_codebook(model, rpred, CriterionSpec.ordinary()).codebook.partition.cells
    slopes: dict[float, float] = {}
    for tau in SLOPE_TAUS:
        shift = max(
            abs(
                tilted_codepoint(model, rpred, cell, tau)[0]
                - ordinary_codepoint(model, rpred, cell)
            )
            for cell in cells
        )
        slopes[tau] = shift / tau
    finest, next_finest = sorted(slopes)[:2]
    reference = slopes[finest]
    drift = abs(slopes[next_finest] - reference) / reference if reference > 0 else 0.0
    detail = "C=" + ", ".join(f"{slopes[tau]:.4g}@{tau:g}" for tau in SLOPE_TAUS)
    return _result("tilted_codepoint_linear_in_tau", drift, 0.05, detail)


def _rise(values: list[float]) -> float:
    return max([later - earlier for earlier, later in zip(values, values[1:])] + [0.0])


def check_regimes(ns: Iterable[int] = REGIME_SIZES) -> list[InvariantResult]:
    """Exact per-n regime bounds; monotonicity in n is reported, not gated."""
    sup_sweep, mean_sweep = run_regime_sweeps(
        [Schedule("c_log2_n", 1.0), Schedule("c_over_log_n", 0.5)], list(ns)
    )
    records = sup_sweep.records + mean_sweep.records
    negative = max(max(-record.gap_to_mean, -record.gap_to_sup) for record in records)
    bound = max(
        record.gap_to_sup - record.neg_log_min_r / record.tau for record in records
    )
    sup_rise = _rise([record.gap_to_sup for record in sup_sweep.records])
    mean_rise = _rise([record.gap_to_mean for record in mean_sweep.records])
    logger.info("regime gaps: largest rise sup=%.3g mean=%.3g", sup_rise, mean_rise)
    return [
        _result("regime_gaps_nonnegative", max(negative, 0.0), BOUND_TOL),
        _result(
            "regime_sup_gap_bound",
            max(bound, 0.0),
            BOUND_TOL,
            f"largest rise in n: gap_sup {sup_rise:.3g}, gap_mean {mean_rise:.3g}",
        ),
    ]


def _merge(name: str, items: list[InvariantResult]) -> InvariantResult:
    worst = max(items, key=lambda item: item.magnitude)
    return InvariantResult(
        name=name,
        passed=all(item.passed for item in items),
        magnitude=worst.magnitude,
        tolerance=worst.tolerance,
        detail=worst.detail,
    )


def run_invariant_suite(
    seed: int = 42,
    sizes: Iterable[int] = DEFAULT_SIZES,
    codebooks_per_size: int = 20,
    cfg: Optional[SolverConfig] = None,
) -> InvariantReport:
    """Run every check over ``sizes`` with one seeded generator."""
    sizes = sorted({int(n) for n in sizes})
    if not sizes or sizes[0] < 2 or sizes[-1] > 50:
        raise InvalidArgumentError(f"sizes must lie in [2, 50], got {sizes}")
    rng = np.random.default_rng(seed)
    report = InvariantReport(seed=seed, sizes=sizes)

    report.results.extend(check_model_normalization(sizes))
    report.results.append(check_predictive_quadrature(sizes))
    report.results.append(check_mean_map_monotone())

    per_size: dict[str, list[InvariantResult]] = {}
    for n in sizes:
        model = make_binomial(n)
        rpred = beta_binomial_predictive(model, 1.0, 1.0)
        codebooks = [random_codebook(model, rng) for _ in range(codebooks_per_size)]
        ordinary = fit_codebook(model, rpred, CriterionSpec.ordinary(), cfg=cfg)
        entropic = fit_codebook(model, rpred, CriterionSpec.entropic(1.0), cfg=cfg)
        evaluated = codebooks + [ordinary.codebook, entropic.codebook]
        batch = [
            check_codebook_simplex(model, evaluated),
            check_regret_nonnegative(model, evaluated),
            check_partition_structure(model, evaluated),
            *check_interpolation_bounds(model, rpred, evaluated),
            *check_variational(model, rpred, codebooks, seed),
            *check_fitted_codepoints(model, rpred, entropic),
        ]
        for result in batch:
            per_size.setdefault(result.name, []).append(result)
        logger.info("invariants checked for n=%d", n)
    report.results.extend(_merge(name, items) for name, items in per_size.items())

    report.results.append(check_cumulant_expansion())
    report.results.extend(check_nml(sizes, rng))
    report.results.append(check_codepoint_grid_search(rng))
    dp_sizes = sorted({n for n in sizes if n <= 12} | {12})
    report.results.append(check_dp_exhaustive(dp_sizes, rng))
    report.results.append(check_tau_zero_recovery(cfg=cfg))
    report.results.append(check_codepoint_slope())
    report.results.extend(check_worst_case_endpoint(cfg=cfg))
    report.results.extend(check_regimes())

    for failure in report.failures:
        logger.warning(
            "invariant %s failed: %.3g > %.3g", failure.name, failure.magnitude, failure.tolerance
        )
    return report
