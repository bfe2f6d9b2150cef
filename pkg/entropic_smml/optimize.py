"""Codepoint solvers, interval dynamic programming and codebook fitting."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp, softmax

from .codebook import assign_partition
from .criteria import (
    cell_log_A,
    entropic_objective,
    ordinary_objective,
    worst_case_codelength,
)
from .errors import InvalidArgumentError, SMMLError
from .models import (
    Codebook,
    CodebookFit,
    CriterionSpec,
    Model,
    Partition,
    PriorPredictive,
    SegmentationResult,
    SolverConfig,
)
from .nml import codebook_regret, regret_base_weights, regret_entropic

logger = logging.getLogger(__name__)

_MEAN_EPS = 1e-12
_NU_LIMIT = 700.0
_NEWTON_STEPS = 3


def _check_cell(model: Model, cell: tuple[int, int]) -> tuple[int, int]:
    lo, hi = int(cell[0]), int(cell[1])
    if not 0 <= lo < hi <= model.support_size:
        raise InvalidArgumentError(f"cell [{lo}, {hi}) is empty or outside the support")
    return lo, hi


def _clamp(model: Model, theta: float) -> float:
    low, high = model.param_bounds
    return min(max(theta, low), high)


def _interior_nu(model: Model, mean: float) -> float:
    low, high = model.param_bounds
    eps = _MEAN_EPS * (high - low)
    return float(model.natural_param(min(max(mean, low + eps), high - eps)))


def _ordinary_codepoint(model: Model, log_base: np.ndarray, cell: tuple[int, int]) -> float:
    lo, hi = cell
    if hi - lo == 1:
        return model.ml_estimate(lo)
    weights = softmax(log_base[lo:hi])
    return _clamp(model, float(np.dot(weights, model.t_stat[lo:hi])) / model.n_trials)


def ordinary_codepoint(
    model: Model, rpred: PriorPredictive, cell: tuple[int, int]
) -> float:
    """Cellwise moment matching: ``sum r T / (n sum r)`` over the cell."""
    return _ordinary_codepoint(model, rpred.log_r, _check_cell(model, cell))


def _tilted_log_weights_nu(
    model: Model, log_base: np.ndarray, cell: tuple[int, int], nu: float, tau: float
) -> np.ndarray:
    lo, hi = cell
    # r(x) h(x)^-tau e^(-tau nu T(x)); the e^(tau n A(nu)) factor cancels in-cell
    z = log_base[lo:hi] - tau * (model.log_h[lo:hi] + nu * model.t_stat[lo:hi])
    return z - logsumexp(z)


def tilted_weights(
    model: Model,
    rpred: PriorPredictive,
    cell: tuple[int, int],
    theta: float,
    tau: float,
) -> np.ndarray:
    lo, hi = _check_cell(model, cell)
    z = rpred.log_r[lo:hi] - tau * model.log_likelihood(theta)[lo:hi]
    return np.exp(z - logsumexp(z))


class _TiltedEquation:
    """``g(nu) = n A'(nu) - sum_x w(x; nu) T(x)``, strictly increasing in nu."""

    def __init__(
        self, model: Model, log_base: np.ndarray, cell: tuple[int, int], tau: float
    ) -> None:
        self.model = model
        self.log_base = log_base
        self.cell = cell
        self.tau = tau
        self.t = model.t_stat[cell[0] : cell[1]]

    def _weights(self, nu: float) -> np.ndarray:
        return np.exp(_tilted_log_weights_nu(self.model, self.log_base, self.cell, nu, self.tau))

    def __call__(self, nu: float) -> float:
        n = self.model.n_trials
        return n * float(self.model.mean_map(nu)) - float(np.dot(self._weights(nu), self.t))

    def derivative(self, nu: float) -> float:
        w = self._weights(nu)
        mean_t = float(np.dot(w, self.t))
        spread = float(np.dot(w, (self.t - mean_t) ** 2))
        return self.model.n_trials * float(self.model.variance_map(nu)) + self.tau * spread


def _bracket(equation: _TiltedEquation, lo_nu: float, hi_nu: float) -> tuple[float, float]:
    while equation(lo_nu) > 0:
        if lo_nu <= -_NU_LIMIT:
            raise SMMLError(f"could not bracket tilted codepoint of cell {equation.cell}")
        lo_nu = max(lo_nu - 50.0, -_NU_LIMIT)
    while equation(hi_nu) < 0:
        if hi_nu >= _NU_LIMIT:
            raise SMMLError(f"could not bracket tilted codepoint of cell {equation.cell}")
        hi_nu = min(hi_nu + 50.0, _NU_LIMIT)
    return lo_nu, hi_nu


def _tilted_codepoint(
    model: Model,
    log_base: np.ndarray,
    cell: tuple[int, int],
    tau: float,
    cfg: SolverConfig,
) -> tuple[float, float]:
    lo, hi = cell
    if hi - lo == 1:
        return model.ml_estimate(lo), 0.0

    equation = _TiltedEquation(model, log_base, cell, tau)
    t = equation.t
    n = model.n_trials
    lo_nu, hi_nu = _bracket(
        equation,
        _interior_nu(model, float(t.min()) / n),
        _interior_nu(model, float(t.max()) / n),
    )
    if equation(lo_nu) == 0:
        nu = lo_nu
    elif equation(hi_nu) == 0:
        nu = hi_nu
    else:
        nu = brentq(
            equation,
            lo_nu,
            hi_nu,
            xtol=cfg.codepoint_tol,
            maxiter=cfg.max_fixed_point_iters,
        )

    # safeguarded Newton polish inside the bracket
    residual = abs(equation(nu))
    for _ in range(_NEWTON_STEPS):
        slope = equation.derivative(nu)
        if slope <= 0 or residual == 0:
            break
        candidate = nu - equation(nu) / slope
        if not lo_nu <= candidate <= hi_nu:
            break
        candidate_residual = abs(equation(candidate))
        if candidate_residual >= residual:
            break
        nu, residual = candidate, candidate_residual
    return float(model.mean_map(nu)), residual


def tilted_codepoint(
    model: Model,
    rpred: PriorPredictive,
    cell: tuple[int, int],
    tau: float,
    cfg: Optional[SolverConfig] = None,
) -> tuple[float, float]:
    """Minimize ``log A_{j,tau}`` over the cell's codepoint.

    Returns ``(theta, |g(nu*)|)`` where g is the tilted moment equation.
    """
    if not (math.isfinite(tau) and tau > 0):
        raise InvalidArgumentError(f"tau must be finite and > 0, got {tau!r}")
    return _tilted_codepoint(
        model, rpred.log_r, _check_cell(model, cell), float(tau), cfg or SolverConfig()
    )


def tilted_residual(
    model: Model,
    rpred: PriorPredictive,
    cell: tuple[int, int],
    theta: float,
    tau: float,
) -> float:
    lo, hi = _check_cell(model, cell)
    if hi - lo == 1:
        return abs(model.n_trials * theta - float(model.t_stat[lo]))
    nu = float(model.natural_param(theta))
    return abs(_TiltedEquation(model, rpred.log_r, (lo, hi), tau)(nu))


def tilted_codepoint_fixed_point(
    model: Model,
    rpred: PriorPredictive,
    cell: tuple[int, int],
    tau: float,
    cfg: Optional[SolverConfig] = None,
) -> tuple[float, int, bool]:
    """Damped iteration of ``theta <- (1/n) sum_x w(x; theta) T(x)``.

    Returns ``(theta, iterations, converged)``. The damping factor is halved
    whenever successive steps change sign without shrinking.
    """
    cfg = cfg or SolverConfig()
    lo, hi = _check_cell(model, cell)
    if hi - lo == 1:
        return model.ml_estimate(lo), 0, True
    equation = _TiltedEquation(model, rpred.log_r, (lo, hi), tau)
    theta = _ordinary_codepoint(model, rpred.log_r, (lo, hi))
    damping = cfg.damping
    previous_step = 0.0
    for iteration in range(1, cfg.max_fixed_point_iters + 1):
        nu = _interior_nu(model, theta)
        target = float(np.dot(equation._weights(nu), equation.t)) / model.n_trials
        step = damping * (target - theta)
        if previous_step * step < 0 and abs(step) >= abs(previous_step):
            damping /= 2.0
            step = damping * (target - theta)
        theta = _clamp(model, theta + step)
        if abs(step) < cfg.codepoint_tol:
            return theta, iteration, True
        previous_step = step
    return theta, cfg.max_fixed_point_iters, False


def minimax_codepoint(
    model: Model, cell: tuple[int, int], cfg: Optional[SolverConfig] = None
) -> tuple[float, float]:
    """Codepoint minimizing the largest detail length in the cell.

    Returns ``(theta, max_x -log p_n(x|theta))``. In natural coordinates every
    detail length is a line in nu plus the shared ``n A(nu)``, so the minimum
    sits either where two lines cross or at the stationary point of a single
    active line. A coarse grid brackets the minimum; the candidates inside the
    bracket are then evaluated exactly.
    """
    cfg = cfg or SolverConfig()
    lo, hi = _check_cell(model, cell)
    if hi - lo == 1:
        return model.ml_estimate(lo), -float(model.ml_log_likelihood[lo])

    log_h = model.log_h[lo:hi]
    t = model.t_stat[lo:hi]
    n = model.n_trials

    def worst_details(nu: np.ndarray) -> np.ndarray:
        details = -(log_h[None, :] + nu[:, None] * t[None, :]) + n * np.asarray(
            model.log_partition(nu)
        )[:, None]
        return details.max(axis=1)

    grid = np.linspace(
        _interior_nu(model, float(t.min()) / n),
        _interior_nu(model, float(t.max()) / n),
        cfg.minimax_grid_points,
    )
    worst = worst_details(grid)
    best = int(np.argmin(worst))
    left = grid[max(best - 1, 0)]
    right = grid[min(best + 1, grid.size - 1)]

    # the n A(nu) term cancels between two lines, so crossings are closed-form
    a, b = np.triu_indices(t.size, k=1)
    crossings = (log_h[a] - log_h[b]) / (t[b] - t[a])
    interior = t[(t > 0) & (t < n)]
    stationary = np.asarray(model.natural_param(interior / n), dtype=float)
    candidates = np.concatenate((crossings, stationary))
    candidates = candidates[(candidates >= left) & (candidates <= right)]
    candidates = np.append(candidates, grid[best])
    values = worst_details(candidates)
    pick = int(np.argmin(values))
    nu, value = float(candidates[pick]), float(values[pick])
    if right > left and pick == candidates.size - 1:
        # no exact candidate in the bracket: the optimum sits at a clamped edge
        refined = minimize_scalar(
            lambda x: float(worst_details(np.array([x]))[0]),
            bounds=(left, right),
            method="bounded",
            options={"xatol": cfg.codepoint_tol},
        )
        if refined.fun < value:
            nu, value = float(refined.x), float(refined.fun)
    return float(model.mean_map(nu)), value


def _base_weights(
    model: Model,
    rpred: PriorPredictive,
    spec: CriterionSpec,
    log_mu: Optional[np.ndarray],
) -> np.ndarray:
    if spec.kind == "regret_entropic":
        mu = rpred.log_r if log_mu is None else np.asarray(log_mu, dtype=float)
        return regret_base_weights(model, mu, spec.tau)
    return rpred.log_r


def evaluate_objective(
    cb: Codebook,
    model: Model,
    rpred: PriorPredictive,
    spec: CriterionSpec,
    log_mu: Optional[np.ndarray] = None,
) -> float:
    if spec.kind == "ordinary":
        return ordinary_objective(cb, model, rpred)
    if spec.kind == "entropic":
        return entropic_objective(cb, model, rpred, spec.tau)
    if spec.kind == "worst_case":
        return worst_case_codelength(cb, model, rpred)[0]
    mu = rpred.log_r if log_mu is None else log_mu
    return regret_entropic(codebook_regret(cb, model), mu, spec.tau)


@dataclass(frozen=True)
class _CostTable:
    cost: np.ndarray
    theta: np.ndarray
    residual: np.ndarray


def _cell_fit(
    model: Model,
    log_base: np.ndarray,
    cell: tuple[int, int],
    spec: CriterionSpec,
    cfg: SolverConfig,
) -> tuple[float, float, float]:
    lo, hi = cell
    if spec.kind == "ordinary":
        theta = _ordinary_codepoint(model, log_base, cell)
        log_mass = float(logsumexp(log_base[lo:hi]))
        detail = -model.log_likelihood(theta)[lo:hi]
        cost = -math.exp(log_mass) * log_mass + float(np.dot(np.exp(log_base[lo:hi]), detail))
        return theta, cost, 0.0
    if spec.kind == "worst_case":
        theta, cost = minimax_codepoint(model, cell, cfg)
        return theta, cost, 0.0
    theta, residual = _tilted_codepoint(model, log_base, cell, spec.tau, cfg)
    log_A = cell_log_A(log_base, model.log_likelihood(theta), cell, spec.tau)
    return theta, log_A / (1.0 + spec.tau), residual


def _build_cost_table(
    model: Model, log_base: np.ndarray, spec: CriterionSpec, cfg: SolverConfig
) -> _CostTable:
    size = model.support_size
    cost = np.full((size, size + 1), np.inf)
    theta = np.full((size, size + 1), np.nan)
    residual = np.zeros((size, size + 1))
    for lo in range(size):
        for hi in range(lo + 1, size + 1):
            theta[lo, hi], cost[lo, hi], residual[lo, hi] = _cell_fit(
                model, log_base, (lo, hi), spec, cfg
            )
    logger.debug("cost table for %s over %d intervals", spec.label, size * (size + 1) // 2)
    return _CostTable(cost=cost, theta=theta, residual=residual)


class _Segmenter:
    """Suffix DP over interval partitions of ``[i, size)`` into m cells.

    Ordinary costs add; entropic and worst-case costs are logs of additive
    quantities and combine with logaddexp. Among near-equal splits the
    smallest next boundary wins, giving the lexicographically smallest
    boundary sequence.
    """

    def __init__(self, cost: np.ndarray, k_max: int, additive: bool, tol: float) -> None:
        size = cost.shape[0]
        combine = np.add if additive else np.logaddexp
        self.size = size
        self.value = np.full((k_max + 1, size + 1), np.inf)
        self.choice = np.full((k_max + 1, size + 1), -1, dtype=int)
        self.tied = np.zeros((k_max + 1, size + 1), dtype=bool)
        self.value[1, :size] = cost[:, size]
        self.choice[1, :size] = size
        for m in range(2, k_max + 1):
            for i in range(size - m + 1):
                splits = np.arange(i + 1, size - m + 2)
                candidates = combine(cost[i, splits], self.value[m - 1, splits])
                near = np.flatnonzero(candidates <= candidates.min() + tol)
                self.choice[m, i] = splits[near[0]]
                self.value[m, i] = candidates[near[0]]
                self.tied[m, i] = near.size > 1

    def reconstruct(self, k: int) -> tuple[list[int], float, bool]:
        boundaries: list[int] = []
        tied = False
        i = 0
        for m in range(k, 1, -1):
            tied = tied or bool(self.tied[m, i])
            i = int(self.choice[m, i])
            boundaries.append(i)
        return boundaries, float(self.value[k, 0]), tied


def _objective_from_total(spec: CriterionSpec, total: float) -> float:
    if spec.kind in ("entropic", "regret_entropic"):
        return (1.0 + spec.tau) / spec.tau * total
    return total


def _codebook_from_table(
    table: _CostTable, partition: Partition, spec: CriterionSpec, log_base: np.ndarray
) -> Codebook:
    cells = partition.cells
    thetas = tuple(float(table.theta[lo, hi]) for lo, hi in cells)
    if spec.kind == "ordinary":
        log_q = np.array([logsumexp(log_base[lo:hi]) for lo, hi in cells])
        log_q -= logsumexp(log_q)
    else:
        costs = np.array([table.cost[lo, hi] for lo, hi in cells])
        log_q = costs - logsumexp(costs)
    return Codebook(partition=partition, codepoints=thetas, log_q=tuple(log_q))


def _check_k(model: Model, k: int) -> int:
    if int(k) != k or not 1 <= k <= model.support_size:
        raise InvalidArgumentError(
            f"k must be an integer in [1, {model.support_size}], got {k!r}"
        )
    return int(k)


def interval_dp(
    model: Model,
    rpred: PriorPredictive,
    k: int,
    spec: CriterionSpec,
    cfg: Optional[SolverConfig] = None,
    log_mu: Optional[np.ndarray] = None,
) -> SegmentationResult:
    """Exact optimal contiguous k-cell codebook for the given criterion."""
    cfg = cfg or SolverConfig()
    k = _check_k(model, k)
    log_base = _base_weights(model, rpred, spec, log_mu)
    table = _build_cost_table(model, log_base, spec, cfg)
    segmenter = _Segmenter(table.cost, k, spec.kind == "ordinary", cfg.objective_tol)
    boundaries, total, tied = segmenter.reconstruct(k)
    partition = Partition.from_boundaries(boundaries, model.support_size)
    notes = ("another interval partition attains the same objective",) if tied else ()
    return SegmentationResult(
        codebook=_codebook_from_table(table, partition, spec, log_base),
        objective=_objective_from_total(spec, total),
        tie_notes=notes,
    )


def fit_codebook(
    model: Model,
    rpred: PriorPredictive,
    spec: CriterionSpec,
    k: int | Literal["auto"] = "auto",
    cfg: Optional[SolverConfig] = None,
    log_mu: Optional[np.ndarray] = None,
) -> CodebookFit:
    """Interval DP over the cell count followed by coordinate-descent polishing."""
    cfg = cfg or SolverConfig()
    if k == "auto":
        candidates = list(range(1, cfg.resolved_k_max(model.support_size) + 1))
    else:
        candidates = [_check_k(model, k)]

    log_base = _base_weights(model, rpred, spec, log_mu)
    table = _build_cost_table(model, log_base, spec, cfg)
    segmenter = _Segmenter(
        table.cost, max(candidates), spec.kind == "ordinary", cfg.objective_tol
    )
    totals = {
        m: _objective_from_total(spec, float(segmenter.value[m, 0])) for m in candidates
    }
    best_total = min(totals.values())
    near = [m for m in candidates if totals[m] <= best_total + cfg.objective_tol]
    chosen = near[0]
    notes: list[str] = []
    if len(near) > 1:
        others = ", ".join(str(m) for m in near[1:])
        notes.append(f"k={chosen} ties k={others} within objective_tol; smallest k kept")

    boundaries, _, tied = segmenter.reconstruct(chosen)
    if tied:
        notes.append(f"another {chosen}-cell partition attains the same objective")
    codebook = _codebook_from_table(
        table, Partition.from_boundaries(boundaries, model.support_size), spec, log_base
    )

    objective = evaluate_objective(codebook, model, rpred, spec, log_mu)
    trace = [objective]
    converged = False
    for round_index in range(1, cfg.max_outer_iters + 1):
        reassigned = assign_partition(model, codebook.codepoints, codebook.log_q)
        candidate = _codebook_from_table(table, reassigned.partition, spec, log_base)
        value = evaluate_objective(candidate, model, rpred, spec, log_mu)
        if value > objective + 1e-9 * max(1.0, abs(objective)):
            raise SMMLError(
                f"coordinate descent increased the {spec.label} objective "
                f"from {objective!r} to {value!r} in round {round_index}"
            )
        trace.append(value)
        decrease = objective - value
        if value < objective:
            codebook, objective = candidate, value
        logger.debug("round %d: %s objective %.15g", round_index, spec.label, value)
        if decrease < cfg.objective_tol:
            converged = True
            break

    if not converged:
        logger.warning(
            "coordinate descent for %s stopped after %d rounds without converging",
            spec.label,
            cfg.max_outer_iters,
        )
    logger.info(
        "fitted %s codebook: k=%d objective=%.12g converged=%s",
        spec.label,
        codebook.k,
        objective,
        converged,
    )
    return CodebookFit(
        codebook=codebook,
        objective=objective,
        spec=spec,
        converged=converged,
        trace=tuple(trace),
        tie_notes=tuple(notes),
    )
