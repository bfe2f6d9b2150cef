"""Ordinary, entropic and worst-case codelength criteria.

All aggregates are computed in log space with ``scipy.special.logsumexp``; units
are nats throughout.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .codebook import codelengths
from .errors import InfeasibleCodepointError, InvalidArgumentError
from .models import Codebook, Model, Partition, PriorPredictive


def _require_tau(tau: float) -> float:
    if not (math.isfinite(tau) and tau > 0):
        raise InvalidArgumentError(
            f"tau must be finite and > 0, got {tau!r}; use ordinary_objective for tau=0"
        )
    return float(tau)


def _ordered_sum(values: np.ndarray) -> float:
    # running sum over x = 0, 1, ... in order
    return float(np.cumsum(values)[-1])


def ordinary_objective(cb: Codebook, model: Model, rpred: PriorPredictive) -> float:
    lengths = codelengths(cb, model)
    return _ordered_sum(rpred.probabilities * lengths)


def codelength_variance(cb: Codebook, model: Model, rpred: PriorPredictive) -> float:
    lengths = codelengths(cb, model)
    r = rpred.probabilities
    mean = _ordered_sum(r * lengths)
    return _ordered_sum(r * (lengths - mean) ** 2)


def entropic_objective(
    cb: Codebook, model: Model, rpred: PriorPredictive, tau: float
) -> float:
    tau = _require_tau(tau)
    lengths = codelengths(cb, model)
    return float(logsumexp(rpred.log_r + tau * lengths)) / tau


def cell_log_A(
    log_base: np.ndarray,
    log_lik: np.ndarray,
    cell: tuple[int, int],
    tau: float,
) -> float:
    lo, hi = cell
    cell_lik = log_lik[lo:hi]
    if not np.all(np.isfinite(cell_lik)):
        return math.inf
    return float(logsumexp(log_base[lo:hi] - tau * cell_lik))


def cell_A(
    model: Model,
    rpred: PriorPredictive,
    cell: tuple[int, int],
    theta: float,
    tau: float,
) -> float:
    """``log A_{j,tau}(theta) = log sum_{x in cell} r(x) p(x|theta)^(-tau)``.

    Returns +inf when theta cannot encode some member of the cell.
    """
    tau = _require_tau(tau)
    return cell_log_A(rpred.log_r, model.log_likelihood(theta), cell, tau)


def grouped_entropic_objective(
    cb: Codebook, model: Model, rpred: PriorPredictive, tau: float
) -> float:
    """Entropic objective regrouped by cell: ``(1/tau) log sum_j q_j^(-tau) A_j``."""
    tau = _require_tau(tau)
    terms = [
        -tau * log_q + cell_A(model, rpred, cell, theta, tau)
        for cell, theta, log_q in zip(cb.partition.cells, cb.codepoints, cb.log_q)
    ]
    return float(logsumexp(terms)) / tau


def profile_log_A(log_A: np.ndarray, tau: float) -> tuple[float, tuple[float, ...]]:
    """Eliminate q analytically from per-cell ``log A_j``.

    Returns the profiled objective ``((1+tau)/tau) log sum_j A_j^(1/(1+tau))`` and
    the optimal ``log q_j``.
    """
    scaled = np.asarray(log_A, dtype=float) / (1.0 + tau)
    total = float(logsumexp(scaled))
    log_q = tuple(float(value) for value in scaled - total)
    return (1.0 + tau) / tau * total, log_q


def profiled_objective(
    model: Model,
    rpred: PriorPredictive,
    partition: Partition,
    codepoints: tuple[float, ...] | list[float],
    tau: float,
) -> tuple[float, tuple[float, ...]]:
    tau = _require_tau(tau)
    if len(codepoints) != partition.k:
        raise InvalidArgumentError("one codepoint per cell required")
    log_A = np.empty(partition.k)
    for index, (cell, theta) in enumerate(zip(partition.cells, codepoints)):
        log_A[index] = cell_A(model, rpred, cell, theta, tau)
        if not math.isfinite(log_A[index]):
            raise InfeasibleCodepointError(index, cell, theta)
    return profile_log_A(log_A, tau)


def worst_case_codelength(
    cb: Codebook, model: Model, rpred: PriorPredictive | None = None
) -> tuple[float, int]:
    lengths = codelengths(cb, model)
    x = int(np.argmax(lengths))
    return float(lengths[x]), x


def renyi_entropy(rpred: PriorPredictive, alpha: float) -> float:
    if not 0 < alpha < 1:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(logsumexp(alpha * rpred.log_r)) / (1.0 - alpha)


def escort_log_distribution(rpred: PriorPredictive, tau: float) -> np.ndarray:
    tau = _require_tau(tau)
    scaled = rpred.log_r / (1.0 + tau)
    return scaled - logsumexp(scaled)


def escort_distribution(rpred: PriorPredictive, tau: float) -> np.ndarray:
    """Escort law ``Q*(x) ∝ r(x)^(1/(1+tau))``, the unconstrained exponential-length optimum."""
    return np.exp(escort_log_distribution(rpred, tau))


def exponential_length(rpred: PriorPredictive, log_Q: np.ndarray, tau: float) -> float:
    """Exponential-length criterion of a code with lengths ``-log Q(x)``."""
    tau = _require_tau(tau)
    return float(logsumexp(rpred.log_r - tau * np.asarray(log_Q, dtype=float))) / tau


def smml_redundancy(
    cb: Codebook, model: Model, rpred: PriorPredictive, tau: float
) -> float:
    """Excess of the entropic objective over its Rényi-entropy floor."""
    return entropic_objective(cb, model, rpred, tau) - renyi_entropy(
        rpred, 1.0 / (1.0 + tau)
    )
