"""Variational (Donsker-Varadhan) view of the entropic criterion."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp, xlogy

from .codebook import codelengths
from .criteria import entropic_objective
from .errors import InvalidArgumentError
from .models import Codebook, Model, PriorPredictive, TiltedMeasure


Distribution = TiltedMeasure | PriorPredictive | np.ndarray


def _log_probabilities(s: Distribution) -> np.ndarray:
    if isinstance(s, TiltedMeasure):
        return s.log_s
    if isinstance(s, PriorPredictive):
        return s.log_r
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(s, dtype=float))


def kl_divergence(s: Distribution, r: Distribution) -> float:
    """``KL(s || r)`` with ``0 log 0 = 0``; +inf when s is not dominated by r.

    Arrays are probabilities; tilts and predictives are used through their
    log-probabilities so that tiny masses do not underflow.
    """
    log_s = _log_probabilities(s)
    log_r = _log_probabilities(r)
    if log_s.shape != log_r.shape:
        raise InvalidArgumentError("distributions must share a support")
    support = np.isfinite(log_s)
    if not np.all(np.isfinite(log_r[support])):
        return math.inf
    return float(np.dot(np.exp(log_s[support]), log_s[support] - log_r[support]))


def optimal_tilt(
    cb: Codebook, model: Model, rpred: PriorPredictive, tau: float
) -> TiltedMeasure:
    """Maximizing tilt ``s*(x) ∝ r(x) exp(tau Lambda(x))``."""
    if not (math.isfinite(tau) and tau > 0):
        raise InvalidArgumentError(f"tau must be finite and > 0, got {tau!r}")
    tilted = rpred.log_r + tau * codelengths(cb, model)
    return TiltedMeasure(log_s=tilted - logsumexp(tilted), reference=rpred.label)


def variational_value(
    cb: Codebook,
    model: Model,
    rpred: PriorPredictive,
    tau: float,
    s: Distribution,
) -> float:
    """``E_s[Lambda] - KL(s || r)/tau``; its supremum over s is the entropic objective."""
    lengths = codelengths(cb, model)
    expected = float(np.dot(np.exp(_log_probabilities(s)), lengths))
    return expected - kl_divergence(s, rpred) / tau


def pac_bayes_gap(
    cb: Codebook,
    model: Model,
    rpred: PriorPredictive,
    tau: float,
    s: Distribution,
) -> float:
    """Slack in ``E_s[Lambda] <= I_tau + KL(s || r)/tau``; zero exactly at s*."""
    return entropic_objective(cb, model, rpred, tau) - variational_value(
        cb, model, rpred, tau, s
    )


def random_tilts(support_size: int, count: int, seed: int) -> np.ndarray:
    """``count`` symmetric-Dirichlet draws on the support, one per row."""
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(support_size), size=count)


def batch_kl_divergence(tilts: np.ndarray, r: Distribution) -> np.ndarray:
    """Row-wise ``KL(s_i || r)`` for a batch of probability rows."""
    tilts = np.atleast_2d(np.asarray(tilts, dtype=float))
    log_r = _log_probabilities(r)
    if tilts.shape[1] != log_r.shape[0]:
        raise InvalidArgumentError("distributions must share a support")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = xlogy(tilts, tilts) - np.where(tilts > 0, tilts * log_r, 0.0)
    return terms.sum(axis=1)


def variational_values(
    cb: Codebook,
    model: Model,
    rpred: PriorPredictive,
    tau: float,
    tilts: np.ndarray,
) -> np.ndarray:
    """:func:`variational_value` for every row of ``tilts`` at once."""
    tilts = np.atleast_2d(np.asarray(tilts, dtype=float))
    lengths = codelengths(cb, model)
    return tilts @ lengths - batch_kl_divergence(tilts, rpred) / tau


def variational_supremum(
    cb: Codebook,
    model: Model,
    rpred: PriorPredictive,
    tau: float,
    tilts: np.ndarray,
) -> float:
    """Largest variational value over a batch of tilts plus the optimal one."""
    best = variational_value(cb, model, rpred, tau, optimal_tilt(cb, model, rpred, tau))
    if len(tilts):
        best = max(best, float(np.max(variational_values(cb, model, rpred, tau, tilts))))
    return best


def model_kl(model: Model, log_s: np.ndarray, theta: float) -> float:
    """``KL(s || p_n(.|theta))`` for a distribution s on the support."""
    return kl_divergence(
        TiltedMeasure(log_s=log_s), TiltedMeasure(log_s=model.log_likelihood(theta))
    )
