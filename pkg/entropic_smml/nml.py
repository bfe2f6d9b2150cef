"""Shtarkov sum, NML coding distribution and regret-based criteria."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .codebook import codelengths
from .errors import InvalidArgumentError
from .models import Codebook, Model, RegretProfile


def shtarkov_sum(model: Model) -> float:
    """``log S_n = log sum_x p_n(x|theta_hat(x))``."""
    return float(logsumexp(model.ml_log_likelihood))


def regret_profile(model: Model, log_Q: np.ndarray) -> RegretProfile:
    """Regret ``-log Q(x) + log p_n(x|theta_hat(x))`` of a (sub-)probability assignment."""
    log_Q = np.asarray(log_Q, dtype=float)
    if log_Q.shape != (model.support_size,):
        raise InvalidArgumentError(
            f"coding distribution must have {model.support_size} entries"
        )
    regret = -log_Q + model.ml_log_likelihood
    return RegretProfile(log_Q=log_Q, regret=regret, sup_regret=float(np.max(regret)))


def nml_distribution(model: Model) -> RegretProfile:
    return regret_profile(model, model.ml_log_likelihood - shtarkov_sum(model))


def regret_entropic(profile: RegretProfile, log_mu: np.ndarray, tau: float) -> float:
    """``J_tau(Q) = (1/tau) log sum_x mu(x) exp(tau R_Q(x))``."""
    if not (math.isfinite(tau) and tau > 0):
        raise InvalidArgumentError(f"tau must be finite and > 0, got {tau!r}")
    log_mu = np.asarray(log_mu, dtype=float)
    if not np.all(np.isfinite(log_mu)):
        raise InvalidArgumentError("reference distribution mu must have full support")
    return float(logsumexp(log_mu + tau * profile.regret)) / tau


def codebook_regret(cb: Codebook, model: Model) -> RegretProfile:
    # the two-part code is a sub-probability assignment Q(x) = exp(-Lambda(x))
    return regret_profile(model, -codelengths(cb, model))


def uniform_log_mu(model: Model) -> np.ndarray:
    return np.full(model.support_size, -math.log(model.support_size))


def regret_base_weights(model: Model, log_mu: np.ndarray, tau: float) -> np.ndarray:
    """Unnormalized ``log[mu(x) p_n(x|theta_hat(x))^tau]``.

    The regret-entropic objective of a two-part code is the entropic objective
    with these weights in place of the prior predictive.
    """
    return np.asarray(log_mu, dtype=float) + tau * model.ml_log_likelihood
