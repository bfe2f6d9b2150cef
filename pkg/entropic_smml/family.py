"""Binomial exponential family and Beta-binomial prior predictive distributions."""

from __future__ import annotations

import numpy as np
from scipy.special import betaln, expit, gammaln, logit, xlogy

from .errors import InvalidArgumentError
from .models import Model, PriorPredictive


def _binomial_log_partition(nu: np.ndarray | float) -> np.ndarray | float:
    # log(1 + e^nu) without overflow for |nu| up to ~700
    return np.logaddexp(0.0, nu)


def _binomial_variance(nu: np.ndarray | float) -> np.ndarray | float:
    return expit(nu) * expit(-nu)


def make_binomial(n_trials: int) -> Model:
    if int(n_trials) != n_trials or n_trials < 1:
        raise InvalidArgumentError(f"n_trials must be an integer >= 1, got {n_trials!r}")
    n = int(n_trials)
    x = np.arange(n + 1, dtype=float)
    log_h = gammaln(n + 1) - gammaln(x + 1) - gammaln(n - x + 1)

    def log_density(p: float) -> np.ndarray:
        # 0 * log 0 = 0, so p in {0, 1} puts all mass on x = 0 or x = n
        return log_h + xlogy(x, p) + xlogy(n - x, 1.0 - p)

    return Model(
        family="binomial",
        n_trials=n,
        log_h=log_h,
        t_stat=x,
        log_partition=_binomial_log_partition,
        mean_map=expit,
        natural_param=logit,
        variance_map=_binomial_variance,
        log_density=log_density,
        param_bounds=(0.0, 1.0),
    )


def beta_binomial_predictive(model: Model, a: float, b: float) -> PriorPredictive:
    """Closed-form prior predictive of a binomial model under a Beta(a, b) prior."""
    if model.family != "binomial":
        raise InvalidArgumentError(
            f"Beta prior predictive needs a binomial model, got {model.family!r}"
        )
    if not (a > 0 and b > 0):
        raise InvalidArgumentError(f"Beta shapes must be positive, got a={a!r}, b={b!r}")

    n = model.n_trials
    if a == 1 and b == 1:
        log_r = np.full(model.support_size, -np.log(n + 1))
    else:
        x = model.t_stat
        log_r = model.log_h + betaln(x + a, n - x + b) - betaln(a, b)
    return PriorPredictive(
        log_r=log_r,
        prior_params=(float(a), float(b)),
        label=f"beta-binomial(n={n}, a={a:g}, b={b:g})",
    )
