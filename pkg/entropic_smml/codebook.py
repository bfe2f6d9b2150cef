"""Two-part codelengths and the fixed-codebook partition rule."""

from __future__ import annotations

import bisect
import logging
import math

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidArgumentError, PartitionStructureError
from .models import NORMALIZATION_TOL, Codebook, Model, Partition

logger = logging.getLogger(__name__)


def simplex_violation(cb: Codebook) -> float:
    """Distance of ``sum_j q_j`` from 1 (inf if any log q is not finite)."""
    log_q = np.array(cb.log_q)
    if not np.all(np.isfinite(log_q)):
        return math.inf
    return abs(float(np.exp(logsumexp(log_q))) - 1.0)


def validate_codebook(cb: Codebook, model: Model) -> None:
    if cb.partition.support_size != model.support_size:
        raise InvalidArgumentError(
            f"partition covers {cb.partition.support_size} points, "
            f"model support has {model.support_size}"
        )
    violation = simplex_violation(cb)
    if violation > NORMALIZATION_TOL:
        raise InvalidArgumentError(
            f"assertion probabilities are off the simplex by {violation:.3e}"
        )
    for index, ((lo, hi), theta) in enumerate(zip(cb.partition.cells, cb.codepoints)):
        if not np.all(np.isfinite(model.log_likelihood(theta)[lo:hi])):
            raise InvalidArgumentError(
                f"codepoint {theta!r} of cell {index} cannot encode every member of [{lo}, {hi})"
            )


def codelengths(cb: Codebook, model: Model) -> np.ndarray:
    """Two-part codelength ``-log q_j(x) - log p_n(x|theta_j(x))`` for every x, in nats."""
    validate_codebook(cb, model)
    lengths = np.empty(model.support_size)
    for (lo, hi), theta, log_q in zip(cb.partition.cells, cb.codepoints, cb.log_q):
        lengths[lo:hi] = -log_q - model.log_likelihood(theta)[lo:hi]
    return lengths


def cell_of(cb: Codebook, x: int) -> int:
    if not 0 <= x < cb.partition.support_size:
        raise InvalidArgumentError(
            f"x={x} outside support [0, {cb.partition.support_size})"
        )
    starts = [lo for lo, _ in cb.partition.cells]
    return bisect.bisect_right(starts, x) - 1


def estimate(cb: Codebook, x: int) -> float:
    """SMML point estimate: the codepoint of the cell containing x."""
    return cb.codepoints[cell_of(cb, x)]


def two_part_codelength(cb: Codebook, model: Model, x: int) -> float:
    if not 0 <= x < model.support_size:
        raise InvalidArgumentError(f"x={x} outside support [0, {model.support_size})")
    j = cell_of(cb, x)
    return -cb.log_q[j] - float(model.log_likelihood(cb.codepoints[j])[x])


def affine_boundary(
    model: Model,
    theta_j: float,
    log_q_j: float,
    theta_l: float,
    log_q_l: float,
) -> tuple[float, float]:
    """Pairwise decision boundary between interior codepoints j and l.

    Returns ``(slope, intercept)`` such that x prefers j over l exactly when
    ``slope * T(x) - intercept >= 0``.
    """
    nu_j = float(model.natural_param(theta_j))
    nu_l = float(model.natural_param(theta_l))
    if not (math.isfinite(nu_j) and math.isfinite(nu_l)):
        raise InvalidArgumentError("affine boundary needs interior codepoints")
    slope = nu_j - nu_l
    intercept = (log_q_l - log_q_j) + model.n_trials * (
        float(model.log_partition(nu_j)) - float(model.log_partition(nu_l))
    )
    return slope, intercept


def pairwise_margin(
    model: Model,
    theta_j: float,
    log_q_j: float,
    theta_l: float,
    log_q_l: float,
) -> np.ndarray:
    """Per-point codelength advantage of j over l (positive where j is shorter)."""
    with np.errstate(invalid="ignore"):
        length_j = -log_q_j - model.log_likelihood(theta_j)
        length_l = -log_q_l - model.log_likelihood(theta_l)
        return length_l - length_j


def assign_partition(
    model: Model,
    codepoints: tuple[float, ...] | list[float],
    log_q: tuple[float, ...] | list[float],
) -> Codebook:
    """Reassign every x to its shortest two-part code.

    Ties go to the lower cell index after sorting codepoints by mean parameter.
    Cells left empty are dropped and the surviving q renormalized.
    """
    if len(codepoints) != len(log_q) or not codepoints:
        raise InvalidArgumentError("need matching, non-empty codepoints and log_q")
    thetas = np.asarray(codepoints, dtype=float)
    order = np.argsort(thetas, kind="stable")
    thetas = thetas[order]
    sorted_log_q = np.asarray(log_q, dtype=float)[order]

    lengths = np.vstack(
        [-lq - model.log_likelihood(theta) for theta, lq in zip(thetas, sorted_log_q)]
    )
    if not np.all(np.isfinite(lengths.min(axis=0))):
        raise InvalidArgumentError("some support point has no codepoint able to encode it")
    # argmin returns the first minimum: ties go to the lower index
    labels = np.argmin(lengths, axis=0)

    cells: list[tuple[int, int]] = []
    cell_labels: list[int] = []
    start = 0
    for x in range(1, model.support_size + 1):
        if x == model.support_size or labels[x] != labels[start]:
            cells.append((start, x))
            cell_labels.append(int(labels[start]))
            start = x
    if len(set(cell_labels)) != len(cell_labels):
        raise PartitionStructureError(
            f"pointwise rule produced a non-interval assignment: {labels.tolist()}"
        )

    kept_log_q = sorted_log_q[cell_labels]
    kept_log_q = kept_log_q - logsumexp(kept_log_q)
    dropped = len(thetas) - len(cells)
    if dropped:
        logger.debug("assign_partition dropped %d empty cell(s)", dropped)
    return Codebook(
        partition=Partition(cells=tuple(cells)),
        codepoints=tuple(float(thetas[label]) for label in cell_labels),
        log_q=tuple(float(value) for value in kept_log_q),
    )
