from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Literal, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidArgumentError

CriterionKind = Literal["ordinary", "entropic", "worst_case", "regret_entropic"]

NORMALIZATION_TOL = 1e-10


def _frozen_array(values: object) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Model:
    """Finite-support canonical exponential family.

    ``log p_n(x|theta) = log_h(x) + eta(theta) * T(x) - n * A(eta(theta))`` with
    ``theta`` the mean parameter, so that ``mean_map(eta(theta)) == theta`` and
    ``E[T] = n * theta``.
    """

    family: str
    n_trials: int
    log_h: np.ndarray = field(compare=False, repr=False)
    t_stat: np.ndarray = field(compare=False, repr=False)
    log_partition: Callable[[np.ndarray | float], np.ndarray | float] = field(
        compare=False, repr=False
    )
    mean_map: Callable[[np.ndarray | float], np.ndarray | float] = field(
        compare=False, repr=False
    )
    natural_param: Callable[[np.ndarray | float], np.ndarray | float] = field(
        compare=False, repr=False
    )
    variance_map: Callable[[np.ndarray | float], np.ndarray | float] = field(
        compare=False, repr=False
    )
    log_density: Callable[[float], np.ndarray] = field(compare=False, repr=False)
    param_bounds: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise InvalidArgumentError(f"n_trials must be >= 1, got {self.n_trials}")
        log_h = _frozen_array(self.log_h)
        t_stat = _frozen_array(self.t_stat)
        if log_h.ndim != 1 or log_h.shape != t_stat.shape or log_h.size == 0:
            raise InvalidArgumentError("log_h and t_stat must be equal-length 1-D arrays")
        object.__setattr__(self, "log_h", log_h)
        object.__setattr__(self, "t_stat", t_stat)

    @property
    def support_size(self) -> int:
        return int(self.log_h.shape[0])

    def contains(self, theta: float) -> bool:
        low, high = self.param_bounds
        return low <= theta <= high

    def log_likelihood(self, theta: float) -> np.ndarray:
        """Pointwise ``log p_n(x|theta)`` over the support; ``-inf`` where x is impossible."""
        if not self.contains(theta):
            raise InvalidArgumentError(
                f"theta={theta!r} outside parameter bounds {self.param_bounds}"
            )
        return self.log_density(float(theta))

    def natural_log_likelihood(self, nu: float) -> np.ndarray:
        return self.log_h + nu * self.t_stat - self.n_trials * self.log_partition(nu)

    def ml_estimate(self, x: int) -> float:
        return float(self.t_stat[x]) / self.n_trials

    @cached_property
    def ml_log_likelihood(self) -> np.ndarray:
        """``log p_n(x|theta_hat(x))`` for every x (oracle ML codelength, negated)."""
        values = np.array(
            [self.log_density(self.ml_estimate(x))[x] for x in range(self.support_size)]
        )
        values.setflags(write=False)
        return values


@dataclass(frozen=True)
class PriorPredictive:
    log_r: np.ndarray = field(compare=False, repr=False)
    prior_params: Optional[tuple[float, float]] = None
    label: str = "custom"

    def __post_init__(self) -> None:
        log_r = _frozen_array(self.log_r)
        if log_r.ndim != 1 or log_r.size == 0:
            raise InvalidArgumentError("log_r must be a non-empty 1-D array")
        if not np.all(np.isfinite(log_r)):
            raise InvalidArgumentError("prior predictive must have full support")
        total = float(np.exp(logsumexp(log_r)))
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise InvalidArgumentError(f"prior predictive sums to {total!r}, not 1")
        object.__setattr__(self, "log_r", log_r)

    @classmethod
    def from_probabilities(
        cls, probabilities: object, label: str = "custom"
    ) -> PriorPredictive:
        probs = np.asarray(probabilities, dtype=float)
        with np.errstate(divide="ignore"):
            return cls(log_r=np.log(probs), prior_params=None, label=label)

    @property
    def support_size(self) -> int:
        return int(self.log_r.shape[0])

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_r)


@dataclass(frozen=True)
class Partition:
    cells: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        cells = tuple((int(lo), int(hi)) for lo, hi in self.cells)
        if not cells:
            raise InvalidArgumentError("a partition needs at least one cell")
        expected_lo = 0
        for lo, hi in cells:
            if lo != expected_lo or hi <= lo:
                raise InvalidArgumentError(
                    f"cells must be nonempty, sorted and contiguous from 0: {cells}"
                )
            expected_lo = hi
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_boundaries(cls, boundaries: list[int], support_size: int) -> Partition:
        edges = [0, *boundaries, support_size]
        return cls(cells=tuple(zip(edges[:-1], edges[1:])))

    @property
    def k(self) -> int:
        return len(self.cells)

    @property
    def support_size(self) -> int:
        return self.cells[-1][1]

    @property
    def boundaries(self) -> tuple[int, ...]:
        return tuple(lo for lo, _ in self.cells[1:])


@dataclass(frozen=True)
class Codebook:
    partition: Partition
    codepoints: tuple[float, ...]
    log_q: tuple[float, ...]

    def __post_init__(self) -> None:
        codepoints = tuple(float(theta) for theta in self.codepoints)
        log_q = tuple(float(value) for value in self.log_q)
        if len(codepoints) != self.partition.k or len(log_q) != self.partition.k:
            raise InvalidArgumentError(
                "one codepoint and one assertion probability per cell required"
            )
        object.__setattr__(self, "codepoints", codepoints)
        object.__setattr__(self, "log_q", log_q)

    @property
    def k(self) -> int:
        return self.partition.k

    @property
    def q(self) -> np.ndarray:
        return np.exp(np.array(self.log_q))


@dataclass(frozen=True)
class CriterionSpec:
    kind: CriterionKind
    tau: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind in ("entropic", "regret_entropic"):
            if self.tau is None or not math.isfinite(self.tau) or self.tau <= 0:
                raise InvalidArgumentError(
                    f"{self.kind} criterion needs a finite tau > 0, got {self.tau!r}"
                )
        elif self.kind in ("ordinary", "worst_case"):
            if self.tau is not None:
                raise InvalidArgumentError(f"{self.kind} criterion takes no tau")
        else:
            raise InvalidArgumentError(f"unknown criterion kind {self.kind!r}")

    @classmethod
    def ordinary(cls) -> CriterionSpec:
        return cls("ordinary")

    @classmethod
    def entropic(cls, tau: float) -> CriterionSpec:
        return cls("entropic", float(tau))

    @classmethod
    def worst_case(cls) -> CriterionSpec:
        return cls("worst_case")

    @classmethod
    def regret_entropic(cls, tau: float) -> CriterionSpec:
        return cls("regret_entropic", float(tau))

    @property
    def label(self) -> str:
        if self.tau is None:
            return self.kind
        return f"{self.kind}(tau={self.tau:g})"


@dataclass(frozen=True)
class SolverConfig:
    codepoint_tol: float = 1e-10
    max_fixed_point_iters: int = 200
    damping: float = 1.0
    k_max: Optional[int] = None
    max_outer_iters: int = 100
    objective_tol: float = 1e-12
    minimax_grid_points: int = 201

    def __post_init__(self) -> None:
        if self.codepoint_tol <= 0 or self.objective_tol <= 0:
            raise InvalidArgumentError("tolerances must be positive")
        if not 0 < self.damping <= 1:
            raise InvalidArgumentError(f"damping must lie in (0, 1], got {self.damping}")
        if self.k_max is not None and self.k_max < 1:
            raise InvalidArgumentError(f"k_max must be >= 1, got {self.k_max}")
        if self.max_fixed_point_iters < 1 or self.max_outer_iters < 1:
            raise InvalidArgumentError("iteration caps must be >= 1")
        if self.minimax_grid_points < 3:
            raise InvalidArgumentError("minimax_grid_points must be >= 3")

    def resolved_k_max(self, support_size: int) -> int:
        if self.k_max is None:
            return support_size
        if self.k_max > support_size:
            raise InvalidArgumentError(
                f"k_max={self.k_max} exceeds support size {support_size}"
            )
        return self.k_max


@dataclass(frozen=True)
class TiltedMeasure:
    log_s: np.ndarray = field(compare=False, repr=False)
    reference: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "log_s", _frozen_array(self.log_s))

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_s)


@dataclass(frozen=True)
class RegretProfile:
    log_Q: np.ndarray = field(compare=False, repr=False)
    regret: np.ndarray = field(compare=False, repr=False)
    sup_regret: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "log_Q", _frozen_array(self.log_Q))
        object.__setattr__(self, "regret", _frozen_array(self.regret))

    @property
    def spread(self) -> float:
        return float(np.max(self.regret) - np.min(self.regret))


@dataclass(frozen=True)
class SegmentationResult:
    codebook: Codebook
    objective: float
    tie_notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class CodebookFit:
    codebook: Codebook
    objective: float
    spec: CriterionSpec
    converged: bool
    trace: tuple[float, ...] = ()
    tie_notes: tuple[str, ...] = ()

    @property
    def k(self) -> int:
        return self.codebook.k


@dataclass(frozen=True)
class CellRecord:
    lo: int
    hi: int
    q: float
    theta: float


@dataclass(frozen=True)
class PointRecord:
    x: int
    lam: float
    lam_ml: float
    neg_log_r: float
    regret: float


@dataclass
class CodebookReport:
    family: str
    n_trials: int
    prior_a: Optional[float]
    prior_b: Optional[float]
    criterion: str
    tau: Optional[float]
    k: int
    cells: list[CellRecord]
    objective_nats: float
    objective_bits: float
    converged: bool
    sup_regret: float
    log_shtarkov: float
    tie_notes: list[str] = field(default_factory=list)
    points: list[PointRecord] = field(default_factory=list)


@dataclass(frozen=True)
class TauSweepRecord:
    tau: float
    objective: float
    ordinary: float
    worst_case: float
    renyi_bound: float
    k: int


@dataclass
class FigureComparison:
    """Fitted codebooks of several criteria on one model and prior."""

    model: Model
    rpred: PriorPredictive
    fits: dict[str, CodebookFit] = field(default_factory=dict)


@dataclass(frozen=True)
class RegimeRecord:
    n: int
    tau: float
    entropic: float
    mean: float
    sup: float
    gap_to_mean: float
    gap_to_sup: float
    variance: float
    neg_log_min_r: float


@dataclass
class RegimeSweep:
    ns: list[int]
    schedule: str
    parameter: float
    records: list[RegimeRecord] = field(default_factory=list)


@dataclass(frozen=True)
class InvariantResult:
    name: str
    passed: bool
    magnitude: float
    tolerance: float
    detail: str = ""


@dataclass
class InvariantReport:
    seed: int
    sizes: list[int]
    results: list[InvariantResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    @property
    def failures(self) -> list[InvariantResult]:
        return [result for result in self.results if not result.passed]
