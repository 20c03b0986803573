"""EM driver: weight initialization, E/M alternation, convergence control.

Each iteration first maximizes the weighted log-likelihood (M-step), then
recomputes posterior segment weights and the observed-data log-likelihood
from the constrained-chain recursions (E-step).  For parametric baselines
the log-likelihood trace is non-decreasing up to floating-point slack;
with the kernel-smoothed nonparametric baseline that guarantee is lost,
so decreases are recorded as warnings instead of asserted away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import baselines as bl
from . import cox
from .data import SegmentationPrior, SurvivalDataset
from .errors import FitError, PriorError
from .hmm import PosteriorTables, map_breakpoints, segment_posteriors

__all__ = ["FitConfig", "FitResult", "BreakpointEstimate", "init_weights", "fit"]

FAMILIES = ("exponential", "weibull", "pch", "cox")
PARAMETRIC_FAMILIES = ("exponential", "weibull", "pch")


@dataclass(frozen=True)
class FitConfig:
    """Knobs of one EM fit. Defaults follow the recommended calibration."""

    family: str = "exponential"
    n_segments: int = 2
    init_w: float = 0.7
    max_iter: int = 500
    tol: float = 1e-8
    bandwidth: float | None = None
    cuts: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected {FAMILIES}")
        if not 0.5 < self.init_w < 1.0:
            raise ValueError(f"init_w must lie in (0.5, 1), got {self.init_w}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.n_segments < 1:
            raise ValueError(f"n_segments must be >= 1, got {self.n_segments}")
        if self.cuts is not None:
            object.__setattr__(self, "cuts", tuple(float(c) for c in self.cuts))

    @property
    def is_parametric(self) -> bool:
        return self.family in PARAMETRIC_FAMILIES


@dataclass(frozen=True)
class BreakpointEstimate:
    """MAP location of one breakpoint.

    ``position`` is 1-based: the last subject of the lower segment.  The
    ``order_key`` is the key of the first subject of the upper segment
    (e.g. the first calendar year of the new regime).
    """

    index: int
    position: int
    probability: float
    order_key: float


@dataclass(frozen=True)
class FitResult:
    theta: bl.ThetaParams
    posteriors: PosteriorTables
    log_lik: float
    bic: float | None
    aic: float | None
    map_breakpoints: tuple
    trace: np.ndarray
    converged: bool
    iterations: int
    config: FitConfig
    warnings: tuple = field(default_factory=tuple)

    @property
    def weights(self) -> np.ndarray:
        return self.posteriors.weights

    @property
    def labels(self) -> np.ndarray:
        """MAP segment per position (0-based labels)."""
        return np.argmax(self.posteriors.weights, axis=1)


def init_weights(n: int, n_segments: int, init_w: float = 0.7) -> np.ndarray:
    """Block initialization of the posterior weights.

    Positions split into ``n_segments`` contiguous blocks of near-equal
    size (remainder spread over the first blocks); inside its own block a
    position gets weight ``init_w``, elsewhere ``1 - init_w``; rows are
    normalized to sum to one.
    """
    if n < n_segments:
        raise PriorError(f"cannot split {n} positions into {n_segments} segments")
    sizes = np.full(n_segments, n // n_segments)
    sizes[: n % n_segments] += 1
    labels = np.repeat(np.arange(n_segments), sizes)
    w = np.where(labels[:, None] == np.arange(n_segments), init_w, 1.0 - init_w)
    return w / w.sum(axis=1, keepdims=True)


def _make_mstep(dataset, config):
    if config.family == "exponential":
        return lambda w: bl.mstep_exponential(dataset, w)
    if config.family == "weibull":
        return lambda w: bl.mstep_weibull(dataset, w)
    if config.family == "pch":
        cuts = config.cuts if config.cuts is not None else bl.default_cuts(dataset)
        return lambda w: bl.mstep_piecewise(dataset, w, cuts)
    bandwidth = (
        config.bandwidth
        if config.bandwidth is not None
        else float(dataset.n) ** (-1.0 / 5.0)
    )

    def mstep_smoothed(w):
        betas, steps = cox.mstep_cox(dataset, w)
        smoothed = tuple(bl.smooth_baseline(s, bandwidth) for s in steps)
        return bl.ThetaParams(smoothed, betas)

    return mstep_smoothed


def _model_dimension(config, dataset, theta):
    from .selection import model_dimension

    if not config.is_parametric:
        return None
    n_intervals = (
        len(theta.baselines[0].rates) if config.family == "pch" else None
    )
    return model_dimension(
        config.family, dataset.p, config.n_segments, n_intervals=n_intervals
    )


def fit(dataset: SurvivalDataset, prior: SegmentationPrior, config: FitConfig) -> FitResult:
    """Run the EM loop until the relative log-likelihood change drops
    below ``config.tol`` or ``config.max_iter`` is reached.

    Hitting the iteration cap returns a result with ``converged=False``;
    degenerate posteriors and M-step failures raise :class:`FitError`
    subclasses tagged with the failing iteration.
    """
    n, K = dataset.n, config.n_segments
    if prior.n != n:
        raise PriorError(f"prior covers {prior.n} positions, dataset has {n}")
    if prior.n_segments != K:
        raise PriorError(
            f"prior has {prior.n_segments} segments, config requests {K}"
        )

    mstep = _make_mstep(dataset, config)
    weights = np.ones((n, 1)) if K == 1 else init_weights(n, K, config.init_w)

    trace: list[float] = []
    warnings: list[str] = []
    converged = False
    theta = None
    tables = None
    for iteration in range(1, config.max_iter + 1):
        try:
            theta = mstep(weights)
            log_e = bl.log_emissions(dataset, theta)
            tables = segment_posteriors(log_e, prior)
        except FitError as err:
            err.iteration = iteration
            raise
        log_lik = tables.log_lik
        if trace:
            if config.family == "cox" and log_lik < trace[-1] - 1e-3:
                warnings.append(
                    f"iteration {iteration}: smoothed log-likelihood decreased "
                    f"by {trace[-1] - log_lik:.3e}"
                )
            if abs(log_lik - trace[-1]) / (1.0 + abs(log_lik)) < config.tol:
                trace.append(log_lik)
                converged = True
                break
        trace.append(log_lik)
        if K == 1:
            converged = True
            break
        weights = tables.weights

    bps = tuple(
        BreakpointEstimate(
            index=k + 1,
            position=pos,
            probability=prob,
            order_key=float(dataset.order_key[pos]),
        )
        for k, (pos, prob) in enumerate(map_breakpoints(tables))
    )
    d = _model_dimension(config, dataset, theta)
    log_lik = trace[-1]
    return FitResult(
        theta=theta,
        posteriors=tables,
        log_lik=log_lik,
        bic=None if d is None else -2.0 * log_lik + d * np.log(n),
        aic=None if d is None else -2.0 * log_lik + 2.0 * d,
        map_breakpoints=bps,
        trace=np.asarray(trace),
        converged=converged,
        iterations=len(trace),
        config=config,
        warnings=tuple(warnings),
    )
