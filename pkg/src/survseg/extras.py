"""Bootstrap confidence intervals and weighted Kaplan-Meier curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SurvivalDataset, build_prior
from .em import FitConfig, FitResult, fit
from .errors import BootstrapError, SurvSegError

__all__ = ["bootstrap_ci", "BootstrapResult", "weighted_km", "KMCurve"]


def _flatten_theta(result: FitResult) -> dict:
    """Scalar parameter dictionary of a fit, keyed by stable names."""
    out = {}
    for k, baseline in enumerate(result.theta.baselines, start=1):
        if hasattr(baseline, "rate"):
            out[f"segment{k}.rate"] = float(baseline.rate)
        elif hasattr(baseline, "shape"):
            out[f"segment{k}.shape"] = float(baseline.shape)
            out[f"segment{k}.scale"] = float(baseline.scale)
        elif hasattr(baseline, "rates"):
            for l, r in enumerate(baseline.rates, start=1):
                out[f"segment{k}.rate{l}"] = float(r)
        # smoothed baselines have no scalar parameters
    for k in range(result.theta.n_segments):
        for j in range(result.theta.p):
            out[f"segment{k + 1}.beta{j + 1}"] = float(result.theta.betas[k, j])
    for bp in result.map_breakpoints:
        out[f"breakpoint{bp.index}.order_key"] = bp.order_key
    return out


@dataclass(frozen=True)
class BootstrapResult:
    """Percentile intervals per parameter plus replicate bookkeeping."""

    point: dict
    lower: dict
    upper: dict
    level: float
    n_replicates: int
    n_failed: int
    samples: dict

    def interval(self, name):
        return self.lower[name], self.upper[name]


def bootstrap_ci(
    dataset: SurvivalDataset,
    config: FitConfig,
    n_replicates: int = 200,
    level: float = 0.95,
    prior_builder=None,
    max_failure_rate: float = 0.2,
) -> BootstrapResult:
    """Nonparametric bootstrap of parameters and breakpoint locations.

    Subjects are resampled i.i.d. with replacement, re-sorted by their
    order keys, and refit with the same configuration (the segment count
    is held fixed).  Breakpoints are summarized on the order_key scale so
    replicates of shifting composition stay comparable.  Replicates whose
    fit fails are dropped and counted; more than ``max_failure_rate`` of
    them aborts with :class:`BootstrapError`.
    """
    if n_replicates < 2:
        raise ValueError(f"need at least 2 replicates, got {n_replicates}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if prior_builder is None:
        prior_builder = lambda ds, k: build_prior(ds, k)

    base = fit(dataset, prior_builder(dataset, config.n_segments), config)
    point = _flatten_theta(base)

    seeds = np.random.SeedSequence(config.seed).spawn(n_replicates)
    samples = {name: [] for name in point}
    n_failed = 0
    for seq in seeds:
        rng = np.random.default_rng(seq)
        idx = rng.integers(0, dataset.n, dataset.n)
        try:
            replicate = dataset.take(idx)
            res = fit(
                dataset=replicate,
                prior=prior_builder(replicate, config.n_segments),
                config=config,
            )
        except SurvSegError:
            n_failed += 1
            continue
        values = _flatten_theta(res)
        if set(values) != set(samples):
            # e.g. data-driven cut points deduplicated differently on a
            # resample; the replicate is not comparable parameter-wise
            n_failed += 1
            continue
        for name in samples:
            samples[name].append(values[name])

    if n_failed > max_failure_rate * n_replicates:
        raise BootstrapError(
            f"{n_failed}/{n_replicates} bootstrap replicates failed"
        )
    alpha = (1.0 - level) / 2.0
    lower, upper = {}, {}
    for name, vals in samples.items():
        arr = np.asarray(vals)
        lower[name] = float(np.quantile(arr, alpha))
        upper[name] = float(np.quantile(arr, 1.0 - alpha))
    return BootstrapResult(
        point=point,
        lower=lower,
        upper=upper,
        level=level,
        n_replicates=n_replicates,
        n_failed=n_failed,
        samples={k: np.asarray(v) for k, v in samples.items()},
    )


@dataclass(frozen=True)
class KMCurve:
    """Right-continuous step survival curve S(t); S = 1 before the first
    event time.  ``truncated`` marks a curve cut short by an empty
    weighted risk set."""

    times: np.ndarray
    survival: np.ndarray
    truncated: bool = False

    def survival_at(self, t):
        idx = np.searchsorted(self.times, np.asarray(t, float), side="right")
        padded = np.concatenate([[1.0], self.survival])
        return padded[idx]


def weighted_km(dataset: SurvivalDataset, weights: np.ndarray, segment: int) -> KMCurve:
    """Product-limit survival estimate with posterior-weighted counts.

    Subject ``i`` contributes ``weights[i, segment]`` to the event count
    and to every risk set containing it; risk sets honor delayed entry
    (``entry <= t <= time``).
    """
    v = np.asarray(weights)[:, segment]
    keep = dataset.event & (v > 0)
    times, inverse = np.unique(dataset.time[keep], return_inverse=True)
    if times.size == 0:
        return KMCurve(times=times, survival=np.empty(0))
    deaths = np.bincount(inverse, weights=v[keep])

    # weighted size of {j: entry_j <= t <= time_j} via two suffix sums
    def suffix(values):
        out = np.zeros(values.size + 1)
        out[:-1] = np.cumsum(values[::-1])[::-1]
        return out

    order_exit = np.argsort(dataset.time, kind="stable")
    order_entry = np.argsort(dataset.entry, kind="stable")
    at_risk = (
        suffix(v[order_exit])[
            np.searchsorted(dataset.time[order_exit], times, side="left")
        ]
        - suffix(v[order_entry])[
            np.searchsorted(dataset.entry[order_entry], times, side="right")
        ]
    )

    truncated = False
    bad = np.flatnonzero(at_risk <= 0.0)
    if bad.size:
        truncated = True
        times, deaths, at_risk = (
            times[: bad[0]],
            deaths[: bad[0]],
            at_risk[: bad[0]],
        )
    surv = np.cumprod(1.0 - deaths / at_risk)
    return KMCurve(times=times, survival=surv, truncated=truncated)
