"""Synthetic cohort generators for the four benchmark scenarios and for
arbitrary user-supplied piecewise-constant hazard tables.

Event times are drawn by inverting the segment's cumulative hazard at an
exponential deviate scaled by ``exp(-x beta)``.  Censoring is uniform on
``(0, c)`` with ``c`` calibrated by bisection on a large pilot sample so
that the expected censored fraction hits the requested target (50% by
default).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import ExponentialHazard, PiecewiseHazard, WeibullHazard
from .data import SurvivalDataset

__all__ = [
    "GompertzHazard",
    "ScenarioSpec",
    "SCENARIOS",
    "SimulationTruth",
    "simulate_scenario",
    "simulate_table",
    "calibrate_censor_upper",
    "EXAMPLE_HAZARD_TABLE",
]

PILOT_SIZE = 100_000


@dataclass(frozen=True)
class GompertzHazard:
    """Hazard ``exp(a t)``; simulation-only baseline (not a fit family)."""

    rate_coef: float

    def log_hazard(self, t):
        return self.rate_coef * np.asarray(t, float)

    def cum_hazard(self, t):
        a = self.rate_coef
        return np.expm1(a * np.asarray(t, float)) / a

    def inverse_cum_hazard(self, s):
        a = self.rate_coef
        return np.log1p(a * np.asarray(s, float)) / a


@dataclass(frozen=True)
class ScenarioSpec:
    baselines: tuple
    betas: tuple


SCENARIOS = {
    1: ScenarioSpec(
        baselines=(ExponentialHazard(1.0), ExponentialHazard(0.5), ExponentialHazard(0.7)),
        betas=(1.5, -0.5, -0.5),
    ),
    2: ScenarioSpec(
        baselines=(WeibullHazard(5.0, 1.0), WeibullHazard(2.0, 1.0), WeibullHazard(2.0, 1.0)),
        betas=(1.5, -1.0, -5.0),
    ),
    3: ScenarioSpec(
        baselines=(
            PiecewiseHazard(cuts=(1.0, 3.0), rates=(0.8, 1.2, 1.6)),
            PiecewiseHazard(cuts=(4.0, 6.0), rates=(1.2, 1.6, 2.0)),
            PiecewiseHazard(cuts=(5.0, 7.0), rates=(1.6, 2.0, 2.4)),
        ),
        betas=(1.5, -0.5, -1.5),
    ),
    4: ScenarioSpec(
        baselines=(GompertzHazard(5.0), GompertzHazard(2.0), GompertzHazard(2.0)),
        betas=(1.5, -0.5, -1.5),
    ),
}

# Synthetic age-structured incidence-style table for demos and the table
# generator's documentation.  These numbers are invented; they are NOT
# rates from any real cancer registry or published incidence study.
EXAMPLE_HAZARD_TABLE = {
    "cuts": tuple(np.arange(5.0, 80.0, 5.0)),
    "rates": tuple(
        tuple(r)
        for r in (
            0.002 * np.exp(np.linspace(0.0, 2.5, 16)),
            0.002 * np.exp(np.linspace(0.0, 2.5, 16)) * 0.55,
            0.002 * np.exp(np.linspace(0.0, 2.5, 16)) * 1.6,
        )
    ),
}


@dataclass(frozen=True)
class SimulationTruth:
    """Sidecar describing how a synthetic cohort was generated."""

    labels: np.ndarray
    baselines: tuple
    betas: np.ndarray
    censor_upper: float | None
    realized_censoring: float
    seed: int
    scenario: int | None = None


def _latent_times(rng, baselines, betas, labels, X):
    n = labels.size
    raw = rng.exponential(1.0, n)
    t = np.empty(n)
    for k, baseline in enumerate(baselines):
        mask = labels == k
        scaled = raw[mask] * np.exp(-(X[mask] @ betas[k]))
        t[mask] = baseline.inverse_cum_hazard(scaled)
    return t


def calibrate_censor_upper(latent_times, target=0.5, tol=1e-6, max_iter=200):
    """Upper bound ``c`` of a Uniform(0, c) censor matching the target
    expected censored fraction on the given pilot draws.

    ``P(censored | T) = min(T / c, 1)`` is decreasing in ``c``, so plain
    bisection converges; the bracket starts at the pilot median and is
    doubled until it encloses the target.
    """
    t = np.asarray(latent_times, float)

    def frac(c):
        return float(np.mean(np.minimum(t / c, 1.0)))

    lo = hi = max(float(np.median(t)), 1e-12)
    while frac(hi) > target:
        hi *= 2.0
    while frac(lo) < target:
        lo /= 2.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f = frac(mid)
        if abs(f - target) < tol:
            return mid
        if f > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _simulate(baselines, betas, labels, seed, scenario=None, censor_target=0.5):
    betas = np.atleast_2d(np.asarray(betas, float))
    p = betas.shape[1]
    n = labels.size
    pilot_seq, data_seq = np.random.SeedSequence(seed).spawn(2)

    c = None
    if censor_target is not None:
        pilot_rng = np.random.default_rng(pilot_seq)
        # pilot mixture mirrors the actual block proportions
        counts = np.bincount(labels, minlength=len(baselines))
        pilot_counts = np.maximum(1, counts * PILOT_SIZE // n)
        pilot_labels = np.repeat(np.arange(len(baselines)), pilot_counts)
        pilot_X = (
            pilot_rng.binomial(1, 0.5, (pilot_labels.size, 1)).astype(float)
            if p
            else np.zeros((pilot_labels.size, 0))
        )
        pilot_t = _latent_times(pilot_rng, baselines, betas, pilot_labels, pilot_X)
        c = calibrate_censor_upper(pilot_t, target=censor_target)

    rng = np.random.default_rng(data_seq)
    X = (
        rng.binomial(1, 0.5, (n, 1)).astype(float)
        if p
        else np.zeros((n, 0))
    )
    latent = _latent_times(rng, baselines, betas, labels, X)
    if c is None:
        time, event = latent, np.ones(n, bool)
    else:
        censor = rng.uniform(0.0, c, n)
        event = latent <= censor
        time = np.where(event, latent, censor)

    dataset = SurvivalDataset.from_arrays(
        time,
        event,
        entry=None,
        covariates=X,
        order_key=np.arange(1, n + 1, dtype=float),
    )
    truth = SimulationTruth(
        labels=labels.copy(),
        baselines=tuple(baselines),
        betas=betas,
        censor_upper=c,
        realized_censoring=float(1.0 - event.mean()),
        seed=seed,
        scenario=scenario,
    )
    return dataset, truth


def simulate_scenario(scenario: int, n: int = 3000, seed: int = 0, censor_target=0.5):
    """Benchmark cohort: three equal segments, one Bernoulli(0.5) covariate.

    ``n`` must be divisible by 3.  Returns ``(dataset, truth)``; the
    dataset is already sorted (order_key = 1..n matches the simulation
    order, so true breakpoints sit at positions n/3 and 2n/3).
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario}, expected 1..4")
    if n % 3:
        raise ValueError(f"n must be divisible by 3, got {n}")
    spec = SCENARIOS[scenario]
    labels = np.repeat(np.arange(3), n // 3)
    betas = np.asarray(spec.betas, float)[:, None]
    return _simulate(
        spec.baselines, betas, labels, seed, scenario=scenario, censor_target=censor_target
    )


def simulate_table(
    hazard_table,
    block_sizes,
    seed: int = 0,
    betas=None,
    censor_target=0.5,
):
    """Cohort from per-block piecewise-constant hazards.

    ``hazard_table`` maps ``{"cuts": (L-1,), "rates": (B, L)}``: one rate
    row per block, sharing the cut grid.  ``block_sizes`` gives the
    number of consecutive subjects per block.  ``betas`` (B, p) adds a
    Bernoulli(0.5) covariate effect per block; omit for no covariates.
    """
    cuts = tuple(float(c) for c in hazard_table["cuts"])
    rates = [tuple(float(r) for r in row) for row in hazard_table["rates"]]
    block_sizes = np.asarray(block_sizes, int)
    if block_sizes.size != len(rates):
        raise ValueError(
            f"{len(rates)} rate rows but {block_sizes.size} block sizes"
        )
    baselines = tuple(PiecewiseHazard(cuts=cuts, rates=r) for r in rates)
    labels = np.repeat(np.arange(block_sizes.size), block_sizes)
    if betas is None:
        betas = np.zeros((block_sizes.size, 0))
    return _simulate(baselines, betas, labels, seed, censor_target=censor_target)
