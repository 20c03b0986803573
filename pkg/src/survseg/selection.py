"""Segment-count selection by penalized likelihood (BIC / AIC)."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import SurvivalDataset, build_prior
from .em import FitConfig, FitResult, fit
from .errors import SurvSegError

__all__ = ["model_dimension", "sweep", "SweepRow", "SweepResult"]

_DIMENSION_OFFSET = {"exponential": 1, "weibull": 2}


def model_dimension(family: str, p: int, n_segments: int, n_intervals=None) -> int:
    """Number of free parameters: (p+1)K exponential, (p+2)K Weibull,
    (p+L)K piecewise with L rates.  Undefined for the nonparametric
    baseline (raises ``ValueError``)."""
    if family in _DIMENSION_OFFSET:
        return (p + _DIMENSION_OFFSET[family]) * n_segments
    if family == "pch":
        if n_intervals is None:
            raise ValueError("piecewise dimension needs the number of intervals")
        return (p + n_intervals) * n_segments
    raise ValueError(f"model dimension undefined for family {family!r}")


@dataclass(frozen=True)
class SweepRow:
    n_segments: int
    log_lik: float | None
    bic: float | None
    aic: float | None
    converged: bool | None
    selected: bool
    error: str | None


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    fits: dict
    best: int | None

    @property
    def best_fit(self) -> FitResult | None:
        return None if self.best is None else self.fits[self.best]


def sweep(
    dataset: SurvivalDataset,
    config: FitConfig,
    k_range,
    prior_builder=None,
) -> SweepResult:
    """Fit every requested segment count and pick the smallest BIC.

    ``prior_builder(dataset, n_segments)`` defaults to the constant-0.5
    prior.  Individual fit failures (including segment counts the prior
    cannot support) are recorded per row, never fatal to the sweep; ties
    in BIC resolve to the smaller segment count.
    """
    if not config.is_parametric:
        raise ValueError(
            "BIC/AIC need a parametric family; the nonparametric baseline "
            "has no finite model dimension"
        )
    if prior_builder is None:
        prior_builder = lambda ds, k: build_prior(ds, k)

    rows = []
    fits = {}
    for k in k_range:
        cfg = replace(config, n_segments=int(k))
        try:
            prior = prior_builder(dataset, int(k))
            result = fit(dataset, prior, cfg)
        except SurvSegError as err:
            rows.append(
                SweepRow(int(k), None, None, None, None, False, str(err))
            )
            continue
        fits[int(k)] = result
        rows.append(
            SweepRow(
                int(k),
                result.log_lik,
                result.bic,
                result.aic,
                result.converged,
                False,
                None,
            )
        )

    # argmin BIC scanned in increasing K with strict improvement, so ties
    # resolve to the smaller segment count
    best = None
    best_bic = np.inf
    for row in sorted(rows, key=lambda r: r.n_segments):
        if row.bic is not None and row.bic < best_bic:
            best = row.n_segments
            best_bic = row.bic
    rows = [
        replace(row, selected=(row.n_segments == best)) if best is not None else row
        for row in rows
    ]
    return SweepResult(rows=tuple(rows), fits=fits, best=best)
