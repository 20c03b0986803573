"""Weighted Cox partial likelihood, Breslow baseline and segment M-step.

Risk sets honor left truncation: subject ``j`` is at risk at time ``t``
iff ``entry_j <= t <= time_j``.  Tied event times follow the Breslow
convention (shared risk set, additive jumps).  Posterior segment weights
multiply both event contributions and risk-set terms.

Risk-set sums are evaluated for all distinct event times at once from two
suffix cumulative sums (one over exit times, one over entry times), so a
full (value, gradient, hessian) evaluation costs O(n log n + E p^2).
"""

from __future__ import annotations

import numpy as np

from .baselines import StepCumHazard, newton_maximize
from .data import SurvivalDataset
from .errors import SegmentCollapseError

__all__ = [
    "partial_loglik_objective",
    "weighted_cox_fit",
    "breslow_cumhaz",
    "mstep_cox",
]


def _suffix_sums(values):
    """suffix[i] = values[i:].sum(), with suffix[n] = 0."""
    out = np.zeros((values.shape[0] + 1,) + values.shape[1:])
    out[:-1] = np.cumsum(values[::-1], axis=0)[::-1]
    return out


class _RiskSetSums:
    """S0/S1/S2 at every distinct weighted event time, given one beta."""

    def __init__(self, dataset, w):
        self.dataset = dataset
        self.w = w
        wd = w * dataset.event
        keep = dataset.event & (wd > 0)
        self.event_times, inverse = np.unique(dataset.time[keep], return_inverse=True)
        self.dn = np.bincount(inverse, weights=wd[keep])
        p = dataset.p
        self.x_event_sum = np.zeros((self.event_times.size, p))
        np.add.at(self.x_event_sum, inverse, wd[keep, None] * dataset.covariates[keep])
        self.order_exit = np.argsort(dataset.time, kind="stable")
        self.order_entry = np.argsort(dataset.entry, kind="stable")
        self.idx_exit = np.searchsorted(
            dataset.time[self.order_exit], self.event_times, side="left"
        )
        self.idx_entry = np.searchsorted(
            dataset.entry[self.order_entry], self.event_times, side="right"
        )

    def sums(self, beta):
        ds = self.dataset
        lin = ds.covariates @ beta
        r = self.w * np.exp(lin)
        X = ds.covariates
        p = ds.p

        def from_suffix(q):
            return (
                _suffix_sums(q[self.order_exit])[self.idx_exit]
                - _suffix_sums(q[self.order_entry])[self.idx_entry]
            )

        s0 = from_suffix(r)
        s1 = from_suffix(r[:, None] * X) if p else np.zeros((s0.size, 0))
        s2 = (
            from_suffix(r[:, None, None] * X[:, :, None] * X[:, None, :])
            if p
            else np.zeros((s0.size, 0, 0))
        )
        return lin, s0, s1, s2


def partial_loglik_objective(beta, dataset: SurvivalDataset, w, sums=None):
    """Weighted Cox partial log-likelihood with gradient and hessian."""
    rs = sums if sums is not None else _RiskSetSums(dataset, w)
    lin, s0, s1, s2 = rs.sums(np.asarray(beta, float))
    wd = rs.w * rs.dataset.event
    value = float(wd @ lin - rs.dn @ np.log(s0))
    xbar = s1 / s0[:, None]
    grad = rs.x_event_sum.sum(axis=0) - rs.dn @ xbar
    hess = -np.einsum("t,tjk->jk", rs.dn, s2 / s0[:, None, None]) + np.einsum(
        "t,tj,tk->jk", rs.dn, xbar, xbar
    )
    return value, grad, hess


def breslow_cumhaz(dataset: SurvivalDataset, w, beta) -> StepCumHazard:
    """Weighted Breslow step cumulative hazard at the given coefficients.

    With all weights one this is the classical Breslow estimator; with
    no covariates it is the weighted Nelson-Aalen estimator.
    """
    rs = _RiskSetSums(dataset, w)
    _, s0, _, _ = rs.sums(np.asarray(beta, float))
    return StepCumHazard(times=rs.event_times, jumps=rs.dn / s0)


def weighted_cox_fit(dataset: SurvivalDataset, w, tol=1e-9, max_iter=100):
    """Maximize the weighted partial likelihood; return (beta, Breslow).

    Newton-Raphson from the zero vector with step halving.  For p = 0
    the partial likelihood is empty and only the baseline is estimated.
    """
    w = np.asarray(w, float)
    rs = _RiskSetSums(dataset, w)
    if rs.event_times.size == 0:
        raise SegmentCollapseError("no weighted events in Cox fit", segment=None)
    if dataset.p:
        beta = newton_maximize(
            lambda b: partial_loglik_objective(b, dataset, w, sums=rs),
            np.zeros(dataset.p),
            tol=tol,
            max_iter=max_iter,
        )
    else:
        beta = np.zeros(0)
    _, s0, _, _ = rs.sums(beta)
    return beta, StepCumHazard(times=rs.event_times, jumps=rs.dn / s0)


def mstep_cox(dataset: SurvivalDataset, weights: np.ndarray, tol=1e-9):
    """Per-segment weighted Cox fits.

    Returns ``(betas, steps)`` where ``betas`` is (K, p) and ``steps``
    the per-segment Breslow step cumulative hazards.
    """
    n, K = weights.shape
    betas = np.zeros((K, dataset.p))
    steps = []
    for k in range(K):
        try:
            beta, step = weighted_cox_fit(dataset, weights[:, k], tol=tol)
        except SegmentCollapseError:
            raise SegmentCollapseError(
                f"segment {k + 1} has no effective events", k + 1
            )
        betas[k] = beta
        steps.append(step)
    return betas, steps
