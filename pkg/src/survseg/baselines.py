"""Baseline hazard families: emissions and weighted maximization steps.

Each family exposes ``log_hazard``, ``cum_hazard`` and (for simulation)
``inverse_cum_hazard``.  The per-segment emission log-likelihood of a
subject with follow-up ``T``, event flag ``d``, entry ``L`` and covariate
row ``x`` is

    d * (log lambda_k(T) + x @ beta_k)
        - (Lambda_k(T) - Lambda_k(L)) * exp(x @ beta_k)

i.e. exposure only accrues on ``[L, T]``.  With ``L = 0`` this reduces
exactly to the untruncated likelihood.

The M-steps maximize the posterior-weighted sum of these emissions per
segment.  Rates profile out in closed form for the exponential and
piecewise-constant families (Newton runs on the regression coefficients
only); the Weibull family is maximized by a safeguarded joint Newton in
``(log shape, log scale, beta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import SurvivalDataset
from .errors import FitError, NewtonError, SegmentCollapseError

__all__ = [
    "ExponentialHazard",
    "WeibullHazard",
    "PiecewiseHazard",
    "SmoothedHazard",
    "StepCumHazard",
    "ThetaParams",
    "log_emission",
    "log_emissions",
    "mstep_exponential",
    "mstep_weibull",
    "mstep_piecewise",
    "default_cuts",
    "newton_maximize",
]


# ---------------------------------------------------------------------------
# hazard families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentialHazard:
    """Constant hazard ``rate``."""

    rate: float

    def log_hazard(self, t):
        t = np.asarray(t, float)
        with np.errstate(divide="ignore"):
            return np.full(t.shape, np.log(self.rate))

    def cum_hazard(self, t):
        return self.rate * np.asarray(t, float)

    def inverse_cum_hazard(self, s):
        return np.asarray(s, float) / self.rate


@dataclass(frozen=True)
class WeibullHazard:
    """Hazard ``(a/b) * (t/b)**(a-1)`` with shape ``a`` and scale ``b``."""

    shape: float
    scale: float

    def log_hazard(self, t):
        t = np.asarray(t, float)
        a, b = self.shape, self.scale
        if a == 1.0:
            return np.full(t.shape, -np.log(b))
        with np.errstate(divide="ignore"):
            out = np.log(a) - np.log(b) + (a - 1.0) * (np.log(t) - np.log(b))
        return out

    def cum_hazard(self, t):
        return np.power(np.asarray(t, float) / self.scale, self.shape)

    def inverse_cum_hazard(self, s):
        return self.scale * np.power(np.asarray(s, float), 1.0 / self.shape)


@dataclass(frozen=True)
class PiecewiseHazard:
    """Piecewise-constant hazard: ``rates[l]`` on ``(cuts[l-1], cuts[l]]``.

    ``cuts`` has length L-1 and is strictly increasing; the last rate
    applies beyond the last cut.  A rate may be zero (no weighted events
    in that interval), in which case events there have -inf emission.
    """

    cuts: tuple
    rates: tuple

    def __post_init__(self):
        cuts = np.asarray(self.cuts, float)
        rates = np.asarray(self.rates, float)
        if rates.size != cuts.size + 1:
            raise ValueError("need len(rates) == len(cuts) + 1")
        if cuts.size and (np.any(np.diff(cuts) <= 0) or cuts[0] <= 0):
            raise ValueError("cuts must be strictly increasing and positive")
        object.__setattr__(self, "cuts", tuple(cuts))
        object.__setattr__(self, "rates", tuple(rates))

    def _boundaries(self):
        return np.concatenate([[0.0], np.asarray(self.cuts, float)])

    def interval_index(self, t):
        return np.searchsorted(np.asarray(self.cuts, float), np.asarray(t, float), side="left")

    def log_hazard(self, t):
        rates = np.asarray(self.rates, float)
        with np.errstate(divide="ignore"):
            return np.log(rates[self.interval_index(t)])

    def cum_hazard(self, t):
        t = np.asarray(t, float)
        rates = np.asarray(self.rates, float)
        bounds = self._boundaries()
        base = np.concatenate([[0.0], np.cumsum(rates[:-1] * np.diff(bounds))])
        idx = self.interval_index(t)
        return base[idx] + rates[idx] * (t - bounds[idx])

    def inverse_cum_hazard(self, s):
        s = np.asarray(s, float)
        rates = np.asarray(self.rates, float)
        bounds = self._boundaries()
        base = np.concatenate([[0.0], np.cumsum(rates[:-1] * np.diff(bounds))])
        idx = np.clip(np.searchsorted(base, s, side="right") - 1, 0, rates.size - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = bounds[idx] + (s - base[idx]) / rates[idx]
        return np.where(s > base[idx], out, bounds[idx])


def epanechnikov(u):
    u = np.asarray(u, float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def epanechnikov_cdf(u):
    u = np.clip(np.asarray(u, float), -1.0, 1.0)
    return 0.5 + 0.75 * (u - u**3 / 3.0)


_KERNELS = {"epanechnikov": (epanechnikov, epanechnikov_cdf)}


@dataclass(frozen=True)
class StepCumHazard:
    """Step-function cumulative hazard (Breslow / Nelson-Aalen output)."""

    times: np.ndarray
    jumps: np.ndarray

    def cum_hazard(self, t):
        idx = np.searchsorted(self.times, np.asarray(t, float), side="right")
        csum = np.concatenate([[0.0], np.cumsum(self.jumps)])
        return csum[idx]

    def total_mass(self):
        return float(np.sum(self.jumps))


@dataclass(frozen=True)
class SmoothedHazard:
    """Kernel-smoothed hazard built from a step cumulative hazard.

    hazard(t)     = sum_j K((t_j - t)/h) * jump_j / h
    cum_hazard(t) = sum_j W((t - t_j)/h) * jump_j

    with ``W`` the kernel antiderivative, so the total smoothed mass
    equals the total step mass exactly.  The hazard vanishes outside
    ``[min(t_j) - h, max(t_j) + h]``; events there get -inf emissions.
    """

    jump_times: np.ndarray
    jump_sizes: np.ndarray
    bandwidth: float
    kernel: str = "epanechnikov"

    def _sum(self, t, func, arg_sign):
        t = np.asarray(t, float)
        flat = np.atleast_1d(t).ravel()
        out = np.empty(flat.size)
        h = self.bandwidth
        for start in range(0, flat.size, 1024):
            block = flat[start : start + 1024]
            u = arg_sign * (block[:, None] - self.jump_times[None, :]) / h
            out[start : start + 1024] = func(u) @ self.jump_sizes
        return out.reshape(np.shape(t)) if t.ndim else float(out[0])

    def hazard(self, t):
        kern, _ = _KERNELS[self.kernel]
        return self._sum(t, kern, -1.0) / self.bandwidth

    def log_hazard(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.hazard(t))

    def cum_hazard(self, t):
        _, cdf = _KERNELS[self.kernel]
        return self._sum(t, cdf, 1.0)


def smooth_baseline(step: StepCumHazard, bandwidth: float, kernel: str = "epanechnikov"):
    """Kernel-smoothed (hazard, cumulative hazard) from a step estimate."""
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    if kernel not in _KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    return SmoothedHazard(
        jump_times=np.asarray(step.times, float),
        jump_sizes=np.asarray(step.jumps, float),
        bandwidth=float(bandwidth),
        kernel=kernel,
    )


# ---------------------------------------------------------------------------
# parameters and emissions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaParams:
    """Per-segment baseline hazards plus regression vectors (K, p)."""

    baselines: tuple
    betas: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "betas", np.atleast_2d(np.asarray(self.betas, float)))
        if len(self.baselines) != self.betas.shape[0]:
            raise ValueError("one beta vector per baseline required")
        kinds = {type(b) for b in self.baselines}
        if len(kinds) > 1:
            raise ValueError("all baselines must share one family")

    @property
    def n_segments(self):
        return len(self.baselines)

    @property
    def p(self):
        return self.betas.shape[1]


def log_emissions(dataset: SurvivalDataset, theta: ThetaParams) -> np.ndarray:
    """(n, K) table of per-subject, per-segment emission log-likelihoods."""
    n = dataset.n
    out = np.empty((n, theta.n_segments))
    ev = dataset.event
    for k, baseline in enumerate(theta.baselines):
        lin = dataset.covariates @ theta.betas[k]
        cum = baseline.cum_hazard(dataset.time) - baseline.cum_hazard(dataset.entry)
        col = -cum * np.exp(lin)
        col[ev] += baseline.log_hazard(dataset.time[ev]) + lin[ev]
        out[:, k] = col
    return out


def log_emission(record, segment: int, theta: ThetaParams) -> float:
    """Single-record emission log-likelihood for segment ``segment`` (0-based)."""
    baseline = theta.baselines[segment]
    lin = float(np.dot(record.covariates, theta.betas[segment]))
    cum = float(baseline.cum_hazard(record.time) - baseline.cum_hazard(record.entry))
    value = -cum * math.exp(lin)
    if record.event:
        value += float(baseline.log_hazard(np.asarray(record.time))) + lin
    return value


# ---------------------------------------------------------------------------
# Newton helper
# ---------------------------------------------------------------------------

def newton_maximize(fgh, x0, tol=1e-8, max_iter=100, max_halvings=30):
    """Safeguarded Newton ascent; returns the maximizer.

    ``fgh(x)`` must return (value, gradient, hessian).  Steps that do not
    improve the objective are halved up to ``max_halvings`` times; failure
    to improve or to converge raises :class:`NewtonError` carrying the
    last iterate and gradient norm.
    """
    x = np.asarray(x0, float).copy()
    if x.size == 0:
        return x
    f, g, H = fgh(x)
    if not np.isfinite(f):
        raise NewtonError("objective not finite at the starting point", x, np.inf)
    for _ in range(max_iter):
        gnorm = float(np.max(np.abs(g)))
        if gnorm < tol:
            return x
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -g, rcond=None)[0]
        if not np.all(np.isfinite(step)) or float(g @ step) <= 0.0:
            step = g / max(1.0, gnorm)  # fall back to gradient ascent
        alpha = 1.0
        for _ in range(max_halvings):
            xn = x + alpha * step
            fn, gn, Hn = fgh(xn)
            if np.isfinite(fn) and fn >= f - 1e-12 * (1.0 + abs(f)):
                break
            alpha *= 0.5
        else:
            raise NewtonError(
                f"no ascent after {max_halvings} halvings", x, gnorm
            )
        x, f, g, H = xn, fn, gn, Hn
    raise NewtonError(
        f"Newton did not converge in {max_iter} iterations "
        f"(gradient sup-norm {float(np.max(np.abs(g))):.3e})",
        x,
        float(np.max(np.abs(g))),
    )


# ---------------------------------------------------------------------------
# M-steps
# ---------------------------------------------------------------------------

def _weighted_events(dataset, w, segment):
    d = float(w @ dataset.event)
    if d <= 0.0:
        raise SegmentCollapseError(
            f"segment {segment + 1} has no effective events", segment + 1
        )
    return d


def exponential_profile_objective(beta, dataset, w):
    """Profiled weighted log-likelihood of the constant-hazard family.

    The rate is concentrated out; returns (value, gradient, hessian) in
    ``beta``.  Value omits additive terms constant in ``beta``.
    """
    exposure = dataset.time - dataset.entry
    X = dataset.covariates
    d_events = float(w @ dataset.event)
    lin = X @ beta
    r = w * exposure * np.exp(lin)
    s0 = r.sum()
    s1 = r @ X
    s2 = X.T @ (r[:, None] * X)
    f = float((w * dataset.event) @ lin - d_events * np.log(s0))
    xbar = s1 / s0
    g = (w * dataset.event) @ X - d_events * xbar
    H = -d_events * (s2 / s0 - np.outer(xbar, xbar))
    return f, g, H


def mstep_exponential(dataset: SurvivalDataset, weights: np.ndarray) -> ThetaParams:
    """Per-segment weighted MLE under a constant baseline hazard."""
    n, K = weights.shape
    p = dataset.p
    exposure = dataset.time - dataset.entry
    baselines, betas = [], np.zeros((K, p))
    for k in range(K):
        w = weights[:, k]
        d_events = _weighted_events(dataset, w, k)
        if float(w @ exposure) <= 0.0:
            raise SegmentCollapseError(f"segment {k + 1} has no exposure", k + 1)
        if p:
            betas[k] = newton_maximize(
                lambda b: exponential_profile_objective(b, dataset, w), np.zeros(p)
            )
        s0 = float((w * exposure * np.exp(dataset.covariates @ betas[k])).sum())
        baselines.append(ExponentialHazard(rate=d_events / s0))
    return ThetaParams(tuple(baselines), betas)


def weibull_objective(params, dataset, w):
    """Weighted Weibull log-likelihood in ``(log shape, log scale, beta)``.

    Returns (value, gradient, hessian); analytic derivatives, chained
    from the (shape, scale) parametrization.
    """
    u, v = params[0], params[1]
    beta = params[2:]
    a, b = math.exp(u), math.exp(v)
    time, entry, event = dataset.time, dataset.entry, dataset.event
    X = dataset.covariates
    # extreme trial shapes overflow (T/b)^a to inf; the resulting non-finite
    # objective makes the Newton safeguard halve the step, so silence the
    # intermediate warnings rather than guard each term
    with np.errstate(over="ignore", invalid="ignore"):
        return _weibull_fgh(a, b, beta, time, entry, event, X, w)


def _weibull_fgh(a, b, beta, time, entry, event, X, w):
    v = math.log(b)

    # log(T/b) and log(L/b) forced to 0 where the base is 0; those rows
    # only ever enter through z = (T/b)^a and zeta = (L/b)^a, both 0 there
    with np.errstate(divide="ignore"):
        lt = np.where(time > 0, np.log(np.where(time > 0, time, 1.0)), 0.0) - v
        ll = np.where(entry > 0, np.log(np.where(entry > 0, entry, 1.0)), 0.0) - v
    z = np.where(time > 0, np.exp(a * lt), 0.0)
    zeta = np.where(entry > 0, np.exp(a * ll), 0.0)
    zl = z * lt
    zl2 = z * lt * lt
    ql = zeta * ll
    ql2 = zeta * ll * ll

    lin = X @ beta
    e_lin = np.exp(lin)
    we = w * e_lin
    wd = w * event

    if np.any(event & (time <= 0)):
        raise FitError("event at time 0 is incompatible with a Weibull baseline")
    lt_ev = np.where(event, lt, 0.0)  # keeps 0-weight -inf terms out of dots

    value = float(
        wd @ (math.log(a) + (a - 1.0) * lt_ev - v + lin) - we @ (z - zeta)
    )

    d_events = wd.sum()
    g_a = float(wd @ (1.0 / a + lt_ev) - we @ (zl - ql))
    g_b = float((a / b) * (-d_events + we @ (z - zeta)))
    g_beta = (wd - we * (z - zeta)) @ X

    h_aa = float(-d_events / a**2 - we @ (zl2 - ql2))
    h_ab = float(
        (-d_events + we @ (z - zeta)) / b + (a / b) * (we @ (zl - ql))
    )
    h_bb = float((a / b**2) * (d_events - (1.0 + a) * (we @ (z - zeta))))
    h_abeta = -(we * (zl - ql)) @ X
    h_bbeta = (a / b) * ((we * (z - zeta)) @ X)
    h_bb_beta = -X.T @ ((we * (z - zeta))[:, None] * X)

    # chain rule to (u, v) = (log a, log b)
    p = beta.size
    g = np.concatenate([[a * g_a, b * g_b], g_beta])
    H = np.empty((2 + p, 2 + p))
    H[0, 0] = a * a * h_aa + a * g_a
    H[0, 1] = H[1, 0] = a * b * h_ab
    H[1, 1] = b * b * h_bb + b * g_b
    H[0, 2:] = H[2:, 0] = a * h_abeta
    H[1, 2:] = H[2:, 1] = b * h_bbeta
    H[2:, 2:] = h_bb_beta
    return value, g, H


def mstep_weibull(dataset: SurvivalDataset, weights: np.ndarray) -> ThetaParams:
    """Per-segment weighted Weibull MLE via safeguarded Newton."""
    n, K = weights.shape
    p = dataset.p
    exposure = dataset.time - dataset.entry
    baselines, betas = [], np.zeros((K, p))
    for k in range(K):
        w = weights[:, k]
        d_events = _weighted_events(dataset, w, k)
        scale0 = float(w @ exposure) / d_events
        x0 = np.concatenate([[0.0, math.log(max(scale0, 1e-12))], np.zeros(p)])
        try:
            sol = newton_maximize(
                lambda x: weibull_objective(x, dataset, w), x0
            )
        except NewtonError as err:
            err.segment = k + 1
            raise
        baselines.append(WeibullHazard(shape=math.exp(sol[0]), scale=math.exp(sol[1])))
        betas[k] = sol[2:]
    return ThetaParams(tuple(baselines), betas)


def default_cuts(dataset: SurvivalDataset, orders=(0.25, 0.5, 0.75)):
    """Cut points at the requested quantiles of the observed event times."""
    times = dataset.time[dataset.event]
    if times.size == 0:
        raise FitError("no events: cannot place piecewise-constant cuts")
    cuts = np.quantile(times, orders)
    cuts = np.unique(cuts[cuts > 0])
    return tuple(float(c) for c in cuts)


def _interval_exposure(dataset, cuts):
    """(n, L) time spent by each subject in each inter-cut interval."""
    bounds = np.concatenate([[0.0], np.asarray(cuts, float), [np.inf]])
    lo = np.maximum(dataset.entry[:, None], bounds[None, :-1])
    hi = np.minimum(dataset.time[:, None], bounds[None, 1:])
    return np.clip(hi - lo, 0.0, None)


def piecewise_profile_objective(beta, dataset, w, cuts, exposure=None):
    """Profiled weighted log-likelihood of the piecewise-constant family."""
    X = dataset.covariates
    d = _interval_exposure(dataset, cuts) if exposure is None else exposure
    L = d.shape[1]
    idx = np.searchsorted(np.asarray(cuts, float), dataset.time, side="left")
    wd = w * dataset.event
    d_l = np.bincount(idx[dataset.event], weights=wd[dataset.event], minlength=L)

    lin = X @ beta
    r = w * np.exp(lin)
    s0 = d.T @ r
    s1 = d.T @ (r[:, None] * X)
    s2 = np.einsum("il,i,ij,ik->ljk", d, r, X, X)

    active = d_l > 0
    with np.errstate(divide="ignore"):
        f = float(wd @ lin - d_l[active] @ np.log(s0[active]))
    xbar = np.zeros_like(s1)
    xbar[active] = s1[active] / s0[active, None]
    g = wd @ X - d_l @ xbar
    H = -np.einsum(
        "l,ljk->jk", d_l[active], s2[active] / s0[active, None, None]
    ) + np.einsum("l,lj,lk->jk", d_l[active], xbar[active], xbar[active])
    return f, g, H


def mstep_piecewise(dataset: SurvivalDataset, weights: np.ndarray, cuts) -> ThetaParams:
    """Per-segment weighted MLE with piecewise-constant baseline hazards.

    Rates are profiled per interval; Newton runs on beta.  An interval
    with zero weighted exposure in some segment raises
    :class:`SegmentCollapseError` naming (segment, interval).
    """
    n, K = weights.shape
    p = dataset.p
    cuts = tuple(np.asarray(cuts, float))
    exposure = _interval_exposure(dataset, cuts)
    L = exposure.shape[1]
    idx = np.searchsorted(np.asarray(cuts, float), dataset.time, side="left")
    baselines, betas = [], np.zeros((K, p))
    for k in range(K):
        w = weights[:, k]
        _weighted_events(dataset, w, k)
        w_exposure = w @ exposure
        dead = np.flatnonzero(w_exposure <= 0.0)
        if dead.size:
            raise SegmentCollapseError(
                f"segment {k + 1}, interval {dead[0] + 1} has no weighted exposure",
                k + 1,
            )
        if p:
            betas[k] = newton_maximize(
                lambda b: piecewise_profile_objective(b, dataset, w, cuts, exposure),
                np.zeros(p),
            )
        wd = w * dataset.event
        d_l = np.bincount(idx[dataset.event], weights=wd[dataset.event], minlength=L)
        a_l = exposure.T @ (w * np.exp(dataset.covariates @ betas[k]))
        baselines.append(PiecewiseHazard(cuts=cuts, rates=tuple(d_l / a_l)))
    return ThetaParams(tuple(baselines), betas)
