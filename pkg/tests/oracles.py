"""Independent brute-force oracles used by the test suite.

Everything here is deliberately naive: exhaustive enumeration over
segmentations, O(n^2) risk-set scans, numerical quadrature.  None of it
shares code with the library implementations it checks.
"""

from itertools import combinations

import numpy as np
from scipy.special import logsumexp


def enumerate_segmentations(n, n_segments):
    """All label sequences r (0-based) with r[0]=0, r[-1]=K-1, +1 jumps."""
    paths = []
    for jumps in combinations(range(1, n), n_segments - 1):
        r = np.zeros(n, dtype=int)
        for pos in jumps:
            r[pos:] += 1
        paths.append((r, jumps))
    return paths


def brute_force_posteriors(log_e, eta):
    """Exhaustive-enumeration weights, breakpoint marginals and log-lik.

    Parameters mirror the library: ``log_e`` is (n, K), ``eta[i, k]`` the
    probability of the k -> k+1 jump between positions i-1 and i.
    Returns a dict with keys ``weights``, ``bp_marginal``, ``log_lik``,
    ``log_joint`` (log P(data, R_n = K-1)), ``log_null``.
    """
    log_e = np.asarray(log_e, dtype=float)
    eta = np.asarray(eta, dtype=float)
    n, K = log_e.shape
    with np.errstate(divide="ignore"):
        log_eta = np.log(eta)
        log_1meta = np.log1p(-eta)

    paths = enumerate_segmentations(n, K)
    log_joint_terms = []
    log_prior_terms = []
    for r, jumps in paths:
        lp = 0.0
        for i in range(1, n):
            lp += log_eta[i, r[i - 1]] if r[i] != r[i - 1] else log_1meta[i, r[i]]
        log_prior_terms.append(lp)
        log_joint_terms.append(lp + log_e[np.arange(n), r].sum())
    log_joint_terms = np.array(log_joint_terms)
    log_prior_terms = np.array(log_prior_terms)
    log_joint = logsumexp(log_joint_terms)
    log_null = logsumexp(log_prior_terms)

    weights = np.zeros((n, K))
    for (r, _), lt in zip(paths, log_joint_terms):
        weights[np.arange(n), r] += np.exp(lt - log_joint)

    bp = np.zeros((K - 1, n - 1))
    for (r, jumps), lt in zip(paths, log_joint_terms):
        for k, pos in enumerate(jumps):
            bp[k, pos - 1] += np.exp(lt - log_joint)

    return {
        "weights": weights,
        "bp_marginal": bp,
        "log_lik": float(log_joint - log_null),
        "log_joint": float(log_joint),
        "log_null": float(log_null),
    }


def naive_cox(time, event, entry, X, weights=None, tol=1e-11, max_iter=200):
    """Unweighted-style Newton solver for the Cox partial likelihood.

    Direct O(n^2) risk-set scans, Breslow tie handling, at-risk indicator
    ``entry <= t <= time``.  Optional case weights multiply both event
    contributions and risk-set terms.  Returns (beta, jump_times, jumps).
    """
    time = np.asarray(time, float)
    event = np.asarray(event, bool)
    entry = np.asarray(entry, float)
    X = np.asarray(X, float)
    n, p = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, float)

    event_times = np.unique(time[event & (w > 0)])
    beta = np.zeros(p)
    for _ in range(max_iter):
        grad = np.zeros(p)
        hess = np.zeros((p, p))
        risk_score = w * np.exp(X @ beta)
        for t in event_times:
            at_risk = (entry <= t) & (t <= time)
            s0 = risk_score[at_risk].sum()
            s1 = risk_score[at_risk] @ X[at_risk]
            s2 = (risk_score[at_risk, None] * X[at_risk]).T @ X[at_risk]
            dying = (time == t) & event
            dn = w[dying].sum()
            grad += w[dying] @ X[dying] - dn * s1 / s0
            xbar = s1 / s0
            hess -= dn * (s2 / s0 - np.outer(xbar, xbar))
        if np.max(np.abs(grad)) < tol:
            break
        beta = beta - np.linalg.solve(hess, grad)

    risk_score = w * np.exp(X @ beta)
    jumps = []
    for t in event_times:
        at_risk = (entry <= t) & (t <= time)
        dying = (time == t) & event
        jumps.append(w[dying].sum() / risk_score[at_risk].sum())
    return beta, event_times, np.asarray(jumps)


def naive_km(time, event, entry, weights=None):
    """Weighted product-limit estimator via direct scans."""
    time = np.asarray(time, float)
    event = np.asarray(event, bool)
    entry = np.asarray(entry, float)
    n = len(time)
    w = np.ones(n) if weights is None else np.asarray(weights, float)
    ts = np.unique(time[event & (w > 0)])
    surv = []
    s = 1.0
    for t in ts:
        at_risk = (entry <= t) & (t <= time)
        y = w[at_risk].sum()
        d = w[(time == t) & event].sum()
        s *= 1.0 - d / y
        surv.append(s)
    return ts, np.asarray(surv)


def central_difference(f, x, step=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, float)
    g = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        g[j] = (f(x + e) - f(x - e)) / (2 * step)
    return g
