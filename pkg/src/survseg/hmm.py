"""Forward/backward recursions for the constrained segmentation chain.

The latent segment sequence is a Markov chain over ``{0, ..., K-1}``
(0-based) that starts in segment 0, moves only by +1 steps with
position-dependent probabilities ``eta[i, k]``, and is constrained to end
in segment ``K - 1``.  Given per-position, per-segment emission
log-likelihoods this module computes, all in log space,

* the forward table ``F[i, k] = P(data[0:i+1], R_i = k)``,
* the backward table ``B[i, k] = P(data[i+1:], R_{n-1} = K-1 | R_i = k)``,
* posterior segment weights, posterior breakpoint marginals, and the
  observed-data log-likelihood (ratio of the data recursion to the
  emission-free null recursion).

The recursions run in log space because the probability-space updates
underflow for sequences of a few thousand positions.  Two implementations
are provided: a per-position loop that tolerates ``-inf`` emissions and
``eta == 1``, and a fast path that vectorizes each segment level as a
first-order linear recurrence via ``np.logaddexp.accumulate``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data import SegmentationPrior
from .errors import DegeneratePosteriorError, FitError

__all__ = [
    "PosteriorTables",
    "forward",
    "backward",
    "null_recursions",
    "posteriors",
    "map_breakpoints",
]

NEG_INF = -np.inf


@dataclass(frozen=True)
class PosteriorTables:
    """Log-domain recursion tables and the posteriors derived from them.

    ``weights[i, k]`` is the posterior probability that position ``i``
    belongs to segment ``k`` (rows sum to 1).  ``bp_marginal[k, i]`` is
    the posterior probability that the change from segment ``k`` to
    ``k + 1`` happens between positions ``i`` and ``i + 1`` (each row
    sums to 1).  Positions and segments are 0-based here; reporting
    helpers convert to the 1-based convention used in outputs.
    """

    log_forward: np.ndarray
    log_backward: np.ndarray
    weights: np.ndarray
    bp_marginal: np.ndarray
    log_lik: float


def _check_shapes(log_emissions, prior):
    log_e = np.asarray(log_emissions, dtype=float)
    if log_e.ndim != 2:
        raise ValueError(f"log emissions must be 2-D, got ndim={log_e.ndim}")
    if log_e.shape != prior.eta.shape:
        raise ValueError(
            f"emissions shape {log_e.shape} != prior shape {prior.eta.shape}"
        )
    if np.any(np.isnan(log_e)) or np.any(log_e == np.inf):
        raise ValueError("log emissions must be finite or -inf")
    return log_e


def _use_fast_path(log_e, prior):
    return np.all(np.isfinite(log_e)) and np.all(prior.eta < 1.0)


def _forward_loop(log_e, log_eta, log_1meta):
    n, K = log_e.shape
    log_f = np.full((n, K), NEG_INF)
    log_f[0, 0] = log_e[0, 0]
    for i in range(1, n):
        stay = log_f[i - 1] + log_1meta[i]
        jump = np.full(K, NEG_INF)
        jump[1:] = log_f[i - 1, :-1] + log_eta[i, :-1]
        log_f[i] = np.logaddexp(stay, jump) + log_e[i]
    return log_f


def _forward_fast(log_e, log_eta, log_1meta):
    # Level k solves F_i = a_i F_{i-1} + b_i with a_i the stay factor and
    # b_i the (known) inflow from level k-1:
    #   log F_i = A_i + logsumexp_{j<=i}(t_j - A_j),  A_i = sum(log a).
    n, K = log_e.shape
    log_f = np.empty((n, K))
    for k in range(K):
        A = np.empty(n)
        A[0] = 0.0
        np.cumsum(log_1meta[1:, k] + log_e[1:, k], out=A[1:])
        terms = np.full(n, NEG_INF)
        terms[0] = log_e[0, 0] if k == 0 else NEG_INF
        if k > 0:
            terms[1:] = log_f[:-1, k - 1] + log_eta[1:, k - 1] + log_e[1:, k] - A[1:]
        log_f[:, k] = A + np.logaddexp.accumulate(terms)
    return log_f


def _backward_loop(log_e, log_eta, log_1meta):
    n, K = log_e.shape
    log_b = np.full((n, K), NEG_INF)
    log_b[n - 1, K - 1] = 0.0
    for i in range(n - 2, -1, -1):
        stay = log_1meta[i + 1] + log_e[i + 1] + log_b[i + 1]
        jump = np.full(K, NEG_INF)
        jump[:-1] = log_eta[i + 1, :-1] + log_e[i + 1, 1:] + log_b[i + 1, 1:]
        log_b[i] = np.logaddexp(stay, jump)
    return log_b


def _backward_fast(log_e, log_eta, log_1meta):
    # Same linear-recurrence trick as the forward pass, run on the
    # time-reversed sequence, levels processed from the top down.
    n, K = log_e.shape
    log_b = np.empty((n, K))
    for k in range(K - 1, -1, -1):
        stay = (log_1meta[1:, k] + log_e[1:, k])[::-1]
        A = np.empty(n)
        A[0] = 0.0
        np.cumsum(stay, out=A[1:])
        terms = np.full(n, NEG_INF)
        if k == K - 1:
            terms[0] = 0.0
        else:
            inflow = log_eta[1:, k] + log_e[1:, k + 1] + log_b[1:, k + 1]
            terms[1:] = inflow[::-1] - A[1:]
        log_b[:, k] = (A + np.logaddexp.accumulate(terms))[::-1]
    return log_b


def forward(log_emissions, prior: SegmentationPrior) -> np.ndarray:
    """Forward table ``log F[i, k]``; start constrained to segment 0."""
    log_e = _check_shapes(log_emissions, prior)
    if _use_fast_path(log_e, prior):
        return _forward_fast(log_e, prior.log_eta, prior.log_1meta)
    return _forward_loop(log_e, prior.log_eta, prior.log_1meta)


def backward(log_emissions, prior: SegmentationPrior) -> np.ndarray:
    """Backward table ``log B[i, k]``; end constrained to the last segment."""
    log_e = _check_shapes(log_emissions, prior)
    if _use_fast_path(log_e, prior):
        return _backward_fast(log_e, prior.log_eta, prior.log_1meta)
    return _backward_loop(log_e, prior.log_eta, prior.log_1meta)


def null_recursions(prior: SegmentationPrior):
    """Emission-free tables ``(log F0, log B0)``, cached on the prior.

    These depend only on the prior, so one evaluation serves every EM
    iteration.  With a constant jump probability the terminal normalizer
    ``logsumexp(log F0[-1] + log B0[-1])`` reduces to
    ``(n-K) log(1-eta) + (K-1) log(eta) + log C(n-1, K-1)``.
    """
    if prior._null_cache is None:
        zeros = np.zeros_like(prior.eta)
        prior._null_cache = (forward(zeros, prior), backward(zeros, prior))
    return prior._null_cache


def posteriors(log_forward, log_backward, log_emissions, prior) -> PosteriorTables:
    """Posterior weights, breakpoint marginals and the log-likelihood.

    Raises
    ------
    DegeneratePosteriorError
        If every segment is impossible at some position (the 1-based
        position is reported), or a breakpoint has no admissible location.
    """
    log_e = _check_shapes(log_emissions, prior)
    n, K = log_e.shape
    log_fb = log_forward + log_backward
    with np.errstate(invalid="ignore"):
        row_norm = logsumexp(log_fb, axis=1)
    bad = np.flatnonzero(~np.isfinite(row_norm))
    if bad.size:
        raise DegeneratePosteriorError(position=int(bad[0]) + 1)
    weights = np.exp(log_fb - row_norm[:, None])

    if K > 1:
        log_bp = (
            log_forward[:-1, :-1]
            + prior.log_eta[1:, :-1]
            + log_e[1:, 1:]
            + log_backward[1:, 1:]
        ).T
        bp_norm = logsumexp(log_bp, axis=1)
        bad = np.flatnonzero(~np.isfinite(bp_norm))
        if bad.size:
            raise FitError(
                f"breakpoint {int(bad[0]) + 1} has no admissible location"
            )
        bp_marginal = np.exp(log_bp - bp_norm[:, None])
    else:
        bp_marginal = np.empty((0, n - 1))

    log_f0, log_b0 = null_recursions(prior)
    log_lik = float(
        logsumexp(log_fb[-1]) - logsumexp(log_f0[-1] + log_b0[-1])
    )
    return PosteriorTables(
        log_forward=log_forward,
        log_backward=log_backward,
        weights=weights,
        bp_marginal=bp_marginal,
        log_lik=log_lik,
    )


def segment_posteriors(log_emissions, prior) -> PosteriorTables:
    """Convenience wrapper running both recursions and :func:`posteriors`."""
    log_f = forward(log_emissions, prior)
    log_b = backward(log_emissions, prior)
    return posteriors(log_f, log_b, log_emissions, prior)


def map_breakpoints(tables: PosteriorTables):
    """Per-breakpoint MAP position and its posterior probability.

    Positions are reported 1-based: position ``i`` means the change
    happens between subjects ``i`` and ``i + 1``.  Ties resolve to the
    smallest position.
    """
    out = []
    for row in tables.bp_marginal:
        pos = int(np.argmax(row))
        out.append((pos + 1, float(row[pos])))
    return out
