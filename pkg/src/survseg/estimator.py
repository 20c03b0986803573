"""scikit-learn style front-end for the breakpoint survival model.

The model is fit-shaped like a clustering estimator: ``fit`` consumes the
whole ordered cohort and exposes per-subject segment posteriors through
``labels_`` / ``weights_`` (in input row order), so it composes with
sklearn tooling (``get_params``, ``set_params``, ``clone``,
``fit_predict``).  There is no out-of-sample ``predict``: segment
membership is only defined for positions of the fitted sequence.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .data import SurvivalDataset, build_prior
from .em import FitConfig, fit
from .errors import DataError

__all__ = ["SurvivalBreakpointModel", "unpack_survival_y"]


def unpack_survival_y(y, entry=None):
    """Extract ``(time, event, entry)`` from the supported ``y`` formats.

    Accepts a structured array with fields ``time`` and ``event`` (and
    optionally ``entry``), a ``(time, event)`` pair of arrays, or an
    ``(n, 2)`` array with those two columns.  An explicit ``entry``
    argument overrides any entry field.
    """
    if hasattr(y, "dtype") and getattr(y.dtype, "names", None):
        names = set(y.dtype.names)
        if not {"time", "event"} <= names:
            raise DataError(
                f"structured y needs fields 'time' and 'event', got {sorted(names)}"
            )
        time = np.asarray(y["time"], float)
        event = np.asarray(y["event"])
        if entry is None and "entry" in names:
            entry = np.asarray(y["entry"], float)
        return time, event, entry
    if isinstance(y, (tuple, list)) and len(y) == 2:
        return np.asarray(y[0], float), np.asarray(y[1]), entry
    arr = np.asarray(y)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0].astype(float), arr[:, 1], entry
    raise DataError(
        "y must be a structured array with 'time'/'event' fields, a "
        "(time, event) pair, or an (n, 2) array"
    )


class SurvivalBreakpointModel(BaseEstimator):
    """Segment an ordered sequence of censored survival times.

    Parameters
    ----------
    n_segments : int
        Number of segments (breakpoints + 1).
    family : {'exponential', 'weibull', 'pch', 'cox'}
        Baseline hazard family; 'cox' is the kernel-smoothed
        nonparametric baseline.
    base_eta : float
        Prior jump probability at admissible positions.
    forbid_ties : bool
        Disallow breakpoints between subjects sharing an order key.
    init_w : float
        In-block weight of the block initialization.
    max_iter, tol : EM stopping rule (relative log-likelihood change).
    bandwidth : float, optional
        Kernel bandwidth for the nonparametric baseline (default
        ``n ** -0.2``).
    cuts : sequence of float, optional
        Piecewise-constant cut points (default: event-time quartiles).
    seed : int
        Recorded in the configuration; the fit itself is deterministic.

    Attributes (after ``fit``)
    --------------------------
    labels_ : (n,) MAP segment per input row (0-based).
    weights_ : (n, K) posterior segment probabilities per input row.
    breakpoints_ : tuple of BreakpointEstimate (positions refer to the
        order_key-sorted sequence, 1-based).
    coef_ : (K, p) per-segment regression coefficients.
    baselines_ : per-segment baseline hazard objects.
    log_lik_, bic_, aic_, n_iter_, converged_, result_, dataset_.
    """

    def __init__(
        self,
        n_segments=2,
        family="exponential",
        base_eta=0.5,
        forbid_ties=False,
        init_w=0.7,
        max_iter=500,
        tol=1e-8,
        bandwidth=None,
        cuts=None,
        seed=0,
    ):
        self.n_segments = n_segments
        self.family = family
        self.base_eta = base_eta
        self.forbid_ties = forbid_ties
        self.init_w = init_w
        self.max_iter = max_iter
        self.tol = tol
        self.bandwidth = bandwidth
        self.cuts = cuts
        self.seed = seed

    def _config(self):
        return FitConfig(
            family=self.family,
            n_segments=self.n_segments,
            init_w=self.init_w,
            max_iter=self.max_iter,
            tol=self.tol,
            bandwidth=self.bandwidth,
            cuts=None if self.cuts is None else tuple(self.cuts),
            seed=self.seed,
        )

    def fit(self, X, y, *, entry=None, order_key=None):
        """Fit the model.

        ``X`` is the (n, p) covariate matrix or None; ``y`` carries times
        and event flags (see :func:`unpack_survival_y`); ``order_key``
        defaults to the input row number.
        """
        time, event, entry = unpack_survival_y(y, entry)
        n = time.shape[0]
        if X is None:
            X = np.empty((n, 0))
        else:
            X = check_array(X, ensure_2d=True, ensure_min_features=0, dtype=float)
        key = (
            np.arange(1, n + 1, dtype=float)
            if order_key is None
            else np.asarray(order_key, float)
        )
        perm = np.argsort(key, kind="stable")
        dataset = SurvivalDataset.from_arrays(
            time[perm],
            np.asarray(event)[perm],
            entry=None if entry is None else np.asarray(entry, float)[perm],
            covariates=X[perm],
            order_key=key[perm],
        )
        prior = build_prior(
            dataset, self.n_segments, base_eta=self.base_eta, forbid_ties=self.forbid_ties
        )
        result = fit(dataset, prior, self._config())

        inverse = np.empty(n, dtype=int)
        inverse[perm] = np.arange(n)
        self.order_ = perm
        self.dataset_ = dataset
        self.result_ = result
        self.weights_ = result.weights[inverse]
        self.labels_ = result.labels[inverse]
        self.breakpoints_ = result.map_breakpoints
        self.coef_ = result.theta.betas
        self.baselines_ = result.theta.baselines
        self.log_lik_ = result.log_lik
        self.bic_ = result.bic
        self.aic_ = result.aic
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        return self

    def fit_predict(self, X, y, **fit_params):
        """Fit and return the MAP segment label of each input row."""
        return self.fit(X, y, **fit_params).labels_

    def score(self, X=None, y=None):
        """Observed-data log-likelihood of the fitted sequence.

        The arguments are accepted for API compatibility and ignored:
        the likelihood is only defined on the fitted cohort.
        """
        check_is_fitted(self, "result_")
        return self.log_lik_
