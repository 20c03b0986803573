"""Survival dataset container, CSV ingestion and segmentation priors.

A dataset is an ordered sequence of possibly right-censored, possibly
left-truncated survival times.  The ordering covariate (``order_key``)
defines the axis along which breakpoints are searched; rows are stored
sorted by it (stable, so ties keep their input order).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, PriorError

__all__ = [
    "SurvivalRecord",
    "SurvivalDataset",
    "SegmentationPrior",
    "ColumnSchema",
    "load_dataset",
    "build_prior",
]


@dataclass(frozen=True)
class SurvivalRecord:
    """One subject: follow-up end, event flag, entry time and covariates."""

    time: float
    event: bool
    entry: float = 0.0
    covariates: np.ndarray = field(default_factory=lambda: np.empty(0))
    order_key: float = 0.0


def _as_float_array(values, name, n=None):
    arr = np.asarray(values, dtype=float)
    if n is not None and arr.shape[0] != n:
        raise DataError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


class SurvivalDataset:
    """Immutable, order_key-sorted collection of survival records.

    Attributes
    ----------
    time, event, entry, order_key : ndarray, shape (n,)
        Follow-up end, event indicator, left-truncation time, ordering key.
    covariates : ndarray, shape (n, p)
    n_reordered : int
        How many input rows changed position during sorting.
    """

    def __init__(self, time, event, entry, covariates, order_key, n_reordered=0):
        self.time = time
        self.event = event
        self.entry = entry
        self.covariates = covariates
        self.order_key = order_key
        self.n_reordered = n_reordered
        for arr in (self.time, self.event, self.entry, self.covariates, self.order_key):
            arr.setflags(write=False)

    @classmethod
    def from_arrays(cls, time, event, entry=None, covariates=None, order_key=None):
        """Validate, stable-sort by ``order_key`` and build a dataset.

        Defaults: ``entry`` is 0 for every row, ``order_key`` is the
        1-based row number.  Raises :class:`DataError` naming the first
        offending input row on any invariant violation.
        """
        time = _as_float_array(time, "time")
        n = time.shape[0]
        if n < 2:
            raise DataError(f"need at least 2 records, got {n}")
        event = np.asarray(event)
        if event.shape != (n,):
            raise DataError(f"event has shape {event.shape}, expected ({n},)")
        if event.dtype != bool:
            vals = np.unique(event)
            if not np.all(np.isin(vals, [0, 1])):
                raise DataError(f"event values must be 0/1, got {vals[:5]}")
            event = event.astype(bool)
        entry = (
            np.zeros(n) if entry is None else _as_float_array(entry, "entry", n)
        )
        if covariates is None:
            covariates = np.empty((n, 0))
        else:
            covariates = np.asarray(covariates, dtype=float)
            if covariates.ndim == 1:
                covariates = covariates[:, None]
            if covariates.shape[0] != n:
                raise DataError(
                    f"covariates have {covariates.shape[0]} rows, expected {n}"
                )
        order_key = (
            np.arange(1, n + 1, dtype=float)
            if order_key is None
            else _as_float_array(order_key, "order_key", n)
        )

        for name, arr in (("time", time), ("entry", entry), ("order_key", order_key)):
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise DataError(f"non-finite {name} at row {bad[0]}")
        bad = np.flatnonzero(~np.isfinite(covariates).all(axis=1))
        if bad.size:
            raise DataError(f"non-finite covariate at row {bad[0]}")
        bad = np.flatnonzero(time < 0)
        if bad.size:
            raise DataError(f"negative time at row {bad[0]}")
        bad = np.flatnonzero(entry < 0)
        if bad.size:
            raise DataError(f"negative entry at row {bad[0]}")
        bad = np.flatnonzero(entry > time)
        if bad.size:
            i = bad[0]
            raise DataError(f"entry > time at row {i} ({entry[i]} > {time[i]})")

        perm = np.argsort(order_key, kind="stable")
        n_reordered = int(np.sum(perm != np.arange(n)))
        return cls(
            time[perm].copy(),
            event[perm].copy(),
            entry[perm].copy(),
            covariates[perm].copy(),
            order_key[perm].copy(),
            n_reordered=n_reordered,
        )

    @property
    def n(self) -> int:
        return self.time.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    @property
    def has_truncation(self) -> bool:
        return bool(np.any(self.entry > 0))

    def __len__(self):
        return self.n

    def record(self, i) -> SurvivalRecord:
        """Record at sorted position ``i`` (0-based)."""
        return SurvivalRecord(
            time=float(self.time[i]),
            event=bool(self.event[i]),
            entry=float(self.entry[i]),
            covariates=self.covariates[i],
            order_key=float(self.order_key[i]),
        )

    @property
    def records(self):
        return [self.record(i) for i in range(self.n)]

    def take(self, indices) -> "SurvivalDataset":
        """New dataset from (possibly repeated) row indices; re-sorts."""
        idx = np.asarray(indices)
        return SurvivalDataset.from_arrays(
            self.time[idx],
            self.event[idx],
            self.entry[idx],
            self.covariates[idx],
            self.order_key[idx],
        )


@dataclass(frozen=True)
class ColumnSchema:
    """Column-name mapping for tabular input.

    ``entry`` and ``order_key`` are optional; when absent, entry defaults
    to 0 and order_key to the 1-based row number.
    """

    time: str = "time"
    event: str = "event"
    covariates: tuple[str, ...] = ()
    entry: str | None = None
    order_key: str | None = None


def _parse_float(text, column, row):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise DataError(f"row {row}: cannot parse {column}={text!r} as a number")
    if not np.isfinite(value):
        raise DataError(f"row {row}: non-finite {column}={text!r}")
    return value


def load_dataset(source, schema: ColumnSchema | None = None) -> SurvivalDataset:
    """Read a CSV stream (path or file-like) into a validated dataset.

    The file must carry a header row.  Mandatory columns are ``time`` and
    ``event`` (values 0/1); covariate columns are taken from the schema.
    Rows violating ``entry <= time`` or containing non-finite values raise
    :class:`DataError` with the 1-based data row index.
    """
    schema = schema or ColumnSchema()
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_dataset(fh, schema)
    if isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        reader = csv.DictReader(source)
    else:
        raise DataError(f"unsupported source {type(source).__name__}")

    header = reader.fieldnames or []
    required = [schema.time, schema.event, *schema.covariates]
    if schema.entry is not None:
        required.append(schema.entry)
    if schema.order_key is not None:
        required.append(schema.order_key)
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"missing column(s): {', '.join(missing)}")

    time, event, entry, order_key, covs = [], [], [], [], []
    for row_idx, row in enumerate(reader, start=1):
        time.append(_parse_float(row[schema.time], schema.time, row_idx))
        ev = row[schema.event].strip()
        if ev not in ("0", "1"):
            raise DataError(f"row {row_idx}: event must be 0 or 1, got {ev!r}")
        event.append(ev == "1")
        if schema.entry is not None:
            entry.append(_parse_float(row[schema.entry], schema.entry, row_idx))
        if schema.order_key is not None:
            order_key.append(
                _parse_float(row[schema.order_key], schema.order_key, row_idx)
            )
        covs.append(
            [_parse_float(row[c], c, row_idx) for c in schema.covariates]
        )

    n = len(time)
    if n == 0:
        raise DataError("empty input")
    return SurvivalDataset.from_arrays(
        time,
        np.asarray(event, dtype=bool),
        entry=np.asarray(entry) if entry else None,
        covariates=np.asarray(covs).reshape(n, len(schema.covariates)),
        order_key=np.asarray(order_key) if order_key else None,
    )


class SegmentationPrior:
    """Per-position jump probabilities of the constrained segment chain.

    ``eta[i, k]`` is the probability that the chain moves from segment
    ``k`` to ``k + 1`` between positions ``i - 1`` and ``i`` (0-based;
    row 0 is unused because the chain starts in segment 0).  The last
    column is the exit probability out of the final segment, which only
    enters through its complement ``1 - eta``.
    """

    def __init__(self, eta, n_segments=None):
        eta = np.asarray(eta, dtype=float)
        if eta.ndim != 2:
            raise PriorError(f"eta must be a matrix, got ndim={eta.ndim}")
        if np.any((eta < 0) | (eta > 1) | ~np.isfinite(eta)):
            raise PriorError("eta entries must lie in [0, 1]")
        if n_segments is not None and n_segments != eta.shape[1]:
            raise PriorError(
                f"eta has {eta.shape[1]} columns, expected n_segments={n_segments}"
            )
        self.eta = eta
        self.eta.setflags(write=False)
        self._null_cache = None
        with np.errstate(divide="ignore"):
            self._log_eta = np.log(eta)
            self._log_1meta = np.log1p(-eta)
        self._log_eta.setflags(write=False)
        self._log_1meta.setflags(write=False)

    @property
    def n(self) -> int:
        return self.eta.shape[0]

    @property
    def n_segments(self) -> int:
        return self.eta.shape[1]

    @property
    def log_eta(self):
        return self._log_eta

    @property
    def log_1meta(self):
        return self._log_1meta

    def admissible_jumps(self) -> int:
        """Number of positions where at least one jump has probability > 0."""
        return int(np.sum(np.any(self.eta[1:] > 0, axis=1)))


def build_prior(
    dataset: SurvivalDataset,
    n_segments: int,
    base_eta: float = 0.5,
    forbid_ties: bool = False,
) -> SegmentationPrior:
    """Constant-probability prior, optionally forbidding jumps inside ties.

    With ``forbid_ties`` the jump probability into position ``i`` is zeroed
    whenever rows ``i - 1`` and ``i`` share the same order_key, so every
    segmentation with positive posterior probability breaks only between
    distinct key values.
    """
    if not 0 < base_eta < 1:
        raise PriorError(f"base_eta must lie in (0, 1), got {base_eta}")
    if n_segments < 1:
        raise PriorError(f"n_segments must be >= 1, got {n_segments}")
    n = dataset.n
    eta = np.full((n, n_segments), base_eta)
    if forbid_ties:
        tied = dataset.order_key[1:] == dataset.order_key[:-1]
        eta[1:][tied] = 0.0
    prior = SegmentationPrior(eta, n_segments)
    if n_segments - 1 > prior.admissible_jumps():
        raise PriorError(
            f"{n_segments} segments need {n_segments - 1} admissible jump "
            f"positions but only {prior.admissible_jumps()} exist"
        )
    if n_segments > n:
        raise PriorError(f"{n_segments} segments exceed {n} records")
    return prior
