"""Command-line interface: fit, sweep, bootstrap, simulate.

All tabular outputs are CSV with stable documented headers; scalar
results go to JSON.  Files are written atomically (temp file + rename).
Exit codes: 0 ok, 1 domain error (single-line message on stderr),
2 usage error.  The SURVSEG_THREADS environment variable caps worker
parallelism; the current implementation runs replicates sequentially,
which always respects the cap.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import (
    ExponentialHazard,
    PiecewiseHazard,
    SmoothedHazard,
    WeibullHazard,
)
from .data import ColumnSchema, build_prior, load_dataset
from .em import FitConfig, fit
from .errors import SurvSegError
from .extras import bootstrap_ci, weighted_km
from .selection import sweep
from .simulate import simulate_scenario, simulate_table

WEIGHTS_HEADER = ["position", "order_key"]
BP_HEADER = ["breakpoint", "position", "order_key", "probability"]
GRID_HEADER = ["segment", "time", "hazard", "cum_hazard"]
KM_HEADER = ["segment", "time", "survival"]
SWEEP_HEADER = ["n_segments", "log_lik", "bic", "aic", "converged", "selected", "error"]
BOOTSTRAP_HEADER = ["parameter", "estimate", "lower", "upper"]


def _atomic_text(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _atomic_csv(path: Path, header, rows):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _serialize_baseline(baseline):
    if isinstance(baseline, ExponentialHazard):
        return {"type": "exponential", "rate": baseline.rate}
    if isinstance(baseline, WeibullHazard):
        return {"type": "weibull", "shape": baseline.shape, "scale": baseline.scale}
    if isinstance(baseline, PiecewiseHazard):
        return {
            "type": "piecewise",
            "cuts": list(baseline.cuts),
            "rates": list(baseline.rates),
        }
    if isinstance(baseline, SmoothedHazard):
        return {
            "type": "smoothed",
            "bandwidth": baseline.bandwidth,
            "kernel": baseline.kernel,
            "jump_times": baseline.jump_times.tolist(),
            "jump_sizes": baseline.jump_sizes.tolist(),
        }
    raise TypeError(f"cannot serialize baseline {type(baseline).__name__}")


def _data_parser():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("input", help="input CSV file")
    parser.add_argument("--time-col", default="time")
    parser.add_argument("--event-col", default="event")
    parser.add_argument("--entry-col", default=None)
    parser.add_argument("--order-col", default=None)
    parser.add_argument(
        "--covariates", default="", help="comma-separated covariate column names"
    )
    return parser


def _fit_parser():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--family",
        default="exponential",
        choices=["exponential", "weibull", "pch", "cox"],
    )
    parser.add_argument("--k", type=int, default=2, help="number of segments")
    parser.add_argument("--eta", type=float, default=0.5)
    parser.add_argument("--forbid-ties", action="store_true")
    parser.add_argument("--init-w", type=float, default=0.7)
    parser.add_argument("--cuts", default=None, help="comma-separated cut points")
    parser.add_argument("--bandwidth", type=float, default=None)
    parser.add_argument("--tol", type=float, default=1e-8)
    parser.add_argument("--max-iter", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def _read_dataset(args):
    schema = ColumnSchema(
        time=args.time_col,
        event=args.event_col,
        entry=args.entry_col,
        order_key=args.order_col,
        covariates=tuple(c for c in args.covariates.split(",") if c),
    )
    return load_dataset(args.input, schema), schema


def _config_from(args, n_segments=None):
    cuts = None
    if args.cuts:
        cuts = tuple(float(c) for c in args.cuts.split(","))
    return FitConfig(
        family=args.family,
        n_segments=args.k if n_segments is None else n_segments,
        init_w=args.init_w,
        max_iter=args.max_iter,
        tol=args.tol,
        bandwidth=args.bandwidth,
        cuts=cuts,
        seed=args.seed,
    )


def _echo_config(args, config):
    return {
        "input": args.input,
        "family": config.family,
        "n_segments": config.n_segments,
        "eta": args.eta,
        "forbid_ties": bool(args.forbid_ties),
        "init_w": config.init_w,
        "tol": config.tol,
        "max_iter": config.max_iter,
        "cuts": None if config.cuts is None else list(config.cuts),
        "bandwidth": config.bandwidth,
        "seed": config.seed,
        "time_col": args.time_col,
        "event_col": args.event_col,
        "entry_col": args.entry_col,
        "order_col": args.order_col,
        "covariates": [c for c in args.covariates.split(",") if c],
    }


def _write_fit_outputs(outdir: Path, dataset, result, echo):
    K = result.config.n_segments
    params = {
        "family": result.config.family,
        "n_segments": K,
        "log_lik": result.log_lik,
        "bic": result.bic,
        "aic": result.aic,
        "converged": result.converged,
        "iterations": result.iterations,
        "segments": [
            {
                "segment": k + 1,
                "baseline": _serialize_baseline(result.theta.baselines[k]),
                "beta": result.theta.betas[k].tolist(),
            }
            for k in range(K)
        ],
        "breakpoints": [
            {
                "index": bp.index,
                "position": bp.position,
                "order_key": bp.order_key,
                "probability": bp.probability,
            }
            for bp in result.map_breakpoints
        ],
        "warnings": list(result.warnings),
        "config": echo,
    }
    _atomic_text(outdir / "params.json", json.dumps(params, indent=2) + "\n")

    header = WEIGHTS_HEADER + [f"w{k + 1}" for k in range(K)]
    rows = (
        [i + 1, _fmt(dataset.order_key[i])] + [_fmt(w) for w in result.weights[i]]
        for i in range(dataset.n)
    )
    _atomic_csv(outdir / "weights.csv", header, rows)

    bp_rows = []
    for k in range(K - 1):
        for i, prob in enumerate(result.posteriors.bp_marginal[k]):
            bp_rows.append(
                [k + 1, i + 1, _fmt(dataset.order_key[i + 1]), _fmt(prob)]
            )
    _atomic_csv(outdir / "bp_marginals.csv", BP_HEADER, bp_rows)

    grid = np.linspace(0.0, float(dataset.time.max()) * 1.02, 200)
    grid_rows = []
    for k, baseline in enumerate(result.theta.baselines, start=1):
        with np.errstate(divide="ignore"):
            hz = np.exp(baseline.log_hazard(grid))
        cum = baseline.cum_hazard(grid)
        grid_rows.extend(
            [k, _fmt(t), _fmt(h), _fmt(c)] for t, h, c in zip(grid, hz, cum)
        )
    _atomic_csv(outdir / "baseline_grid.csv", GRID_HEADER, grid_rows)

    km_rows = []
    for k in range(K):
        curve = weighted_km(dataset, result.weights, k)
        km_rows.extend(
            [k + 1, _fmt(t), _fmt(s)] for t, s in zip(curve.times, curve.survival)
        )
    _atomic_csv(outdir / "km_curves.csv", KM_HEADER, km_rows)


def cmd_fit(args) -> int:
    dataset, _ = _read_dataset(args)
    config = _config_from(args)
    prior = build_prior(
        dataset, config.n_segments, base_eta=args.eta, forbid_ties=args.forbid_ties
    )
    result = fit(dataset, prior, config)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    echo = _echo_config(args, config)
    echo["rows_reordered"] = dataset.n_reordered
    _write_fit_outputs(outdir, dataset, result, echo)
    return 0


def cmd_sweep(args) -> int:
    dataset, _ = _read_dataset(args)
    config = _config_from(args, n_segments=1)
    builder = lambda ds, k: build_prior(
        ds, k, base_eta=args.eta, forbid_ties=args.forbid_ties
    )
    result = sweep(dataset, config, range(1, args.k_max + 1), prior_builder=builder)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [
        [
            row.n_segments,
            _fmt(row.log_lik),
            _fmt(row.bic),
            _fmt(row.aic),
            _fmt(row.converged),
            _fmt(row.selected),
            row.error or "",
        ]
        for row in result.rows
    ]
    _atomic_csv(outdir / "sweep.csv", SWEEP_HEADER, rows)
    return 0


def cmd_bootstrap(args) -> int:
    dataset, _ = _read_dataset(args)
    config = _config_from(args)
    builder = lambda ds, k: build_prior(
        ds, k, base_eta=args.eta, forbid_ties=args.forbid_ties
    )
    result = bootstrap_ci(
        dataset,
        config,
        n_replicates=args.replicates,
        level=args.level,
        prior_builder=builder,
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [
        [name, _fmt(result.point[name]), _fmt(result.lower[name]), _fmt(result.upper[name])]
        for name in sorted(result.point)
    ]
    _atomic_csv(outdir / "bootstrap.csv", BOOTSTRAP_HEADER, rows)
    summary = {
        "replicates": result.n_replicates,
        "failed": result.n_failed,
        "level": result.level,
    }
    _atomic_text(outdir / "bootstrap.json", json.dumps(summary, indent=2) + "\n")
    return 0


def cmd_simulate(args) -> int:
    if (args.scenario is None) == (args.table is None):
        raise SurvSegError("exactly one of --scenario or --table is required")
    censor_target = None if args.no_censoring else args.censor_target
    if args.scenario is not None:
        dataset, truth = simulate_scenario(
            args.scenario, n=args.n, seed=args.seed, censor_target=censor_target
        )
    else:
        spec = json.loads(Path(args.table).read_text(encoding="utf-8"))
        missing = {"cuts", "rates", "block_sizes"} - set(spec)
        if missing:
            raise SurvSegError(
                f"hazard table is missing key(s): {', '.join(sorted(missing))}"
            )
        betas = spec.get("betas")
        dataset, truth = simulate_table(
            {"cuts": spec["cuts"], "rates": spec["rates"]},
            block_sizes=spec["block_sizes"],
            seed=args.seed,
            betas=None if betas is None else np.asarray(betas, float),
            censor_target=censor_target,
        )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    p = dataset.p
    header = ["time", "event", "entry", "order_key"] + [f"x{j + 1}" for j in range(p)]
    rows = (
        [
            _fmt(dataset.time[i]),
            int(dataset.event[i]),
            _fmt(dataset.entry[i]),
            _fmt(dataset.order_key[i]),
            *(_fmt(v) for v in dataset.covariates[i]),
        ]
        for i in range(dataset.n)
    )
    _atomic_csv(outdir / "cohort.csv", header, rows)

    sidecar = {
        "scenario": truth.scenario,
        "seed": truth.seed,
        "n": dataset.n,
        "censor_upper": truth.censor_upper,
        "realized_censoring": truth.realized_censoring,
        "baselines": [_serialize_baseline_or_repr(b) for b in truth.baselines],
        "betas": truth.betas.tolist(),
        "labels": truth.labels.tolist(),
    }
    _atomic_text(outdir / "truth.json", json.dumps(sidecar, indent=2) + "\n")
    return 0


def _serialize_baseline_or_repr(baseline):
    try:
        return _serialize_baseline(baseline)
    except TypeError:
        return {"type": type(baseline).__name__.lower(), "repr": repr(baseline)}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="survseg",
        description="Breakpoint detection in ordered censored survival sequences",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser(
        "fit", parents=[_data_parser(), _fit_parser()], help="fit one model"
    )
    p_fit.set_defaults(func=cmd_fit)

    p_sweep = sub.add_parser(
        "sweep",
        parents=[_data_parser(), _fit_parser()],
        help="BIC sweep over the number of segments",
    )
    p_sweep.add_argument("--k-max", type=int, required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_boot = sub.add_parser(
        "bootstrap",
        parents=[_data_parser(), _fit_parser()],
        help="bootstrap confidence intervals",
    )
    p_boot.add_argument("--replicates", type=int, default=200)
    p_boot.add_argument("--level", type=float, default=0.95)
    p_boot.set_defaults(func=cmd_bootstrap)

    p_sim = sub.add_parser("simulate", help="generate a synthetic cohort")
    p_sim.add_argument("--scenario", type=int, default=None, choices=[1, 2, 3, 4])
    p_sim.add_argument("--table", default=None, help="JSON hazard table")
    p_sim.add_argument("--n", type=int, default=3000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--censor-target", type=float, default=0.5)
    p_sim.add_argument("--no-censoring", action="store_true")
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SurvSegError, ValueError, OSError) as exc:
        message = str(exc).replace("\n", " ")
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
