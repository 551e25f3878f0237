"""Command-line surface: simulate, fit, tune, evaluate, prep, and experiment.

Every subcommand writes all outputs under --out-dir together with a
manifest.json recording the full parameter set, seed, version, timestamps,
and input digests.  Reruns with identical parameters produce byte-identical
numeric outputs.  Exit codes: 0 success, 2 invalid input, 3 numerical
failure, 4 non-convergence (outputs still written).
"""

from __future__ import annotations

import argparse
import datetime
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bagus import FitInput, fit_bagus, make_hyperparams, tune
from .core import MeasurementErrorModel, sample_covariance, spd_inverse
from .errors import (
    AllCellsFailed,
    DimensionMismatch,
    MissingRawIntensities,
    NotPositiveDefinite,
    PrecisError,
    SingleClass,
    ZeroVarianceFeature,
)
from .experiment import METRIC_ORDER, replicate_data, resolve_workers, run_cell
from .ingest import ExpressionTable, FilterConfig, prepare
from .io import (
    file_digest,
    format_float,
    read_dataset_csv,
    read_json,
    read_matrix_csv,
    read_vector_csv,
    write_dataset_csv,
    write_json,
    write_matrix_csv,
    write_vector_csv,
)
from .iro import IroConfig, run_iro, select_edges, tune_corrected
from .metrics import auc, classification_metrics, confusion, frobenius_error
from .simulate import GraphSpec, SimCell

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_NONCONVERGENCE = 4


class UsageError(Exception):
    """Invalid flags or input files; maps to exit code 2."""


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _jsonable(value):
    """Floats become JSON numbers or null (never NaN); containers recurse."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, (np.integer, int)):
        return int(value)
    return value


def _write_manifest(out_dir: Path, args, started: str, inputs: dict[str, Path]) -> None:
    parameters = {
        k: _jsonable(v) for k, v in vars(args).items() if k not in ("func", "command")
    }
    manifest = {
        "subcommand": args.command,
        "parameters": parameters,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "started": started,
        "finished": _utcnow(),
        "input_digests": {name: file_digest(path) for name, path in inputs.items()},
    }
    write_json(out_dir / "manifest.json", manifest)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _hyperparams(args):
    try:
        return make_hyperparams(
            args.v0,
            args.v1,
            eta=args.eta,
            diagonal_rate=args.tau,
            spectral_bound=args.B,
            em_tol=args.em_tol,
            em_max_iter=args.em_max_iter,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_simulate(args, started: str) -> int:
    if args.gamma <= 0:
        raise UsageError(
            "gamma must be positive; for clean data fit directly with `precis fit --method naive`"
        )
    try:
        spec = GraphSpec(
            structure=args.structure,
            d=args.d,
            edge_probability=args.edge_prob,
            group_size=args.group_size,
            hub_style=args.hub_style,
        )
        cell = SimCell(spec=spec, n=args.n, gamma=args.gamma, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    omega_true, _, x, w, me = replicate_data(cell, 0)
    out = _out_dir(args)
    write_dataset_csv(out / "w.csv", w)
    write_dataset_csv(out / "x.csv", x)
    write_matrix_csv(out / "omega_true.csv", omega_true)
    write_vector_csv(out / "sigma_u.csv", me.variances)
    _write_manifest(out, args, started, {})
    return EXIT_OK


def _load_error_model(path, d: int) -> MeasurementErrorModel:
    variances = read_vector_csv(path)
    if variances.shape[0] != d:
        raise UsageError(f"sigma_u has {variances.shape[0]} entries for {d} columns")
    try:
        return MeasurementErrorModel(variances)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_fit(args, started: str) -> int:
    data, _ = read_dataset_csv(args.data)
    hp = _hyperparams(args)
    out = _out_dir(args)
    inputs = {"data": Path(args.data)}
    rc = EXIT_OK

    if args.method == "naive":
        est = fit_bagus(FitInput(sample_covariance(data), data.shape[0]), hp)
        trace_payload = {
            "method": "naive",
            "converged": est.converged,
            "objective_trace": list(est.objective_trace),
        }
        if not est.converged:
            rc = EXIT_NONCONVERGENCE
        omega, p = est.omega, est.inclusion_prob
    else:
        if args.sigma_u is None:
            raise UsageError("--sigma-u is required for the corrected method")
        me = _load_error_model(args.sigma_u, data.shape[1])
        inputs["sigma_u"] = Path(args.sigma_u)
        cfg = IroConfig(
            iterations=args.iterations,
            hp=hp,
            burn_in_fraction=args.burn_in,
            seed=args.seed,
        )
        trace = run_iro(data, me, cfg)
        trace_payload = {
            "method": "corrected",
            "iterations": cfg.iterations,
            "burn_in_count": trace.burn_in_count,
            "nonconverged_iterations": list(trace.nonconverged_iterations),
            "initial": {
                "converged": trace.initial.converged,
                "objective_trace": list(trace.initial.objective_trace),
            },
            "per_iteration": [
                {"converged": est.converged, "objective_trace": list(est.objective_trace)}
                for est in trace.per_iteration
            ],
        }
        if trace.nonconverged_iterations or not trace.initial.converged:
            rc = EXIT_NONCONVERGENCE
        omega, p = trace.averaged.omega, trace.averaged.inclusion_prob

    write_matrix_csv(out / "omega_hat.csv", omega)
    write_matrix_csv(out / "p_hat.csv", p)
    write_json(out / "trace.json", _jsonable(trace_payload))
    _write_manifest(out, args, started, inputs)
    return rc


def _parse_grid(v0_grid: str, v1_grid: str) -> list[tuple[float, float]]:
    try:
        v0s = [float(v) for v in v0_grid.split(",") if v.strip()]
        v1s = [float(v) for v in v1_grid.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"could not parse grid: {exc}") from exc
    grid = [(v0, v1) for v0 in v0s for v1 in v1s if v0 < v1]
    if not grid:
        raise UsageError("grid is empty after filtering to spike < slab pairs")
    return grid


def cmd_tune(args, started: str) -> int:
    data, _ = read_dataset_csv(args.data)
    grid = _parse_grid(args.v0_grid, args.v1_grid)
    out = _out_dir(args)
    inputs = {"data": Path(args.data)}
    common = dict(
        eta=args.eta,
        spectral_bound=args.B,
        em_tol=args.em_tol,
        em_max_iter=args.em_max_iter,
    )
    if args.method == "naive":
        result = tune(FitInput(sample_covariance(data), data.shape[0]), grid, **common)
    else:
        if args.sigma_u is None:
            raise UsageError("--sigma-u is required for the corrected method")
        me = _load_error_model(args.sigma_u, data.shape[1])
        inputs["sigma_u"] = Path(args.sigma_u)
        result = tune_corrected(
            data,
            me,
            grid,
            iterations=args.iterations,
            burn_in_fraction=args.burn_in,
            seed=args.seed,
            **common,
        )
    payload = {
        "method": args.method,
        "best": {"v0": result.best.spike_scale, "v1": result.best.slab_scale},
        "cells": [
            {
                "v0": cell.hp.spike_scale,
                "v1": cell.hp.slab_scale,
                "bic": cell.bic,
                "error": cell.error,
            }
            for cell in result.cells
        ],
    }
    write_json(out / "tune.json", _jsonable(payload))
    _write_manifest(out, args, started, inputs)
    return EXIT_OK


def cmd_evaluate(args, started: str) -> int:
    omega_hat = read_matrix_csv(args.omega_hat)
    p_hat = read_matrix_csv(args.p_hat)
    omega_true = read_matrix_csv(args.omega_true)
    truth = np.abs(omega_true) > 0
    np.fill_diagonal(truth, False)

    estimated = select_edges(p_hat, args.threshold)
    cm = classification_metrics(confusion(estimated, truth))
    degenerate = list(cm.degenerate)
    payload = cm.as_dict()
    payload["frob"] = frobenius_error(omega_hat, omega_true)
    try:
        payload["auc"] = auc(p_hat, truth)
    except SingleClass:
        payload["auc"] = float("nan")
        degenerate.append("auc")
    payload["degenerateFlags"] = sorted(degenerate)

    out = _out_dir(args)
    write_json(out / "evaluation.json", _jsonable(payload))
    _write_manifest(
        out,
        args,
        started,
        {
            "omega_hat": Path(args.omega_hat),
            "p_hat": Path(args.p_hat),
            "omega_true": Path(args.omega_true),
        },
    )
    return EXIT_OK


def cmd_prep(args, started: str) -> int:
    means, mean_header = read_dataset_csv(args.means)
    variances, var_header = read_dataset_csv(args.variances)
    if var_header is not None and mean_header is not None and var_header != mean_header:
        raise UsageError("feature labels differ between means and variances files")
    intensities = None
    if args.intensities is not None:
        intensities, int_header = read_dataset_csv(args.intensities)
        if int_header is not None and mean_header is not None and int_header != mean_header:
            raise UsageError("feature labels differ between means and intensities files")
    feature_ids = mean_header or [f"f{j}" for j in range(means.shape[1])]
    table = ExpressionTable(
        means=means,
        posterior_variances=variances,
        feature_ids=feature_ids,
        raw_intensities=intensities,
    )
    cfg = FilterConfig(
        intensity_fraction=args.intensity_fraction,
        intensity_threshold=args.intensity_threshold,
        iqr_min=args.iqr_min,
        noise_ratio_max=args.noise_ratio_max,
        use_intensity=args.intensities is not None,
    )
    prepared = prepare(table, cfg)
    out = _out_dir(args)
    write_dataset_csv(out / "w.csv", prepared.w, header=list(prepared.feature_ids))
    write_vector_csv(out / "sigma_u.csv", prepared.error_model.variances)
    write_json(
        out / "features.json",
        _jsonable(
            {
                "kept": list(prepared.feature_ids),
                "removal_counts": prepared.removal_counts,
                "features_before": table.p,
                "features_after": len(prepared.feature_ids),
                "subjects": table.n,
            }
        ),
    )
    inputs = {"means": Path(args.means), "variances": Path(args.variances)}
    if args.intensities is not None:
        inputs["intensities"] = Path(args.intensities)
    _write_manifest(out, args, started, inputs)
    return EXIT_OK


def _cell_from_config(entry: dict) -> tuple[SimCell, dict]:
    try:
        spec = GraphSpec(
            structure=entry["structure"],
            d=int(entry["d"]),
            edge_probability=entry.get("edge_probability"),
            group_size=int(entry.get("group_size", 20)),
            hub_style=entry.get("hub_style", "star"),
        )
        cell = SimCell(
            spec=spec,
            n=int(entry["n"]),
            gamma=float(entry["gamma"]),
            seed=int(entry["seed"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad experiment cell {entry}: {exc}") from exc
    options = {
        "replicates": int(entry.get("replicates", 1)),
        "methods": tuple(entry.get("methods", ("true", "naive", "corrected"))),
        "iterations": int(entry.get("iterations", 50)),
        "burn_in": float(entry.get("burn_in", 0.2)),
        "grid": entry.get("grid"),
        "hp": entry.get("hp"),
    }
    return cell, options


def cmd_experiment(args, started: str) -> int:
    config = read_json(args.config)
    threshold = float(config.get("threshold", 0.5))
    cells = config.get("cells")
    if not cells:
        raise UsageError("experiment config lists no cells")
    out = _out_dir(args)
    workers = resolve_workers(args.workers)

    results = []
    succeeded = 0
    for cell_index, entry in enumerate(cells):
        cell, options = _cell_from_config(entry)
        record = {
            "structure": cell.spec.structure,
            "d": cell.spec.d,
            "n": cell.n,
            "gamma": cell.gamma,
            "replicates": options["replicates"],
            "seed": cell.seed,
            "group_size": cell.spec.group_size,
            "hub_style": cell.spec.hub_style,
            "edge_probability": cell.spec.edge_probability,
            "iterations": options["iterations"],
            "burn_in": options["burn_in"],
            "error": None,
            "tuned": {},
            "methods": {},
        }
        try:
            if options["grid"] is not None:
                grid = [
                    (float(v0), float(v1))
                    for v0 in options["grid"]["v0"]
                    for v1 in options["grid"]["v1"]
                    if float(v0) < float(v1)
                ]
                if not grid:
                    raise UsageError("cell grid empty after filtering to spike < slab")
                hp_arg: dict = {"grid": grid}
            elif options["hp"] is not None:
                hp_arg = {
                    "hp": make_hyperparams(
                        float(options["hp"]["v0"]), float(options["hp"]["v1"])
                    )
                }
            else:
                raise UsageError("cell needs either grid or hp")
            summary = run_cell(
                cell,
                options["replicates"],
                options["methods"],
                iro_iterations=options["iterations"],
                burn_in_fraction=options["burn_in"],
                threshold=threshold,
                workers=workers,
                **hp_arg,
            )
        except UsageError:
            raise
        except (PrecisError, ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
            record["error"] = str(exc)
            results.append(record)
            continue
        succeeded += 1
        for method, hp in summary.tuned.items():
            record["tuned"][method] = {"v0": hp.spike_scale, "v1": hp.slab_scale}
        for method in summary.methods:
            entry_out = {k: summary.method_means[method][k] for k in METRIC_ORDER}
            entry_out["replicates_used"] = summary.replicates_used[method]
            entry_out["failures"] = summary.failures[method]
            entry_out["degenerate_counts"] = summary.degenerate_counts[method]
            record["methods"][method] = entry_out
        results.append(record)

        if args.dump_data:
            for r in range(options["replicates"]):
                omega_true, _, x, w, me = replicate_data(cell, r)
                dump = out / "dumps" / f"cell{cell_index}" / f"rep{r}"
                dump.mkdir(parents=True, exist_ok=True)
                write_dataset_csv(dump / "w.csv", w)
                write_dataset_csv(dump / "x.csv", x)
                write_matrix_csv(dump / "omega_true.csv", omega_true)
                if me is not None:
                    write_vector_csv(dump / "sigma_u.csv", me.variances)

    write_json(out / "results.json", _jsonable({"threshold": threshold, "cells": results}))
    _write_results_csv(out / "results.csv", results)
    _write_manifest(out, args, started, {"config": Path(args.config)})
    return EXIT_OK if succeeded else EXIT_NUMERIC


def _write_results_csv(path: Path, results: list[dict]) -> None:
    """Flat per-cell per-method means with metrics in the canonical column order."""
    with open(path, "w") as fh:
        fh.write("structure,d,n,gamma,method," + ",".join(METRIC_ORDER) + "\n")
        for record in results:
            for method, values in record["methods"].items():
                cells = [
                    record["structure"],
                    str(record["d"]),
                    str(record["n"]),
                    format_float(record["gamma"]),
                    method,
                ]
                for key in METRIC_ORDER:
                    value = values[key]
                    cells.append("" if value is None or not math.isfinite(value) else format_float(value))
                fh.write(",".join(cells) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="precis",
        description="Sparse precision matrix estimation under additive measurement error",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate truth, clean, and contaminated data")
    sim.add_argument("--structure", choices=("hub", "random"), required=True)
    sim.add_argument("--d", type=int, required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--gamma", type=float, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out-dir", required=True)
    sim.add_argument("--group-size", type=int, default=20)
    sim.add_argument("--hub-style", choices=("star", "block"), default="star")
    sim.add_argument("--edge-prob", type=float, default=None)
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="fit a precision matrix (naive or corrected)")
    fit.add_argument("--data", required=True)
    fit.add_argument("--method", choices=("naive", "corrected"), required=True)
    fit.add_argument("--sigma-u", default=None)
    fit.add_argument("--v0", type=float, required=True)
    fit.add_argument("--v1", type=float, required=True)
    fit.add_argument("--eta", type=float, default=0.5)
    fit.add_argument("--tau", type=float, default=None, help="defaults to v0")
    fit.add_argument("--B", type=float, default=10.0)
    fit.add_argument("--iterations", type=int, default=50)
    fit.add_argument("--burn-in", type=float, default=0.2)
    fit.add_argument("--em-tol", type=float, default=1e-4)
    fit.add_argument("--em-max-iter", type=int, default=50)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out-dir", required=True)
    fit.set_defaults(func=cmd_fit)

    tun = sub.add_parser("tune", help="grid-search hyperparameters by BIC")
    tun.add_argument("--data", required=True)
    tun.add_argument("--method", choices=("naive", "corrected"), required=True)
    tun.add_argument("--sigma-u", default=None)
    tun.add_argument("--v0-grid", required=True, help="comma-separated spike scales")
    tun.add_argument("--v1-grid", required=True, help="comma-separated slab scales")
    tun.add_argument("--eta", type=float, default=0.5)
    tun.add_argument("--B", type=float, default=10.0)
    tun.add_argument("--iterations", type=int, default=50)
    tun.add_argument("--burn-in", type=float, default=0.2)
    tun.add_argument("--em-tol", type=float, default=1e-4)
    tun.add_argument("--em-max-iter", type=int, default=50)
    tun.add_argument("--seed", type=int, default=0)
    tun.add_argument("--out-dir", required=True)
    tun.set_defaults(func=cmd_tune)

    ev = sub.add_parser("evaluate", help="score an estimate against the truth")
    ev.add_argument("--omega-hat", required=True)
    ev.add_argument("--p-hat", required=True)
    ev.add_argument("--omega-true", required=True)
    ev.add_argument("--threshold", type=float, default=0.5)
    ev.add_argument("--out-dir", required=True)
    ev.set_defaults(func=cmd_evaluate)

    prep = sub.add_parser("prep", help="filter and standardize an expression table")
    prep.add_argument("--means", required=True)
    prep.add_argument("--variances", required=True)
    prep.add_argument("--intensities", default=None)
    prep.add_argument("--intensity-fraction", type=float, default=0.25)
    prep.add_argument("--intensity-threshold", type=float, default=100.0)
    prep.add_argument("--iqr-min", type=float, default=0.6)
    prep.add_argument("--noise-ratio-max", type=float, default=0.5)
    prep.add_argument("--out-dir", required=True)
    prep.set_defaults(func=cmd_prep)

    exp = sub.add_parser("experiment", help="run a grid of simulation cells")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out-dir", required=True)
    exp.add_argument("--workers", type=int, default=None)
    exp.add_argument("--dump-data", action="store_true")
    exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return EXIT_USAGE if exc.code not in (0, None) else 0
    started = _utcnow()
    try:
        return args.func(args, started)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        DimensionMismatch,
        ZeroVarianceFeature,
        MissingRawIntensities,
        SingleClass,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NotPositiveDefinite, AllCellsFailed, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
