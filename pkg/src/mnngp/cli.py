"""Command-line interface.

Subcommands: ``table build``, ``table check``, ``kernel``, ``infer``,
``gridsearch``, and ``validate``.  Reports are JSON (or CSV where noted)
and embed the fully resolved configuration; commands that write a
report also render a companion PNG figure next to it unless
``--no-plot`` is given.  Exit codes: 0 success, 2 usage/domain errors,
3 file-format or I/O errors, 4 conditioning failures, 5 validation
failures.
"""

import argparse
import json
import os
import sys
import time
from itertools import product

import numpy as np

from . import plotting, validation
from .datasets import load_cifar10, load_csv, load_mnist, split
from .errors import (
    ConditioningError,
    DegenerateInputError,
    DomainError,
    FormatError,
    UsageError,
    ValidationFailure,
)
from .fq_table import QuadratureGrid, build_table, closed_form_f2, load_table
from .gp_regression import (
    accuracy,
    encode_targets,
    per_class_accuracy,
    posterior_mean,
    predict_classes,
)
from .kernel import KernelParams, kernel_matrix, save_matrix

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_CONDITIONING = 4
EXIT_VALIDATION = 5

# Default hyperparameter grids for the sweep: q in {2,3,4}, six depths,
# and the two variance lattices 2i/29 (i = 1,5,...,29) and
# 0.1 + 49i/290 (i = 0,4,...,28) — 1152 cells in total.
PAPER_GRID = {
    "q": [2, 3, 4],
    "depth": [1, 5, 9, 13, 17, 21],
    "sigma_b2": [2.0 * i / 29.0 for i in range(1, 31) if i % 4 == 1],
    "sigma_w2": [0.1 + 49.0 * i / 290.0 for i in range(0, 31) if i % 4 == 0],
}

DEFAULT_TABLE_BUILD = {"n_rho": 201, "r_max": 8.0, "n_grid": 1001, "scheme": "product"}


def _derive_seed(*parts):
    """Deterministic child seed from (base seed, indices...)."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _figure_path(out):
    return os.path.splitext(str(out))[0] + ".png"


def _write_json(report, path):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    with open(path, "w") as handle:
        handle.write(text)


def _load_points_csv(path):
    """Numeric matrix CSV (no label column) for kernel inputs."""
    try:
        points = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except OSError:
        raise
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if points.size == 0:
        raise FormatError(f"{path}: no rows")
    return points


def _split_paths(value):
    return [p for p in str(value).split(",") if p]


def _load_dataset_pair(args):
    """Load (train, test, n_classes) for the infer command."""
    kind = args.dataset
    if kind == "mnist":
        for flag in ("train_images", "train_labels", "test_images", "test_labels"):
            if getattr(args, flag) is None:
                raise UsageError(f"--{flag.replace('_', '-')} is required for mnist")
        train = load_mnist(args.train_images, args.train_labels)
        test = load_mnist(args.test_images, args.test_labels)
        return train, test, 10
    if kind == "cifar10":
        if args.train_images is None or args.test_images is None:
            raise UsageError(
                "--train-images and --test-images are required for cifar10"
            )
        if args.train_labels or args.test_labels:
            raise UsageError(
                "cifar10 batches embed labels; do not pass label files"
            )
        train = load_cifar10(_split_paths(args.train_images))
        test = load_cifar10(_split_paths(args.test_images))
        return train, test, 10
    if args.train_images is None or args.test_images is None:
        raise UsageError("--train-images and --test-images are required for csv")
    if args.train_labels or args.test_labels:
        raise UsageError("csv files carry labels in the first column; "
                         "do not pass label files")
    train = load_csv(args.train_images)
    test = load_csv(args.test_images)
    n_classes = max(train.n_classes, test.n_classes)
    return train, test, n_classes


def _evaluate_split(train, inputs, labels, n_classes, params, table, noise0):
    """Fit on the training rows, score accuracy on (inputs, labels)."""
    K_train = kernel_matrix(train.inputs, None, params, table)
    K_cross = np.asarray(kernel_matrix(inputs, train.inputs, params, table))
    result = posterior_mean(
        K_train, K_cross, encode_targets(train.labels, n_classes), noise0
    )
    predictions = predict_classes(result.mean)
    return accuracy(predictions, labels), predictions, result


def cmd_table_build(args):
    grid = QuadratureGrid(args.r_max, args.n_grid)
    start = time.perf_counter()
    table = build_table(args.q, args.n_rho, grid, scheme=args.scheme)
    elapsed = time.perf_counter() - start
    table.save(args.out)
    print(
        f"wrote {args.out}: q={args.q} n_rho={args.n_rho} r_max={args.r_max:g} "
        f"n_grid={args.n_grid} scheme={args.scheme} ({elapsed:.1f}s)"
    )
    return EXIT_OK


def cmd_table_check(args):
    table = load_table(args.table)
    if table.q != 2:
        raise UsageError(
            f"check compares against the q=2 closed form; table has q={table.q}"
        )
    closed = closed_form_f2(table.rhos)
    diff = np.abs(table.values - closed)
    with open(args.out_csv, "w") as handle:
        handle.write("rho,table_value,closed_form,abs_diff\n")
        for r, t, c, d in zip(table.rhos, table.values, closed, diff):
            handle.write("%.17g,%.17g,%.17g,%.17g\n" % (r, t, c, d))
    if not args.no_plot:
        plotting.plot_table_check(
            table.rhos, table.values, closed, _figure_path(args.out_csv)
        )
    max_diff = float(diff.max())
    print(f"max |table - closed form| = {max_diff:.3e} (threshold {args.threshold:g})")
    if max_diff > args.threshold:
        raise ValidationFailure(
            f"max deviation {max_diff:.3e} exceeds threshold {args.threshold:g}"
        )
    return EXIT_OK


def cmd_kernel(args):
    table = load_table(args.table)
    if table.q != args.q:
        raise UsageError(f"--q {args.q} does not match table q={table.q}")
    params = KernelParams(args.q, args.depth, args.sigma_b2, args.sigma_w2)
    X = _load_points_csv(args.x)
    Y = _load_points_csv(args.y) if args.y else None
    K = kernel_matrix(X, Y, params, table)
    save_matrix(args.out, K)
    if not args.no_plot:
        plotting.plot_kernel_heatmap(np.asarray(K), _figure_path(args.out))
    shape = np.asarray(K).shape
    print(f"wrote {args.out}: {shape[0]}x{shape[1]} kernel block")
    return EXIT_OK


def cmd_infer(args):
    start = time.perf_counter()
    train_full, test, n_classes = _load_dataset_pair(args)
    table = load_table(args.table)
    if table.q != args.q:
        raise UsageError(f"--q {args.q} does not match table q={table.q}")
    params = KernelParams(args.q, args.depth, args.sigma_b2, args.sigma_w2)
    repeats = []
    for r in range(args.repeats):
        split_seed = _derive_seed(args.seed, r)
        train, val = split(train_full, args.n_train, args.n_val, split_seed)
        test_acc, predictions, result = _evaluate_split(
            train, test.inputs, test.labels, n_classes, params, table, args.noise0
        )
        val_acc = None
        if args.n_val > 0:
            val_acc = _evaluate_split(
                train, val.inputs, val.labels, n_classes, params, table, args.noise0
            )[0]
        repeats.append(
            {
                "repeat": r,
                "split_seed": split_seed,
                "accuracy": test_acc,
                "validation_accuracy": val_acc,
                "noise_used": result.noise_used,
                "escalations": result.escalations,
                "per_class_accuracy": per_class_accuracy(
                    predictions, test.labels, n_classes
                ),
            }
        )
    accs = [r["accuracy"] for r in repeats]
    report = {
        "command": "infer",
        "config": {
            "dataset": args.dataset,
            "train_images": args.train_images,
            "train_labels": args.train_labels,
            "test_images": args.test_images,
            "test_labels": args.test_labels,
            "n_train": args.n_train,
            "n_val": args.n_val,
            "repeats": args.repeats,
            "seed": args.seed,
            "table": args.table,
            "q": args.q,
            "depth": args.depth,
            "sigma_b2": args.sigma_b2,
            "sigma_w2": args.sigma_w2,
            "noise0": args.noise0,
            "deterministic": args.deterministic,
        },
        "n_train": args.n_train,
        "n_test": test.n,
        "n_classes": n_classes,
        "repeats": repeats,
        "mean_accuracy": float(np.mean(accs)),
        "std_accuracy": float(np.std(accs)),
        "wall_time_seconds": 0.0
        if args.deterministic
        else time.perf_counter() - start,
    }
    _write_json(report, args.out)
    if not args.no_plot:
        plotting.plot_infer_report(report, _figure_path(args.out))
    print(
        f"mean test accuracy {report['mean_accuracy']:.4f} "
        f"(std {report['std_accuracy']:.4f}, {args.repeats} repeats) -> {args.out}"
    )
    return EXIT_OK


def _load_config(path):
    with open(path) as handle:
        text = handle.read()
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise FormatError(f"{path}: top level must be a JSON object")
    return config


def _resolve_grid(grid_config):
    grid = dict(PAPER_GRID)
    if grid_config is not None:
        unknown = set(grid_config) - set(PAPER_GRID)
        if unknown:
            raise UsageError(f"unknown grid keys: {sorted(unknown)}")
        grid.update(grid_config)
    for key in ("q", "depth", "sigma_b2", "sigma_w2"):
        values = grid[key]
        if not isinstance(values, list) or not values:
            raise UsageError(f"grid.{key} must be a nonempty list")
    grid["q"] = [int(v) for v in grid["q"]]
    grid["depth"] = [int(v) for v in grid["depth"]]
    grid["sigma_b2"] = [float(v) for v in grid["sigma_b2"]]
    grid["sigma_w2"] = [float(v) for v in grid["sigma_w2"]]
    return grid


def _resolve_tables(table_config, q_values):
    """Map each q in the grid to an FqTable, loading or building."""
    config = dict(table_config or {"build": dict(DEFAULT_TABLE_BUILD)})
    forms = set(config) & {"path", "paths", "build"}
    if len(forms) != 1 or set(config) - forms:
        raise UsageError(
            'table spec must have exactly one of "path", "paths", or "build"'
        )
    tables = {}
    if "path" in config:
        table = load_table(config["path"])
        for q in q_values:
            if q != table.q:
                raise UsageError(
                    f"grid includes q={q} but the table at {config['path']} "
                    f"has q={table.q}"
                )
            tables[q] = table
    elif "paths" in config:
        paths = config["paths"]
        for q in q_values:
            key = str(q)
            if key not in paths:
                raise UsageError(f"table.paths has no entry for q={q}")
            table = load_table(paths[key])
            if table.q != q:
                raise UsageError(
                    f"table.paths[{key}] points at a q={table.q} table"
                )
            tables[q] = table
    else:
        build = dict(DEFAULT_TABLE_BUILD)
        build.update(config["build"])
        grid = QuadratureGrid(float(build["r_max"]), int(build["n_grid"]))
        for q in q_values:
            tables[q] = build_table(
                q, int(build["n_rho"]), grid, scheme=build.get("scheme", "product")
            )
        config = {"build": build}
    return tables, config


def _load_gridsearch_dataset(dataset_config):
    required = {"kind", "n_train", "n_val"}
    missing = required - set(dataset_config)
    if missing:
        raise UsageError(f"dataset config missing keys: {sorted(missing)}")
    kind = dataset_config["kind"]
    images = dataset_config.get("train_images")
    if images is None:
        raise UsageError("dataset config missing train_images")
    if kind == "mnist":
        labels = dataset_config.get("train_labels")
        if labels is None:
            raise UsageError("mnist dataset config needs train_labels")
        data = load_mnist(images, labels)
    elif kind == "cifar10":
        data = load_cifar10(images if isinstance(images, list)
                            else _split_paths(images))
    elif kind == "csv":
        data = load_csv(images)
    else:
        raise UsageError(f"unknown dataset kind {kind!r}")
    return data


def cmd_gridsearch(args):
    start = time.perf_counter()
    config = _load_config(args.config)
    allowed = {"dataset", "grid", "table", "noise0", "seed", "budget",
               "deterministic", "out"}
    unknown = set(config) - allowed
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "dataset" not in config:
        raise UsageError('config must define "dataset"')
    grid = _resolve_grid(config.get("grid"))
    tables, table_config = _resolve_tables(config.get("table"), grid["q"])
    noise0 = float(config.get("noise0", 1e-10))
    seed = int(config.get("seed", 0))
    deterministic = bool(config.get("deterministic", False)) or args.deterministic
    budget = args.budget if args.budget is not None else config.get("budget")
    if budget is not None:
        budget = int(budget)
        if budget < 1:
            raise UsageError("budget must be a positive integer")
    out = args.out if args.out is not None else config.get("out")
    if out is None:
        raise UsageError("no output path: pass --out or set config.out")

    dataset_config = config["dataset"]
    data = _load_gridsearch_dataset(dataset_config)
    n_train = int(dataset_config["n_train"])
    n_val = int(dataset_config["n_val"])
    if n_val < 1:
        raise UsageError("gridsearch needs n_val >= 1 validation rows")
    repeats = int(dataset_config.get("repeats", 5))
    if repeats < 1:
        raise UsageError("repeats must be >= 1")

    # Cells are enumerated with sigma_w2 varying fastest, then sigma_b2,
    # then depth, then q; a budget keeps the first cells of that order.
    all_cells = list(
        product(grid["q"], grid["depth"], grid["sigma_b2"], grid["sigma_w2"])
    )
    cells = all_cells[: budget if budget is not None else len(all_cells)]
    records = []
    for index, (q, depth, sigma_b2, sigma_w2) in enumerate(cells):
        params = KernelParams(q, depth, sigma_b2, sigma_w2)
        accs = []
        escalations_max = 0
        error = None
        try:
            for r in range(repeats):
                train, val = split(
                    data, n_train, n_val, _derive_seed(seed, index, r)
                )
                acc, _, result = _evaluate_split(
                    train,
                    val.inputs,
                    val.labels,
                    data.n_classes,
                    params,
                    tables[q],
                    noise0,
                )
                accs.append(acc)
                escalations_max = max(escalations_max, result.escalations)
        except (ConditioningError, DegenerateInputError) as exc:
            error = f"{type(exc).__name__}: {exc}"
        failed = error is not None
        records.append(
            {
                "index": index,
                "q": q,
                "depth": depth,
                "sigma_b2": sigma_b2,
                "sigma_w2": sigma_w2,
                "mean_accuracy": None if failed else float(np.mean(accs)),
                "accuracies": None if failed else accs,
                "escalations_max": escalations_max,
                "error": error,
            }
        )
    ranked = sorted(
        (r for r in records if r["mean_accuracy"] is not None),
        key=lambda r: (-r["mean_accuracy"], r["index"]),
    )
    best = ranked[0] if ranked else None
    report = {
        "command": "gridsearch",
        "config": {
            "config_path": args.config,
            "dataset": dataset_config,
            "grid": grid,
            "table": table_config,
            "noise0": noise0,
            "seed": seed,
            "repeats": repeats,
            "budget": budget,
            "deterministic": deterministic,
        },
        "n_cells_total": len(all_cells),
        "n_cells_run": len(cells),
        "cells": records,
        "ranking": [r["index"] for r in ranked],
        "best": best,
        "wall_time_seconds": 0.0 if deterministic else time.perf_counter() - start,
    }
    _write_json(report, out)
    csv_path = os.path.splitext(str(out))[0] + ".csv"
    with open(csv_path, "w") as handle:
        handle.write("rank,cell_index,q,depth,sigma_b2,sigma_w2,mean_accuracy\n")
        for rank, r in enumerate(ranked):
            handle.write(
                "%d,%d,%d,%d,%.17g,%.17g,%.17g\n"
                % (rank, r["index"], r["q"], r["depth"], r["sigma_b2"],
                   r["sigma_w2"], r["mean_accuracy"])
            )
        for r in records:
            if r["mean_accuracy"] is None:
                handle.write(
                    ",%d,%d,%d,%.17g,%.17g,\n"
                    % (r["index"], r["q"], r["depth"], r["sigma_b2"], r["sigma_w2"])
                )
    if not args.no_plot:
        plotting.plot_gridsearch_report(report, _figure_path(out))
    if best is None:
        print(f"all {len(cells)} cells failed -> {out}")
    else:
        print(
            f"best cell {best['index']}: q={best['q']} depth={best['depth']} "
            f"sigma_b2={best['sigma_b2']:.4g} sigma_w2={best['sigma_w2']:.4g} "
            f"accuracy={best['mean_accuracy']:.4f} -> {out}"
        )
    return EXIT_OK


def _emit_suite_report(report, args, plot_fn):
    if args.out:
        _write_json(report, args.out)
        if not args.no_plot:
            plot_fn(report, _figure_path(args.out))
    if not report["passed"]:
        raise ValidationFailure(f"suite {report['suite']} failed")
    return EXIT_OK


def cmd_validate(args):
    # The fq suite defaults to the acceptance-grade table resolution;
    # the other suites only need a coarse table for kernel evaluation.
    fq_scale = args.suite == "fq"
    n_rho = args.n_rho if args.n_rho is not None else (1001 if fq_scale else 201)
    n_grid = args.n_grid if args.n_grid is not None else (2001 if fq_scale else 1001)
    if args.suite == "properties":
        report = validation.property_suite(
            mc_samples=args.mc_samples, mc_seed=args.mc_seed,
            data_dir=args.data_dir,
        )
        if args.deterministic:
            report["elapsed_seconds"] = 0.0
        for check in report["checks"]:
            status = "PASS" if check["passed"] else "FAIL"
            print(f"[{status}] {check['name']}: {check['detail']}")
        print(
            f"{report['n_checks'] - report['n_failed']}/{report['n_checks']} "
            "checks passed"
        )
        return _emit_suite_report(report, args, plotting.plot_property_suite)
    if args.suite == "fq":
        report = validation.fq_suite(
            n_rho=n_rho,
            r_max=args.r_max,
            n_grid=n_grid,
            mc_samples=args.mc_samples,
            mc_seed=args.mc_seed,
        )
        if args.deterministic:
            report["q2"]["build_seconds"] = 0.0
        print(
            f"q2 max deviation {report['q2']['max_abs_diff']:.3e}; "
            f"worst MC |z| "
            f"{max(abs(c['z']) for c in report['mc_checks']):.2f}; "
            f"ratio-scheme bias {report['ratio_scheme']['max_abs_diff_vs_closed_form']:.3g}"
        )
        return _emit_suite_report(report, args, plotting.plot_fq_suite)
    if args.suite == "prop1":
        if args.table:
            table = load_table(args.table)
            if table.q != 2:
                raise UsageError("prop1 needs a q=2 table")
        else:
            table = build_table(2, n_rho, QuadratureGrid(args.r_max, n_grid))
        seed = args.seed if args.seed is not None else 20260822
        report = validation.prop1_residual_suite(table, seed=seed)
        print(f"max residual {report['max_residual']:.3e} (tol {1e-3:g})")
        return _emit_suite_report(report, args, plotting.plot_prop1_suite)
    # theorem1
    if args.table:
        table = load_table(args.table)
    else:
        table = build_table(3, n_rho, QuadratureGrid(args.r_max, n_grid))
    report = validation.theorem1_suite(
        table,
        width=args.width,
        small_width=args.small_width,
        n_networks=args.n_networks,
        n_seeds=args.n_seeds,
        base_seed=args.seed if args.seed is not None else 0,
        depth=args.depth,
    )
    print(
        f"gap at width {args.width}: {report['gaps'][1]:.4f} "
        f"(tol {report['config']['tol']:g}); "
        f"at width {args.small_width}: {report['gaps'][0]:.4f}; "
        f"2x ordering {'holds' if report['ordering_holds'] else 'not resolved'}"
    )
    return _emit_suite_report(report, args, plotting.plot_theorem1_suite)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mnngp",
        description="Maxout-network Gaussian-process kernels: tables, "
        "kernels, inference, and validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    table = sub.add_parser("table", help="build or check F_q lookup tables")
    table_sub = table.add_subparsers(dest="table_command", required=True)
    build = table_sub.add_parser("build", help="compute and write a table")
    build.add_argument("--q", type=int, required=True)
    build.add_argument("--n-rho", type=int, default=1001)
    build.add_argument("--r-max", type=float, default=8.0)
    build.add_argument("--n-grid", type=int, default=2001)
    build.add_argument("--scheme", choices=("product", "ratio"), default="product")
    build.add_argument("--out", required=True)
    build.set_defaults(handler=cmd_table_build)
    check = table_sub.add_parser("check", help="compare a q=2 table to closed form")
    check.add_argument("--table", required=True)
    check.add_argument("--threshold", type=float, default=1e-3)
    check.add_argument("--out-csv", required=True)
    check.add_argument("--no-plot", action="store_true")
    check.set_defaults(handler=cmd_table_check)

    kernel = sub.add_parser("kernel", help="evaluate a kernel block")
    kernel.add_argument("--table", required=True)
    kernel.add_argument("--q", type=int, required=True)
    kernel.add_argument("--depth", type=int, required=True)
    kernel.add_argument("--sigma-b2", type=float, required=True)
    kernel.add_argument("--sigma-w2", type=float, required=True)
    kernel.add_argument("--x", required=True)
    kernel.add_argument("--y")
    kernel.add_argument("--out", required=True)
    kernel.add_argument("--no-plot", action="store_true")
    kernel.set_defaults(handler=cmd_kernel)

    infer = sub.add_parser("infer", help="classify with the GP posterior")
    infer.add_argument("--dataset", choices=("mnist", "cifar10", "csv"),
                       required=True)
    infer.add_argument("--train-images")
    infer.add_argument("--train-labels")
    infer.add_argument("--test-images")
    infer.add_argument("--test-labels")
    infer.add_argument("--n-train", type=int, required=True)
    infer.add_argument("--n-val", type=int, default=0)
    infer.add_argument("--repeats", type=int, default=5)
    infer.add_argument("--seed", type=int, default=0)
    infer.add_argument("--table", required=True)
    infer.add_argument("--q", type=int, required=True)
    infer.add_argument("--depth", type=int, required=True)
    infer.add_argument("--sigma-b2", type=float, required=True)
    infer.add_argument("--sigma-w2", type=float, required=True)
    infer.add_argument("--noise0", type=float, default=1e-10)
    infer.add_argument("--out", required=True)
    infer.add_argument("--no-plot", action="store_true")
    infer.add_argument("--deterministic", action="store_true")
    infer.set_defaults(handler=cmd_infer)

    gridsearch = sub.add_parser("gridsearch", help="hyperparameter sweep")
    gridsearch.add_argument("--config", required=True)
    gridsearch.add_argument("--budget", type=int)
    gridsearch.add_argument("--out")
    gridsearch.add_argument("--no-plot", action="store_true")
    gridsearch.add_argument("--deterministic", action="store_true")
    gridsearch.set_defaults(handler=cmd_gridsearch)

    validate = sub.add_parser("validate", help="run a validation suite")
    validate.add_argument(
        "suite",
        nargs="?",
        default="properties",
        choices=("properties", "fq", "prop1", "theorem1"),
    )
    validate.add_argument("--n-rho", type=int)
    validate.add_argument("--r-max", type=float, default=8.0)
    validate.add_argument("--n-grid", type=int)
    validate.add_argument("--mc-samples", type=int, default=10_000_000)
    validate.add_argument("--mc-seed", type=int, default=9090)
    validate.add_argument("--data-dir")
    validate.add_argument("--table")
    validate.add_argument("--seed", type=int)
    validate.add_argument("--width", type=int, default=2048)
    validate.add_argument("--small-width", type=int, default=128)
    validate.add_argument("--n-networks", type=int, default=20000)
    validate.add_argument("--n-seeds", type=int, default=5)
    validate.add_argument("--depth", type=int, default=2)
    validate.add_argument("--out")
    validate.add_argument("--no-plot", action="store_true")
    validate.add_argument("--deterministic", action="store_true")
    validate.set_defaults(handler=cmd_validate)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (UsageError, DomainError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ConditioningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
