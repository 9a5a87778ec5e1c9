"""Command-line front end.

Commands: ``synth``, ``select``, ``grid``, ``ablate``, ``stats``, ``plot``.
Global flags (``--seed``, ``--threads``, ``--out``, ``--config``) may appear
before or after the command name. Exit status is 0 on success, 2 for usage
or input errors and 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import SolverConfig, center_columns
from .data_io import atomic_write_text, load_csv, load_report, save_csv, save_report, to_jsonable
from .errors import ConfigError, DataFormatError, ShapeError
from .evaluation import derive_seed, evaluate
from .selection import fsr, select_features
from .solver import convergence_diagnostics
from .stats import ScoreTable, friedman, nemenyi_cd, pairwise_significance
from .synth import GENERATORS, make_planted

log = logging.getLogger("dscofs")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


@dataclass
class GridSpec:
    mu_candidates: tuple = (1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6)
    alpha_candidates: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    feature_counts: tuple = (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
    mu2_candidates: tuple | None = None  # None ties mu2 to mu1

    def __post_init__(self):
        for name in ("mu_candidates", "alpha_candidates", "feature_counts"):
            vals = getattr(self, name)
            if not vals or any(v <= 0 for v in vals):
                raise ConfigError(f"{name} must be a nonempty set of positive values")
        if self.mu2_candidates is not None and (
            not self.mu2_candidates or any(v <= 0 for v in self.mu2_candidates)
        ):
            raise ConfigError("mu2_candidates must be a nonempty set of positive values")


_SOLVER_FIELDS = {f.name for f in fields(SolverConfig)}
_GRID_FIELDS = {f.name for f in fields(GridSpec)}


# ----------------------------------------------------------------- helpers

def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load_config_file(path):
    if path is None:
        return {}, {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    unknown = set(data) - _SOLVER_FIELDS - _GRID_FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    solver = {k: v for k, v in data.items() if k in _SOLVER_FIELDS}
    grid = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items() if k in _GRID_FIELDS}
    return solver, grid


_SOLVER_FLAGS = [
    ("m", int), ("r", int), ("alpha", float), ("s", int),
    ("mu1", float), ("mu2", float), ("tau1", float), ("tau2", float), ("tau3", float),
    ("beta", float), ("rho", float), ("max_outer_iter", int), ("outer_tol", float),
    ("inner_max_iter", int), ("inner_tol", float), ("restarts", int),
]


def _add_solver_flags(p):
    g = p.add_argument_group("solver")
    for name, typ in _SOLVER_FLAGS:
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)


def _solver_config(args, base):
    data = dict(base)
    for name, _ in _SOLVER_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            data[name] = v
    data.pop("rng_seed", None)
    return SolverConfig.from_dict(data)


def _load_dataset(args, need_labels):
    label_column = args.label_column
    if label_column is not None and label_column.lstrip("-").isdigit():
        label_column = int(label_column)
    if getattr(args, "no_labels", False):
        label_column = None
    A, labels, names = load_csv(args.data, label_column=label_column, require_labels=need_labels)
    return A, labels, names


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _default_m(cfg, labels):
    if cfg.m is not None:
        return cfg
    if labels is None:
        raise UsageError("--m is required when the data has no labels")
    return replace(cfg, m=int(labels.max()) + 1)


def _solve_record(result, record_timing):
    rec = result.to_dict(include_timing=record_timing)
    diag = convergence_diagnostics(result)
    rec["diagnostics"] = diag
    return rec


def _nonincreasing(trace, slack=1e-10):
    return all(b <= a + slack * max(1.0, abs(a)) for a, b in zip(trace, trace[1:]))


# ----------------------------------------------------------------- commands

def cmd_synth(args):
    if args.name not in GENERATORS:
        raise UsageError(f"unknown dataset {args.name!r}; choose from {sorted(GENERATORS)}")
    ds = make_planted(args.name, n=args.n, rng=args.seed)
    out = _out_dir(args)
    save_csv(out / f"{args.name}.csv", ds.data, ds.labels)
    save_report(
        {
            "name": args.name,
            "n_samples": int(ds.data.shape[1]),
            "n_features": int(ds.data.shape[0]),
            "n_classes": ds.n_classes,
            "informative": list(ds.informative),
            "informative_1based": [i + 1 for i in ds.informative],
            "seed": args.seed,
        },
        out / f"{args.name}.informative.json",
    )
    return EXIT_OK


def cmd_select(args):
    solver_base, _ = _load_config_file(args.config)
    A_raw, labels, names = _load_dataset(args, need_labels=False)
    A = center_columns(A_raw)
    cfg = _default_m(_solver_config(args, solver_base), labels)
    count = args.count if args.count is not None else min(cfg.r, A.shape[0])
    cfg = replace(cfg, rng_seed=derive_seed(args.seed, 0))
    selected, ranking, result = select_features(A, cfg, count)
    report = {
        "command": "select",
        "data": str(args.data),
        "seed": args.seed,
        "count": int(count),
        "selected": selected.tolist(),
        "selected_1based": (selected + 1).tolist(),
        "selected_names": [names[i] for i in selected],
        "ranking": ranking.to_dict(),
        "solve": _solve_record(result, args.record_timing),
    }
    if labels is not None and args.runs > 0:
        report["evaluation"] = evaluate(A, selected, labels, runs=args.runs, rng=derive_seed(args.seed, 0, 1)).to_dict()
    save_report(report, _out_dir(args) / "select.json")
    return EXIT_OK


def _grid_cells(grid, counts):
    mu2s = grid.mu2_candidates
    pairs = (
        [(m, m) for m in grid.mu_candidates]
        if mu2s is None
        else list(itertools.product(grid.mu_candidates, mu2s))
    )
    return [
        {"mu1": mu1, "mu2": mu2, "alpha": a, "count": c}
        for c in counts
        for (mu1, mu2) in pairs
        for a in grid.alpha_candidates
    ]


def _run_cell(index, key, A, labels, cfg, seed, runs, record_timing):
    cell_cfg = replace(
        cfg,
        mu1=key["mu1"],
        mu2=key["mu2"],
        alpha=key["alpha"],
        r=key["count"],
        s=None,
        rng_seed=derive_seed(seed, index),
    )
    selected, _, result = select_features(A, cell_cfg, key["count"])
    ev = evaluate(A, selected, labels, runs=runs, rng=derive_seed(seed, index, 1))
    rec = dict(key)
    rec.update(
        index=index,
        selected=selected.tolist(),
        acc_mean=ev.acc_mean,
        acc_std=ev.acc_std,
        nmi_mean=ev.nmi_mean,
        nmi_std=ev.nmi_std,
        objective_final=result.objective_trace[-1],
        outer_iters=result.outer_iters,
        converged=result.converged,
    )
    if record_timing:
        rec["wall_time"] = result.wall_time
    return rec


def cmd_grid(args):
    solver_base, grid_base = _load_config_file(args.config)
    for name in ("mu_candidates", "alpha_candidates", "feature_counts", "mu2_candidates"):
        v = getattr(args, name, None)
        if v is not None:
            grid_base[name] = v
    grid = GridSpec(**grid_base)
    A_raw, labels, _ = _load_dataset(args, need_labels=True)
    A = center_columns(A_raw)
    d = A.shape[0]
    cfg = _default_m(_solver_config(args, solver_base), labels)
    counts = [c for c in grid.feature_counts if c <= d]
    if len(counts) < len(grid.feature_counts):
        log.warning("dropping feature counts above d=%d", d)
    if not counts:
        raise UsageError(f"no feature count <= d={d} in {list(grid.feature_counts)}")
    out = _out_dir(args)
    ckpt = out / "grid_cells"
    ckpt.mkdir(exist_ok=True)
    cells = _grid_cells(grid, counts)

    def work(i):
        key = cells[i]
        path = ckpt / f"cell_{i:05d}.json"
        if path.exists():
            try:
                rec = load_report(path)
                if all(rec.get(k) == v for k, v in key.items()) and rec.get("seed") == args.seed:
                    return rec
            except (OSError, json.JSONDecodeError):
                pass
        rec = _run_cell(i, key, A, labels, cfg, args.seed, args.runs, args.record_timing)
        rec["seed"] = args.seed
        save_report(rec, path)
        return load_report(path)

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        records = list(pool.map(work, range(len(cells))))

    best = {}
    for rec in records:
        c = rec["count"]
        if c not in best or rec["acc_mean"] > best[c]["acc_mean"]:
            best[c] = rec
    report = {
        "command": "grid",
        "data": str(args.data),
        "seed": args.seed,
        "runs": args.runs,
        "grid": to_jsonable(grid.__dict__),
        "base_config": cfg.to_dict(),
        "cells": records,
        "best": [best[c] for c in counts],
    }
    save_report(report, out / "grid.json")
    lines = ["count,acc_mean,acc_std,nmi_mean,nmi_std,mu1,mu2,alpha"]
    for c in counts:
        b = best[c]
        lines.append(
            ",".join(
                "%.17g" % b[k] if isinstance(b[k], float) else str(b[k])
                for k in ("count", "acc_mean", "acc_std", "nmi_mean", "nmi_std", "mu1", "mu2", "alpha")
            )
        )
    atomic_write_text(out / "grid_curve.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_ablate(args):
    solver_base, _ = _load_config_file(args.config)
    A_raw, labels, _ = _load_dataset(args, need_labels=True)
    A = center_columns(A_raw)
    d = A.shape[0]
    cfg = _default_m(_solver_config(args, solver_base), labels)
    count = args.count if args.count is not None else min(100, cfg.r, d)
    seed_l20 = derive_seed(args.seed, 0)
    seed_dbl = derive_seed(args.seed, 1) if args.decouple else seed_l20
    l20_cfg = replace(cfg, s=d * cfg.m, rng_seed=seed_l20)
    dbl_cfg = replace(l20_cfg, rng_seed=seed_dbl) if args.identical else replace(cfg, rng_seed=seed_dbl)

    runs = {}
    for name, c in (("l20_only", l20_cfg), ("double", dbl_cfg)):
        selected, _, result = select_features(A, c, count)
        ev = evaluate(A, selected, labels, runs=args.runs, rng=derive_seed(args.seed, 0, 1))
        rec = ev.to_dict()
        rec.update(
            objective_trace=result.objective_trace,
            objective_nonincreasing=_nonincreasing(result.objective_trace),
            outer_iters=result.outer_iters,
            converged=result.converged,
            config=result.config.to_dict(),
        )
        if args.record_timing:
            rec["wall_time"] = result.wall_time
        runs[name] = rec
    report = {
        "command": "ablate",
        "data": str(args.data),
        "seed": args.seed,
        "count": int(count),
        "shared_init": not args.decouple,
        "identical_configs": bool(args.identical),
        "fsr": fsr(runs["l20_only"]["selected"], runs["double"]["selected"], count),
        **runs,
    }
    save_report(report, _out_dir(args) / "ablate.json")
    return EXIT_OK


def _read_score_table(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if len(rows) < 2:
        raise DataFormatError(f"{path}: need a header row and at least one data row")
    header = [c.strip() for c in rows[0]]
    body = [[c.strip() for c in r] for r in rows[1:]]

    def numeric(c):
        try:
            float(c)
            return True
        except ValueError:
            return False

    named = not all(numeric(r[0]) for r in body)
    methods = header[1:] if named else header
    datasets, scores = [], []
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise DataFormatError(f"{path}: line {i + 2} has {len(r)} columns, expected {len(header)}")
        cells = r[1:] if named else r
        try:
            scores.append([float(c) for c in cells])
        except ValueError:
            raise DataFormatError(f"{path}: line {i + 2} has a non-numeric score") from None
        datasets.append(r[0] if named else f"dataset{i}")
    return ScoreTable(np.array(scores), methods=methods, datasets=datasets)


def cmd_stats(args):
    table = _read_score_table(args.scores)
    N, k = table.scores.shape
    try:
        cd = nemenyi_cd(k, N, args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = friedman(table)
    sig = pairwise_significance(res.avg_ranks, cd)
    report = {
        "command": "stats",
        "scores": str(args.scores),
        "alpha": args.alpha,
        "methods": table.methods,
        "datasets": table.datasets,
        **res.to_dict(),
        "avg_rank_by_method": dict(zip(table.methods, res.avg_ranks.tolist())),
        "critical_difference": cd,
        "significant": sig.tolist(),
    }
    save_report(report, _out_dir(args) / "stats.json")
    return EXIT_OK


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def render_svg(x, y, labels, xlabel, ylabel, size=480, margin=48):
    """Standalone SVG scatter; one colour per class, one circle per point."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def scale(v, lo, hi, a, b):
        span = hi - lo if hi > lo else 1.0
        return a + (v - lo) / span * (b - a)

    inner = size - 2 * margin
    px = scale(x, x.min(), x.max(), margin, margin + inner)
    py = scale(y, y.min(), y.max(), margin + inner, margin)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="{margin}" y="{margin}" width="{inner}" height="{inner}" fill="none" stroke="#444"/>',
    ]
    for xi, yi, lab in zip(px, py, labels):
        color = _PALETTE[int(lab) % len(_PALETTE)]
        parts.append(f'<circle cx="{xi:.2f}" cy="{yi:.2f}" r="2" fill="{color}"/>')
    parts.append(
        f'<text x="{size / 2:.1f}" y="{size - 12}" text-anchor="middle" font-size="14">{xlabel}</text>'
    )
    parts.append(
        f'<text x="14" y="{size / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 14 {size / 2:.1f})">{ylabel}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(args):
    A, labels, names = _load_dataset(args, need_labels=False)
    feats = list(args.features or [])
    if len(feats) != 2:
        raise UsageError("plot needs exactly two feature indices")
    d = A.shape[0]
    for f in feats:
        if not 0 <= f < d:
            raise UsageError(f"feature index {f} out of range 0..{d - 1}")
    if labels is None:
        labels = np.zeros(A.shape[1], dtype=np.int64)
    i, j = feats
    svg = render_svg(A[i], A[j], labels, f"feature {i} ({names[i]})", f"feature {j} ({names[j]})")
    target = Path(args.output) if args.output else _out_dir(args) / "plot.svg"
    atomic_write_text(target, svg)
    return EXIT_OK


# ----------------------------------------------------------------- parser

def _global_flags(p, suppress):
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--seed", type=int, help="base random seed (default 0)", **(kw or {"default": 0}))
    p.add_argument("--threads", type=int, help="worker threads for grid cells", **(kw or {"default": 1}))
    p.add_argument("--out", help="output directory (default .)", **(kw or {"default": "."}))
    p.add_argument("--config", help="JSON file with SolverConfig/GridSpec fields", **(kw or {"default": None}))
    p.add_argument(
        "--record-timing",
        action="store_true",
        help="include wall times in JSON (outputs are then not byte-reproducible)",
        **(kw or {"default": False}),
    )
    p.add_argument("-v", "--verbose", action="store_true", **(kw or {"default": False}))


def build_parser():
    parser = argparse.ArgumentParser(prog="dscofs", description="Double-sparsity PCA feature selection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    def data_args(p):
        p.add_argument("data", help="CSV file, one sample per row")
        p.add_argument("--label-column", default="label", help="label column name or 0-based index")
        p.add_argument("--no-labels", action="store_true", help="treat every column as a feature")

    p = add("synth", cmd_synth, "generate a planted synthetic dataset")
    p.add_argument("name", help="2spiral, banana or dartboard")
    p.add_argument("--n", type=int, default=1000, help="number of samples")

    p = add("select", cmd_select, "solve and rank features")
    data_args(p)
    _add_solver_flags(p)
    p.add_argument("--count", type=int, default=None, help="features to return (default r)")
    p.add_argument("--runs", type=int, default=50, help="K-means repetitions when labels exist (0 to skip)")

    p = add("grid", cmd_grid, "grid search over mu, alpha and feature count")
    data_args(p)
    _add_solver_flags(p)
    p.add_argument("--mu-grid", dest="mu_candidates", type=_floats, default=None)
    p.add_argument("--mu2-grid", dest="mu2_candidates", type=_floats, default=None, help="decouple mu2 from mu1")
    p.add_argument("--alpha-grid", dest="alpha_candidates", type=_floats, default=None)
    p.add_argument("--counts", dest="feature_counts", type=_ints, default=None)
    p.add_argument("--runs", type=int, default=50)

    p = add("ablate", cmd_ablate, "double sparsity versus row sparsity only")
    data_args(p)
    _add_solver_flags(p)
    p.add_argument("--count", type=int, default=None, help="top-n size for FSR (default min(100, r))")
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--decouple", action="store_true", help="use different initial points for the two runs")
    p.add_argument("--identical", action="store_true", help="disable the element budget in both runs")

    p = add("stats", cmd_stats, "Friedman test and Nemenyi critical difference")
    p.add_argument("scores", help="CSV: datasets as rows, methods as columns, header row")
    p.add_argument("--alpha", type=float, default=0.05)

    p = add("plot", cmd_plot, "SVG scatter of two features")
    data_args(p)
    p.add_argument("--features", type=int, nargs=2, metavar=("I", "J"), help="0-based feature indices")
    p.add_argument("--output", default=None, help="SVG path (default OUT/plot.svg)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", RuntimeWarning)
    try:
        if getattr(args, "runs", 1) < 0 or args.threads < 1:
            raise UsageError("--runs must be >= 0 and --threads >= 1")
        return args.func(args)
    except ArithmeticError as exc:  # NumericalError and raw overflows
        print(f"dscofs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ConfigError, DataFormatError, ShapeError, ValueError, IndexError, OSError) as exc:
        print(f"dscofs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
