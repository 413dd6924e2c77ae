"""Command-line entry point wiring the pipeline stages.

Stages: synth -> label -> correlate -> stats -> featurize -> split ->
train -> eval; ``pipeline`` chains them all under one seed. Exit codes:
0 success, 1 stage failure, 2 usage error. Diagnostics go to stderr; data
only to files or stdout.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .correlation import build_correlation_space
from .coverage_stats import (
    best_sd_alignment,
    covering_count_stats,
    emit_report,
    time_to_first_covering,
)
from .errors import InterflowError
from .evalkit import (
    LinearModel,
    classification_metrics,
    feature_group_importance,
    train_logistic,
)
from .featurizer import build_matrix, make_schema, train_test_split
from .flow_model import NS_PER_S, ONOSplit
from .ingest import (
    FORMAT_VERSION,
    read_feature_matrix,
    read_labels,
    read_schema_sidecar,
    read_space,
    read_trace,
    write_feature_matrix,
    write_labels,
    write_schema_sidecar,
    write_space,
    write_trace,
)
from .sd_labeling import SDConfig, label_flowset
from .synth import PRESETS, generate, scenario_presets


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _open_trace(path: str):
    p = Path(path)
    if not p.exists():
        raise InterflowError(f"input file not found: {path}")
    return p.open()


def _sd_config(args) -> SDConfig:
    return SDConfig(
        method=args.method,
        z_threshold=args.z_threshold,
        iqr_multiplier=args.iqr_multiplier,
        min_run=args.min_run,
        channel=args.channel,
    )


def _add_sd_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", default="robust_z", choices=("robust_z", "iqr", "union"))
    p.add_argument("--z-threshold", type=float, default=3.5)
    p.add_argument("--iqr-multiplier", type=float, default=1.5)
    p.add_argument("--min-run", type=int, default=2)
    p.add_argument("--channel", default="delay", choices=("delay", "jitter", "either"))


def cmd_synth(args) -> int:
    cfg = scenario_presets(args.preset, seed=args.seed, lag_s=args.lag)
    flows, truth = generate(cfg)
    with open(args.out, "w") as f:
        write_trace(flows, f)
    if args.truth:
        with open(args.truth, "w") as f:
            f.write(f"#version={FORMAT_VERSION}\n")
            f.write("flow_id,episode_index,lag_s\n")
            for p in truth:
                f.write(f"{p.flow_id},{p.episode_index},{_fmt_float(p.lag_s)}\n")
    return 0


def cmd_label(args) -> int:
    with _open_trace(args.trace) as f:
        flows = read_trace(f)
    labeled = label_flowset(flows, _sd_config(args), ONOSplit(args.m))
    with open(args.out, "w") as f:
        write_labels(labeled, f)
    return 0


def cmd_correlate(args) -> int:
    with _open_trace(args.trace) as f:
        flows = read_trace(f)
    space = build_correlation_space(
        flows, ONOSplit(args.m), int(args.active_timeout * NS_PER_S)
    )
    with open(args.out, "w") as f:
        write_space(space, f)
    return 0


def cmd_stats(args) -> int:
    with _open_trace(args.trace) as f:
        flows = read_trace(f)
    with _open_trace(args.labels) as f:
        labeled = read_labels(f, ONOSplit(args.m))
    with _open_trace(args.space) as f:
        read_space(f)  # validates the file referenced by the chain
    # the space file stores only summary indices; rebuild matches in full
    space = build_correlation_space(
        flows, ONOSplit(args.m), int(args.active_timeout * NS_PER_S)
    )
    which = args.which
    counts = timeliness = alignment = None
    if which in ("counts", "all"):
        counts = covering_count_stats(space, labeled)
    if which in ("timeliness", "all"):
        timeliness = time_to_first_covering(
            space, labeled, ONOSplit(args.m), int(args.active_timeout * NS_PER_S)
        )
    if which in ("alignment", "all"):
        alignment = best_sd_alignment(space, labeled, selection=args.selection)
    emit_report(args.out, counts=counts, timeliness=timeliness, alignment=alignment)
    return 0


def cmd_featurize(args) -> int:
    with _open_trace(args.trace) as f:
        flows = read_trace(f)
    with _open_trace(args.labels) as f:
        labeled = read_labels(f, ONOSplit(args.m))
    timeout = int(args.active_timeout * NS_PER_S)
    space = build_correlation_space(flows, ONOSplit(args.m), timeout)
    schema = make_schema(args.m, args.k, flows.taxonomy)
    rows = build_matrix(labeled, space, schema, timeout)
    with open(args.out, "w") as f:
        write_feature_matrix(rows, schema, f)
    with open(args.schema_out, "w") as f:
        write_schema_sidecar(schema, f)
    return 0


def cmd_split(args) -> int:
    with _open_trace(args.schema) as f:
        schema = read_schema_sidecar(f)
    with _open_trace(args.matrix) as f:
        rows = read_feature_matrix(f, schema)
    train, test = train_test_split(rows, args.fraction, args.balance, args.seed)
    with open(args.train_out, "w") as f:
        write_feature_matrix(train, schema, f)
    with open(args.test_out, "w") as f:
        write_feature_matrix(test, schema, f)
    return 0


def _write_model(model: LinearModel, path: str) -> None:
    with open(path, "w") as f:
        f.write(f"#version={FORMAT_VERSION}\n")
        f.write(f"l2_lambda={_fmt_float(model.l2_lambda)}\n")
        f.write(f"bias={_fmt_float(model.bias)}\n")
        for name, arr in (
            ("weights", model.weights),
            ("feature_mean", model.feature_mean),
            ("feature_std", model.feature_std),
        ):
            f.write(f"{name}={','.join(_fmt_float(v) for v in arr)}\n")


def _read_model(path: str) -> LinearModel:
    fields: dict[str, str] = {}
    with _open_trace(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            fields[key] = value
    def arr(key):
        return np.array([float(v) for v in fields[key].split(",")])
    return LinearModel(
        weights=arr("weights"),
        bias=float(fields["bias"]),
        l2_lambda=float(fields["l2_lambda"]),
        feature_mean=arr("feature_mean"),
        feature_std=arr("feature_std"),
    )


def cmd_train(args) -> int:
    with _open_trace(args.schema) as f:
        schema = read_schema_sidecar(f)
    with _open_trace(args.train) as f:
        rows = read_feature_matrix(f, schema)
    x = np.stack([r.values for r in rows])
    y = np.array([r.label_sd for r in rows], dtype=float)
    model = train_logistic(
        x, y, l2_lambda=args.l2, max_iter=args.max_iter, seed=args.seed
    )
    _write_model(model, args.out)
    return 0


def cmd_eval(args) -> int:
    with _open_trace(args.schema) as f:
        schema = read_schema_sidecar(f)
    with _open_trace(args.test) as f:
        rows = read_feature_matrix(f, schema)
    model = _read_model(args.model)
    x = np.stack([r.values for r in rows])
    y = np.array([r.label_sd for r in rows])
    metrics = classification_metrics(model.scores(x), y)
    importance = feature_group_importance(model, schema)
    with open(args.out, "w") as f:
        f.write(f"#version={FORMAT_VERSION}\n")
        f.write(f"auroc={_fmt_float(metrics.auroc)}\n")
        f.write(f"balanced_accuracy={_fmt_float(metrics.balanced_accuracy)}\n")
        for k in ("tp", "fp", "tn", "fn"):
            f.write(f"{k}={getattr(metrics, k)}\n")
        for group, value in importance:
            f.write(f"importance.{group}={_fmt_float(value)}\n")
    return 0


def cmd_pipeline(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ns = argparse.Namespace(**vars(args))
    ns.out, ns.truth = str(out / "trace.txt"), str(out / "truth.csv")
    cmd_synth(ns)
    ns = argparse.Namespace(**vars(args))
    ns.trace, ns.out = str(out / "trace.txt"), str(out / "labels.txt")
    cmd_label(ns)
    ns = argparse.Namespace(**vars(args))
    ns.trace, ns.out = str(out / "trace.txt"), str(out / "space.csv")
    cmd_correlate(ns)
    ns = argparse.Namespace(**vars(args))
    ns.trace, ns.labels = str(out / "trace.txt"), str(out / "labels.txt")
    ns.space, ns.out, ns.which, ns.selection = (
        str(out / "space.csv"), str(out / "stats"), "all", "min_abs",
    )
    cmd_stats(ns)
    ns = argparse.Namespace(**vars(args))
    ns.trace, ns.labels = str(out / "trace.txt"), str(out / "labels.txt")
    ns.out, ns.schema_out = str(out / "matrix.csv"), str(out / "schema.json")
    cmd_featurize(ns)
    ns = argparse.Namespace(**vars(args))
    ns.matrix, ns.schema = str(out / "matrix.csv"), str(out / "schema.json")
    ns.train_out, ns.test_out = str(out / "train.csv"), str(out / "test.csv")
    cmd_split(ns)
    ns = argparse.Namespace(**vars(args))
    ns.train, ns.schema = str(out / "train.csv"), str(out / "schema.json")
    ns.out = str(out / "model.txt")
    cmd_train(ns)
    ns = argparse.Namespace(**vars(args))
    ns.test, ns.schema = str(out / "test.csv"), str(out / "schema.json")
    ns.model, ns.out = str(out / "model.txt"), str(out / "metrics.txt")
    cmd_eval(ns)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interflow",
        description="Inter-flow service-degradation detection pipeline",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"interflow {__version__} (format v{FORMAT_VERSION})",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="upper bound on worker threads (stages currently run on one)",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", help="generate a synthetic trace")
    p.add_argument("--preset", required=True, choices=PRESETS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lag", type=float, default=60.0, help="alignment_lag lead (s)")
    p.add_argument("--out", required=True)
    p.add_argument("--truth", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("label", help="detect SD events per flow")
    p.add_argument("--trace", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_sd_flags(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("correlate", help="enumerate covering flows")
    p.add_argument("--trace", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--active-timeout", type=float, default=300.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("stats", help="coverage statistics reports")
    p.add_argument("--trace", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--space", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--active-timeout", type=float, default=300.0)
    p.add_argument(
        "--which", default="all", choices=("counts", "timeliness", "alignment", "all")
    )
    p.add_argument("--selection", default="min_abs", choices=("min_abs", "signed_min"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("featurize", help="build the feature matrix")
    p.add_argument("--trace", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--active-timeout", type=float, default=300.0)
    p.add_argument("--out", required=True)
    p.add_argument("--schema-out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("split", help="seeded train/test split")
    p.add_argument("--matrix", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--balance", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the logistic baseline")
    p.add_argument("--train", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run all stages with one seed")
    p.add_argument("--preset", required=True, choices=PRESETS)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lag", type=float, default=60.0)
    p.add_argument("--active-timeout", type=float, default=300.0)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--balance", action="store_true")
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--out", required=True)
    _add_sd_flags(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except InterflowError as exc:
        print(f"interflow: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"interflow: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
