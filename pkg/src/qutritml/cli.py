"""Command-line entry point: ``qutritml <subcommand> [flags]``.

Subcommands: gram, qksvm, qnn, svm, boundary, metrics.  Every flag overrides
the matching key of the ``--config`` file.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, DataParseError, ValidationError
from .experiment import (
    ExperimentConfig,
    load_config,
    read_predictions_csv,
    run_experiment,
    to_json,
)
from .metrics import compute_metrics

# flag dest -> config attribute
_OVERRIDES = {
    "seed": "seed",
    "dataset": "dataset",
    "arch": "arch",
    "layers": "layers",
    "epochs": "epochs",
    "batch": "batch",
    "lr": "lr",
    "out": "out",
    "boundary_res": "boundary_res",
    "pca": "pca",
    "n": "n_samples",
    "noise": "noise",
    "angle_scale": "angle_scale",
    "train_fraction": "train_fraction",
    "shots": "shots",
    "C": "C",
    "label_column": "label_column",
    "delimiter": "delimiter",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat 'section.key = value' config file")
    p.add_argument("--seed", type=int, help="master seed (required here or in the config)")
    p.add_argument("--dataset", metavar="NAME|PATH",
                   help="iris, wine, glass, seed(s), xor, moons, circles, or a CSV path")
    p.add_argument("--arch", choices=("single", "two"))
    p.add_argument("--layers", type=int, help="QNN layers")
    p.add_argument("--epochs", type=int, help="QNN max epochs")
    p.add_argument("--batch", type=int, help="QNN mini-batch size")
    p.add_argument("--lr", type=float, help="RMSProp learning rate")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--boundary-res", type=int, dest="boundary_res", metavar="N",
                   help="decision-boundary grid resolution (2-feature datasets)")
    p.add_argument("--no-hadamard", action="store_true", help="drop the leading Hadamard gates")
    p.add_argument("--pca", type=int, metavar="K", help="keep K principal components (0 = none)")
    p.add_argument("--no-scale", action="store_true", help="skip standardization")
    p.add_argument("--n", type=int, help="synthetic dataset size")
    p.add_argument("--noise", type=float, help="synthetic jitter standard deviation")
    p.add_argument("--angle-scale", type=float, dest="angle_scale",
                   help="multiply preprocessed features (rotation angles) by this factor "
                        "(default: 1/sqrt(feature rotations per qutrit * variance))")
    p.add_argument("--train-fraction", type=float, dest="train_fraction")
    p.add_argument("--shots", type=int, help="sample kernel entries with this many shots")
    p.add_argument("--C", type=float, dest="C", help="SVM soft-margin constant")
    p.add_argument("--label-column", dest="label_column", help="label column name or index for CSV input")
    p.add_argument("--delimiter", help="CSV delimiter, or 'whitespace' (e.g. the UCI seeds file)")
    p.add_argument("--no-header", action="store_true", help="the input file has no header row")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qutritml", description="Qutrit kernel SVM and QNN experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "gram": "write the training-split quantum Gram matrix (gram.csv)",
        "qksvm": "fit and evaluate the quantum-kernel SVM",
        "qnn": "train and evaluate the qutrit neural network",
        "svm": "fit and evaluate the classical RBF SVM baseline",
        "boundary": "export a decision-boundary grid (boundary.csv)",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _common(p)
        if name == "boundary":
            p.add_argument("--task", choices=("qksvm", "qnn", "svm"), help="model to draw (default qksvm)")
    m = sub.add_parser("metrics", help="recompute metrics.json from a predictions CSV")
    m.add_argument("predictions", metavar="CSV", help="file with y_true and y_pred columns")
    m.add_argument("--classes", type=int, help="number of classes (default: inferred)")
    m.add_argument("--out", metavar="DIR", help="write metrics.json here instead of stdout")
    return parser


def config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    for dest, attr in _OVERRIDES.items():
        v = getattr(args, dest, None)
        if v is not None:
            setattr(cfg, attr, v)
    if args.no_hadamard:
        cfg.hadamard = False
    if args.no_scale:
        cfg.scale = False
    if args.no_header:
        cfg.header = False
    cmd = args.command
    if cmd in ("qksvm", "qnn", "svm"):
        cfg.task = cmd
    elif cmd == "gram":
        cfg.task = "qksvm"
        cfg.write_gram = True
    elif cmd == "boundary":
        if args.task:
            cfg.task = args.task
        if not cfg.boundary_res:
            cfg.boundary_res = 50
    return cfg


def _metrics_command(args) -> int:
    y_true, y_pred = read_predictions_csv(args.predictions)
    report = compute_metrics(y_true, y_pred, args.classes)
    text = to_json(report.to_dict())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "metrics":
            return _metrics_command(args)
        result = run_experiment(config_from_args(args))
    except (ConfigError, ValidationError, DataParseError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        sys.stderr.write(json.dumps(err) + "\n")
        return 2 if isinstance(exc, ConfigError) else 1
    m = result.metrics
    print(f"{m['task']} {m['dataset']}: test accuracy {m['accuracy']:.4f}, "
          f"macro F1 {m['macro_f1']:.4f} -> {result.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
