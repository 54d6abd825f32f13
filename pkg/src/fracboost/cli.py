"""Command-line interface.

Exit codes: 0 success, 2 invalid flags, 3 missing or unreadable file,
4 schema or data violation, 5 invalid model file, 1 any other failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from . import analysis, evaluation, synth
from .boosting import BoostConfig, fit_gbm
from .data import SchemaError, encode, fit_encoding, load_dataset, parse_schema, random_split
from .model_io import ModelFormatError, atomic_write_text, load_model, save_model

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_DATA = 4
EXIT_MODEL = 5

log = logging.getLogger("fracboost")


class CliFileError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliFileError(f"cannot read {path}: {exc.strerror or exc}") from None


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _add_boost_flags(p: argparse.ArgumentParser) -> None:
    d = BoostConfig()
    p.add_argument("--iterations", type=int, default=d.n_iterations,
                   help="boosting iterations M (default %(default)s)")
    p.add_argument("--depth", type=int, default=d.max_depth,
                   help="maximum tree depth (default %(default)s)")
    p.add_argument("--min-leaf", type=int, default=d.min_leaf,
                   help="minimum training rows per leaf (default %(default)s)")
    p.add_argument("--shrinkage", type=float, default=d.shrinkage,
                   help="step damping in (0, 1] (default %(default)s)")
    p.add_argument("--loss", choices=("squared", "absolute"), default=d.loss)


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--schema", required=True, help="schema config (name,kind,group[,role])")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracboost",
        description="Gradient-boosted trees for post-fracturing oil-rate forecasting.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", default="synth", help="output directory (default %(default)s)")
    p.add_argument("--rows", type=int, default=synth.SynthSpec.n_rows)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=synth.SynthSpec.noise_sigma,
                   help="Gaussian noise sigma, tons/day (default %(default)s)")
    p.add_argument("--missing-rate", type=float, default=synth.SynthSpec.missing_rate)

    p = sub.add_parser("train", help="fit a model on the whole CSV")
    _add_data_flags(p)
    p.add_argument("--model", default="model.json", help="output model file")
    p.add_argument("--seed", type=int, default=0)
    _add_boost_flags(p)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--data", required=True, help="input CSV (target column optional)")
    p.add_argument("--model", default="model.json")
    p.add_argument("--out", default="predictions.csv")

    p = sub.add_parser("evaluate", help="repeated random train/test split protocol")
    _add_data_flags(p)
    p.add_argument("--out", default="evaluation.csv")
    p.add_argument("--splits", type=int, default=50)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0, help="seed of the first split")
    _add_boost_flags(p)

    p = sub.add_parser("tune", help="k-fold CV over iterations x depth")
    _add_data_flags(p)
    p.add_argument("--out", default="tune.csv")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--m-grid", type=_int_list, default=list(evaluation.DEFAULT_M_GRID))
    p.add_argument("--depth-grid", type=_int_list, default=list(evaluation.DEFAULT_DEPTH_GRID))
    p.add_argument("--seed", type=int, default=0)
    _add_boost_flags(p)

    p = sub.add_parser("report", help="histograms, best/worst quintile tables, test scatter")
    _add_data_flags(p)
    p.add_argument("--out", default="report", help="output directory")
    p.add_argument("--quintile", type=float, default=0.2)
    p.add_argument("--features", default="", help="comma-separated subset (default: all)")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    _add_boost_flags(p)
    return parser


def _config(args) -> BoostConfig:
    return BoostConfig(n_iterations=args.iterations, max_depth=args.depth,
                       min_leaf=args.min_leaf, shrinkage=args.shrinkage, loss=args.loss,
                       seed=getattr(args, "seed", 0))


def _load(args):
    schema = parse_schema(_read(args.schema))
    dataset = load_dataset(_read(args.data), schema)
    if dataset.n_dropped:
        print(f"note: dropped {dataset.n_dropped} row(s) with missing target", file=sys.stderr)
    if dataset.n_rows == 0:
        raise SchemaError("no rows with a target value")
    return dataset


def cmd_synth(args) -> None:
    spec = synth.SynthSpec(n_rows=args.rows, seed=args.seed, noise_sigma=args.noise,
                           missing_rate=args.missing_rate)
    ds, truth = synth.generate(spec)
    atomic_write_text(os.path.join(args.out, "data.csv"), ds.to_csv())
    atomic_write_text(os.path.join(args.out, "ground_truth.csv"), synth.ground_truth_csv(truth))
    atomic_write_text(os.path.join(args.out, "schema.txt"), ds.schema.to_text())
    print(f"wrote {spec.n_rows} rows to {args.out}/ (oracle MAE floor "
          f"{synth.oracle_mae_floor(spec):.4f})")


def cmd_train(args) -> None:
    ds = _load(args)
    enc = fit_encoding(ds)
    model = fit_gbm(encode(ds, enc), ds.target, _config(args), schema=ds.schema)
    save_model(model, args.model)
    print(f"trained {model.n_stages} stages on {ds.n_rows} rows; "
          f"training loss {model.train_loss[-1]:.6g}; model -> {args.model}")


def cmd_predict(args) -> None:
    model = load_model(args.model)
    if model.schema is None:
        raise ModelFormatError("model file carries no schema")
    ds = load_dataset(_read(args.data), model.schema, require_target=False)
    pred = model.predict_matrix(model.encode(ds))
    lines = ["row,prediction"] + [f"{i},{v!r}" for i, v in enumerate(pred.tolist())]
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {len(pred)} predictions to {args.out}")


def cmd_evaluate(args) -> None:
    ds = _load(args)
    summary = evaluation.repeated_split_eval(ds, _config(args), args.splits,
                                             args.test_fraction, args.seed)
    atomic_write_text(args.out, summary.to_csv())
    base = evaluation.baseline_metrics(ds)
    if base is not None:
        table = evaluation.comparison_table(summary, *base)
        atomic_write_text(os.path.splitext(args.out)[0] + "_comparison.txt", table)
    else:
        table = evaluation.summary_table(summary)
    sys.stdout.write(table)


def cmd_tune(args) -> None:
    ds = _load(args)
    res = evaluation.cv_tune(ds, args.m_grid, args.depth_grid, args.folds, args.seed,
                             _config(args))
    atomic_write_text(args.out, res.to_csv())
    m, d = res.best
    print(f"best: iterations={m} depth={d} cv_mean_mae={res.best_mae:.4f}")


def cmd_report(args) -> None:
    ds = _load(args)
    feats = [f.strip() for f in args.features.split(",") if f.strip()] or None
    if feats:
        for f in feats:
            if f not in ds.columns:
                raise SchemaError(f"unknown feature {f!r}")
    train, test = random_split(ds.n_rows, args.test_fraction, args.seed)
    model = evaluation.fit_on_rows(ds, train, _config(args))
    y, yhat = evaluation.score_rows(model, ds, test)
    pct = int(round(args.test_fraction * 100))
    written = analysis.build_report(ds, args.out, args.quintile, feats, (y, yhat),
                                    f"Gradient boosting ({pct}% test)")
    print(f"wrote {len(written)} files to {args.out}/ from {ds.n_rows} input rows")


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "predict": cmd_predict,
            "evaluate": cmd_evaluate, "tune": cmd_tune, "report": cmd_report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except CliFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
