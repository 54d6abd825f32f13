"""Metrics, the repeated random-split protocol and cross-validated tuning."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .boosting import BoostConfig, BoostedModel, fit_gbm
from .data import Dataset, encode, fit_encoding, kfold_indices, random_split

DEFAULT_M_GRID = (50, 100, 200, 400)
DEFAULT_DEPTH_GRID = (1, 2, 3, 4, 5, 6)


class UndefinedCorrelationError(ValueError):
    """Pearson correlation requested for a constant sequence."""


def _pair(y, yhat):
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.ndim != 1 or y.shape != yhat.shape:
        raise ValueError("y and yhat must be 1-d sequences of equal length")
    return y, yhat


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    if len(y) == 0:
        raise ValueError("mae of empty sequences is undefined")
    return float(np.mean(np.abs(yhat - y)))


def pearson(y, yhat) -> float:
    """Sample correlation coefficient; raises on constant input."""
    y, yhat = _pair(y, yhat)
    if len(y) < 2:
        raise ValueError("pearson needs at least 2 points")
    if np.all(y == y[0]) or np.all(yhat == yhat[0]):
        raise UndefinedCorrelationError("undefined correlation: constant input")
    a = y - math.fsum(y) / len(y)
    b = yhat - math.fsum(yhat) / len(yhat)
    num = math.fsum(a * b)
    den = math.sqrt(math.fsum(a * a) * math.fsum(b * b))
    if den == 0.0:
        raise UndefinedCorrelationError("undefined correlation: zero variance")
    return min(1.0, max(-1.0, num / den))


@dataclass(frozen=True)
class SplitResult:
    seed: int
    mae: float
    pearson: float


@dataclass(frozen=True)
class EvalSummary:
    per_split: tuple[SplitResult, ...]
    mean_mae: float
    mean_pearson: float
    std_mae: float
    n_rows: int = 0
    test_fraction: float = 0.2

    @classmethod
    def from_splits(cls, per_split: Sequence[SplitResult], n_rows: int = 0,
                    test_fraction: float = 0.2) -> "EvalSummary":
        maes = [s.mae for s in per_split]
        rs = [s.pearson for s in per_split]
        k = len(per_split)
        mean_mae = math.fsum(maes) / k
        std = math.sqrt(math.fsum((m - mean_mae) ** 2 for m in maes) / (k - 1)) if k > 1 else 0.0
        return cls(tuple(per_split), mean_mae, math.fsum(rs) / k, std, n_rows, test_fraction)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["split", "seed", "mae", "pearson"])
        for i, s in enumerate(self.per_split):
            w.writerow([i, s.seed, repr(s.mae), repr(s.pearson)])
        w.writerow(["mean", "", repr(self.mean_mae), repr(self.mean_pearson)])
        w.writerow(["std", "", repr(self.std_mae), ""])
        return buf.getvalue()


def fit_on_rows(dataset: Dataset, rows, config: BoostConfig) -> BoostedModel:
    """Fit encoding and model using only ``rows`` of ``dataset``."""
    train = dataset.take(rows)
    enc = fit_encoding(train)
    return fit_gbm(encode(train, enc), train.target, config, schema=dataset.schema)


def score_rows(model: BoostedModel, dataset: Dataset, rows) -> tuple[np.ndarray, np.ndarray]:
    test = dataset.take(rows)
    return test.target, model.predict_matrix(encode(test, model.encoding_map))


def repeated_split_eval(dataset: Dataset, config: BoostConfig, n_splits: int = 50,
                        test_fraction: float = 0.2, base_seed: int = 0) -> EvalSummary:
    """Average test MAE and Pearson correlation over random train/test splits.

    Split ``s`` uses seed ``base_seed + s``. Encoding and model see training
    rows only.
    """
    if n_splits < 1:
        raise ValueError("n_splits must be >= 1")
    results = []
    for s in range(n_splits):
        seed = base_seed + s
        train, test = random_split(dataset.n_rows, test_fraction, seed)
        model = fit_on_rows(dataset, train, config)
        y, yhat = score_rows(model, dataset, test)
        results.append(SplitResult(seed, mae(y, yhat), pearson(y, yhat)))
    return EvalSummary.from_splits(results, dataset.n_rows, test_fraction)


def baseline_mean_eval(dataset: Dataset, n_splits: int = 50, test_fraction: float = 0.2,
                       base_seed: int = 0) -> float:
    """Mean test MAE of predicting the training-set mean (no Pearson; it is constant)."""
    vals = []
    for s in range(n_splits):
        train, test = random_split(dataset.n_rows, test_fraction, base_seed + s)
        const = math.fsum(dataset.target[train]) / len(train)
        vals.append(mae(dataset.target[test], np.full(len(test), const)))
    return math.fsum(vals) / len(vals)


@dataclass(frozen=True)
class TuneResult:
    grid: tuple[tuple[int, int, float], ...]  # (M, depth, cv_mean_mae)
    best: tuple[int, int]

    @property
    def best_mae(self) -> float:
        for m, d, score in self.grid:
            if (m, d) == self.best:
                return score
        raise KeyError(self.best)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iterations", "depth", "cv_mean_mae", "best"])
        for m, d, score in self.grid:
            w.writerow([m, d, repr(score), int((m, d) == self.best)])
        return buf.getvalue()


def select_best(grid: Sequence[tuple[int, int, float]]) -> tuple[int, int]:
    m, d, _ = min(grid, key=lambda t: (t[2], t[0], t[1]))
    return m, d


def cv_tune(dataset: Dataset, M_grid: Sequence[int] = DEFAULT_M_GRID,
            depth_grid: Sequence[int] = DEFAULT_DEPTH_GRID, k: int = 5, seed: int = 0,
            config_base: Optional[BoostConfig] = None, staged: bool = True) -> TuneResult:
    """k-fold CV mean MAE for every (M, depth) pair.

    With ``staged=True`` each (fold, depth) is trained once at ``max(M_grid)``
    and smaller M are scored from the stage-wise predictions; stage m of a
    longer run is identical to a run stopped at m, so the scores match
    retraining exactly.
    """
    if not M_grid or not depth_grid:
        raise ValueError("grids must be non-empty")
    config_base = config_base or BoostConfig()
    M_grid = sorted(set(int(m) for m in M_grid))
    depth_grid = sorted(set(int(d) for d in depth_grid))
    folds = kfold_indices(dataset.n_rows, k, seed)
    scores = {(m, d): [] for m in M_grid for d in depth_grid}
    for train, val in folds:
        tr = dataset.take(train)
        va = dataset.take(val)
        enc = fit_encoding(tr)
        X_tr, X_va = encode(tr, enc), encode(va, enc)
        for d in depth_grid:
            if staged:
                cfg = replace(config_base, n_iterations=M_grid[-1], max_depth=d)
                model = fit_gbm(X_tr, tr.target, cfg)
                wanted = set(M_grid)
                for m, pred in enumerate(model.staged_predict_matrix(X_va)):
                    if m in wanted:
                        scores[(m, d)].append(mae(va.target, pred))
            else:
                for m in M_grid:
                    cfg = replace(config_base, n_iterations=m, max_depth=d)
                    model = fit_gbm(X_tr, tr.target, cfg)
                    scores[(m, d)].append(mae(va.target, model.predict_matrix(X_va)))
    grid = tuple((m, d, math.fsum(scores[(m, d)]) / k) for d in depth_grid for m in M_grid)
    return TuneResult(grid, select_best(grid))


def _table(header, rows) -> list[str]:
    rows = [header] + rows
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    sep = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    lines = [sep]
    for r in rows:
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(r, widths)) + " |")
        lines.append(sep)
    return lines


def _protocol_note(summary: EvalSummary) -> str:
    pct = int(round(summary.test_fraction * 100))
    return (f"Gradient Boosting: metrics on {pct}% test sets averaged over "
            f"{len(summary.per_split)} random train/test splits of {summary.n_rows} rows.")


def summary_table(summary: EvalSummary) -> str:
    lines = _table(("", "Gradient Boosting"), [
        ("MAE", f"{summary.mean_mae:.2f}"),
        ("Pearson corr. coeff.", f"{summary.mean_pearson:.2f}"),
    ])
    return "\n".join(lines + [_protocol_note(summary)]) + "\n"


def comparison_table(summary: EvalSummary, baseline_mae: float, baseline_pearson: float,
                     n_baseline: int) -> str:
    """Side-by-side metrics of an existing model and the boosted model.

    The existing model is scored on every row with a known prediction, not on
    the test sets, and the footnote says so.
    """
    lines = _table(("", "Existing model", "Gradient Boosting"), [
        ("MAE", f"{baseline_mae:.2f}", f"{summary.mean_mae:.2f}"),
        ("Pearson corr. coeff.", f"{baseline_pearson:.2f}", f"{summary.mean_pearson:.2f}"),
    ])
    lines.append(_protocol_note(summary))
    lines.append(f"Existing model: metrics over all {n_baseline} rows with a known "
                 f"prediction (not restricted to test sets).")
    return "\n".join(lines) + "\n"


def baseline_metrics(dataset: Dataset) -> Optional[tuple[float, float, int]]:
    """MAE, Pearson and row count of the schema's baseline column, if any."""
    name = dataset.schema.baseline_name
    if name is None or name not in dataset.columns:
        return None
    pred = np.asarray(dataset.columns[name], dtype=float)
    known = ~np.isnan(pred)
    if known.sum() < 2:
        return None
    y = dataset.target[known]
    return mae(y, pred[known]), pearson(y, pred[known]), int(known.sum())
