"""Descriptive reports: best/worst quintile distributions, histograms, scatter.

Every SVG is rendered from the text of its CSV twin, so the CSV is the
source of truth and the picture can always be regenerated from it.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import svg
from .data import Dataset
from .model_io import atomic_write_text


def quintile_partition(targets, q: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the top and bottom ``floor(q * n)`` rows by target.

    Rows are ranked by target descending; equal targets keep their original
    order, so ties put lower indices in ``best`` and higher ones in ``worst``.
    """
    t = np.asarray(targets, dtype=float)
    if not 0.0 < q <= 0.5:
        raise ValueError(f"q must lie in (0, 0.5], got {q}")
    if t.ndim != 1 or len(t) < 2:
        raise ValueError("need at least 2 targets")
    k = int(math.floor(q * len(t)))
    order = np.argsort(-t, kind="stable")
    return order[:k], order[len(t) - k:]


def _label(v) -> str:
    if isinstance(v, str):
        return v
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


@dataclass(frozen=True)
class DistributionSlice:
    feature: str
    counts: dict[str, int]
    missing: int

    @property
    def n_present(self) -> int:
        return sum(self.counts.values())

    @property
    def freqs(self) -> dict[str, float]:
        n = self.n_present
        return {k: (v / n if n else 0.0) for k, v in self.counts.items()}


def categorical_distribution(dataset: Dataset, feature: str, indices) -> DistributionSlice:
    """Counts per category over ``indices``; numeric columns bin by exact value."""
    if feature not in dataset.columns:
        raise KeyError(f"unknown feature {feature!r}")
    idx = np.asarray(indices, dtype=np.intp)
    if len(idx) == 0:
        raise ValueError("empty index subset")
    col = dataset.columns[feature]
    counts: dict[str, int] = {}
    missing = 0
    for i in idx:
        v = col[i]
        if isinstance(v, np.floating):
            v = float(v)
        if _is_missing(v):
            missing += 1
            continue
        lab = _label(v)
        counts[lab] = counts.get(lab, 0) + 1
    return DistributionSlice(feature, counts, missing)


def _category_order(dataset: Dataset, feature: str, labels) -> list[str]:
    if dataset.schema.column(feature).kind == "numeric":
        return sorted(labels, key=float)
    return sorted(labels)


@dataclass(frozen=True)
class QuintileReport:
    feature: str
    q: float
    rows: tuple[tuple[str, int, int, float, float], ...]  # category, n_best, n_worst, f_best, f_worst
    missing_best: int
    missing_worst: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "count_best", "count_worst", "freq_best", "freq_worst"])
        for cat, nb, nw, fb, fw in self.rows:
            w.writerow([cat, nb, nw, repr(fb), repr(fw)])
        # empty category = missing cells, which are excluded from the frequencies
        w.writerow(["", self.missing_best, self.missing_worst, "", ""])
        return buf.getvalue()


def quintile_report(dataset: Dataset, feature: str, q: float = 0.2) -> QuintileReport:
    if dataset.target is None:
        raise ValueError("quintile analysis needs targets")
    best, worst = quintile_partition(dataset.target, q)
    b = categorical_distribution(dataset, feature, best)
    w = categorical_distribution(dataset, feature, worst)
    fb, fw = b.freqs, w.freqs
    cats = _category_order(dataset, feature, set(b.counts) | set(w.counts))
    rows = tuple((c, b.counts.get(c, 0), w.counts.get(c, 0), fb.get(c, 0.0), fw.get(c, 0.0))
                 for c in cats)
    return QuintileReport(feature, q, rows, b.missing, w.missing)


def render_quintile_svg(csv_text: str, feature: str) -> str:
    rows = [r for r in csv.DictReader(io.StringIO(csv_text)) if r["category"] != ""]
    labels = [r["category"] for r in rows]
    series = [[float(r["freq_best"]) for r in rows], [float(r["freq_worst"]) for r in rows]]
    return svg.bar_svg(labels, series, ["best", "worst"], f"{feature}: best vs worst",
                       ylabel="frequency")


def histogram_bins(values) -> np.ndarray:
    """Freedman-Diaconis edges; 10 equal bins if IQR is 0; one bin if constant."""
    x = np.asarray(values, dtype=float)
    x = x[~np.isnan(x)]
    if len(x) == 0:
        return np.array([0.0, 1.0])
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return np.array([lo - 0.5, hi + 0.5])
    q25, q75 = np.percentile(x, [25, 75])
    iqr = q75 - q25
    if iqr == 0:
        n_bins = 10
    else:
        width = 2.0 * iqr * len(x) ** (-1.0 / 3.0)
        n_bins = min(max(int(math.ceil((hi - lo) / width)), 1), 500)
    return np.linspace(lo, hi, n_bins + 1)


def histogram_csv(dataset: Dataset, feature: str) -> str:
    if feature not in dataset.columns:
        raise KeyError(f"unknown feature {feature!r}")
    spec = dataset.schema.column(feature)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    col = dataset.columns[feature]
    if spec.kind == "numeric":
        x = np.asarray(col, dtype=float)
        edges = histogram_bins(x)
        counts, _ = np.histogram(x[~np.isnan(x)], bins=edges)
        w.writerow(["bin_left", "bin_right", "count"])
        for i, k in enumerate(counts):
            w.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), int(k)])
    else:
        dist = categorical_distribution(dataset, feature, np.arange(dataset.n_rows))
        w.writerow(["category", "count"])
        for cat in sorted(dist.counts):
            w.writerow([cat, dist.counts[cat]])
    return buf.getvalue()


def render_histogram_svg(csv_text: str, feature: str) -> str:
    rows = list(csv.DictReader(io.StringIO(csv_text)))
    if rows and "bin_left" in rows[0]:
        edges = [float(rows[0]["bin_left"])] + [float(r["bin_right"]) for r in rows]
        return svg.histogram_svg(edges, [int(r["count"]) for r in rows], feature)
    return svg.bar_svg([r["category"] for r in rows], [[int(r["count"]) for r in rows]],
                       ["count"], feature)


def scatter_csv(y, yhat) -> str:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ValueError("actual and predicted must be equally long 1-d sequences")
    if len(y) == 0:
        raise ValueError("scatter needs at least one point")
    lines = ["actual,predicted"]
    lines += [f"{a!r},{p!r}" for a, p in zip(y.tolist(), yhat.tolist())]
    return "\n".join(lines) + "\n"


def read_scatter_csv(csv_text: str) -> tuple[np.ndarray, np.ndarray]:
    rows = list(csv.DictReader(io.StringIO(csv_text)))
    return (np.array([float(r["actual"]) for r in rows]),
            np.array([float(r["predicted"]) for r in rows]))


def render_scatter_svg(csv_text: str, title: str = "Predicted vs actual") -> str:
    y, yhat = read_scatter_csv(csv_text)
    return svg.scatter_svg(y.tolist(), yhat.tolist(), title)


def scatter_report(y, yhat, path, title: str = "Predicted vs actual") -> tuple[str, str]:
    """Write ``scatter.csv`` and ``scatter.svg`` into directory ``path``."""
    text = scatter_csv(y, yhat)
    csv_path = os.path.join(path, "scatter.csv")
    svg_path = os.path.join(path, "scatter.svg")
    atomic_write_text(csv_path, text)
    atomic_write_text(svg_path, render_scatter_svg(text, title))
    return svg_path, csv_path


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def histogram_report(dataset: Dataset, features: Sequence[str], path) -> list[str]:
    """Write ``hist_<feature>.csv`` and ``.svg`` for each feature; returns the paths."""
    for f in features:
        if f not in dataset.columns:
            raise KeyError(f"unknown feature {f!r}")
    written = []
    for f in features:
        text = histogram_csv(dataset, f)
        base = os.path.join(path, f"hist_{_safe(f)}")
        atomic_write_text(base + ".csv", text)
        atomic_write_text(base + ".svg", render_histogram_svg(text, f))
        written += [base + ".csv", base + ".svg"]
    return written


def quintile_files(dataset: Dataset, features: Sequence[str], path, q: float = 0.2) -> list[str]:
    written = []
    for f in features:
        text = quintile_report(dataset, f, q).to_csv()
        base = os.path.join(path, f"quintile_{_safe(f)}")
        atomic_write_text(base + ".csv", text)
        atomic_write_text(base + ".svg", render_quintile_svg(text, f))
        written += [base + ".csv", base + ".svg"]
    return written


def default_quintile_features(dataset: Dataset) -> list[str]:
    """Categorical features plus integer-valued numeric ones (e.g. stage count)."""
    out = []
    for c in dataset.schema.features:
        col = dataset.columns.get(c.name)
        if col is None:
            continue
        if c.kind == "categorical":
            out.append(c.name)
        else:
            x = np.asarray(col, dtype=float)
            x = x[~np.isnan(x)]
            if len(x) and np.all(x == np.round(x)) and len(np.unique(x)) <= 20:
                out.append(c.name)
    return out


def build_report(dataset: Dataset, path, q: float = 0.2,
                 features: Optional[Sequence[str]] = None,
                 scatter: Optional[tuple] = None,
                 scatter_title: str = "Predicted vs actual") -> list[str]:
    """Histograms for ``features`` (default: all), quintile tables, optional scatter."""
    os.makedirs(path, exist_ok=True)
    feats = list(features) if features else [c.name for c in dataset.schema.features]
    written = histogram_report(dataset, feats, path)
    qfeats = [f for f in default_quintile_features(dataset) if f in feats]
    written += quintile_files(dataset, qfeats, path, q)
    if scatter is not None:
        written += list(scatter_report(scatter[0], scatter[1], path, scatter_title))
    return written
