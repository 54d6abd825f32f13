"""Acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see one PASS/FAIL line each.
"""
import csv
import glob
import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from fracboost.analysis import (
    build_report,
    quintile_partition,
    render_histogram_svg,
    render_quintile_svg,
    render_scatter_svg,
)
from fracboost.boosting import AbsoluteLoss, BoostConfig, SquaredLoss, fit_gbm, pseudo_residuals
from fracboost.cli import main
from fracboost.data import Dataset, encode, fit_encoding, random_split
from fracboost.evaluation import (
    UndefinedCorrelationError,
    baseline_mean_eval,
    cv_tune,
    fit_on_rows,
    mae,
    pearson,
    repeated_split_eval,
)
from fracboost.model_io import dumps, load_model, save_model
from fracboost.synth import SynthSpec, generate, oracle_mae_floor
from fracboost.tree import fit_tree

from oracles import (
    best_stump_sse,
    central_difference,
    greedy_tree_leaves,
    partition_sse,
    random_tree_instance,
)


def verdict(n, name, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {name} ({detail})")
    assert ok, detail


def test_c1_split_search_oracle():
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        X, y, depth, min_leaf = random_tree_instance(rng)
        tree = fit_tree(X, y, depth, min_leaf)
        ids = tree.apply(X)
        got = partition_sse(y, [np.flatnonzero(ids == i) for i in np.unique(ids)])
        want = partition_sse(y, greedy_tree_leaves(X, y, depth, min_leaf))
        if got != want:
            mismatches += 1
        elif depth == 1 and not math.isclose(got, best_stump_sse(X, y, min_leaf),
                                             rel_tol=1e-9, abs_tol=1e-9):
            mismatches += 1
    dt = time.perf_counter() - t0
    verdict(1, "split search equals brute force", mismatches == 0 and dt < 60,
            f"{mismatches} mismatches of 200, {dt:.2f}s")


def test_c2_gradient_finite_differences():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = 0.0
    for loss in (SquaredLoss(), AbsoluteLoss()):
        y = rng.normal(size=1000) * 10
        F = rng.normal(size=1000) * 10
        g = pseudo_residuals(loss, y, F)
        fd = -central_difference(loss.evaluate, y, F)
        keep = np.ones(1000, bool) if loss.kind == "squared" else np.abs(y - F) > 1e-3
        worst = max(worst, float(np.max(np.abs(g[keep] - fd[keep]) / np.abs(fd[keep]))))
    dt = time.perf_counter() - t0
    verdict(2, "gradients match central differences", worst <= 1e-6 and dt < 5,
            f"max rel err {worst:.2e}, {dt:.2f}s")


def test_c3_monotone_descent():
    t0 = time.perf_counter()
    violations = 0
    for s in range(20):
        ds, _ = generate(SynthSpec(n_rows=200, seed=100 + s))
        X = encode(ds, fit_encoding(ds))
        loss = "squared" if s % 2 == 0 else "absolute"
        cfg = BoostConfig(n_iterations=200, max_depth=2 + s % 3, min_leaf=3,
                          shrinkage=1.0, loss=loss)
        tl = fit_gbm(X, ds.target, cfg).train_loss
        violations += sum(b > a for a, b in zip(tl, tl[1:]))
    dt = time.perf_counter() - t0
    verdict(3, "training loss non-increasing", violations == 0 and dt < 60,
            f"{violations} violations over 20 datasets x 200 iterations, {dt:.1f}s")


def test_c4_oracle_floor_convergence():
    spec = SynthSpec()
    ds, _ = generate(spec)
    floor = oracle_mae_floor(spec)
    t0 = time.perf_counter()
    # tune on the training rows of the first split only
    train0, _ = random_split(ds.n_rows, 0.2, 0)
    tuned = cv_tune(ds.take(train0), k=5, seed=0)
    m, d = tuned.best
    cfg = replace(BoostConfig(), n_iterations=m, max_depth=d)
    got = repeated_split_eval(ds, cfg, n_splits=10).mean_mae
    base = baseline_mean_eval(ds, n_splits=10)
    dt = time.perf_counter() - t0
    ok = floor <= got <= 1.5 * floor and got <= 0.75 * base and dt < 300
    verdict(4, "CV-tuned MAE near the noise floor", ok,
            f"M={m} depth={d}: MAE {got:.3f} in [{floor:.3f}, {1.5 * floor:.3f}], "
            f"baseline {base:.3f} (need <= {0.75 * base:.3f}), {dt:.0f}s")


def test_c5_determinism_and_no_leakage(tmp_path):
    t0 = time.perf_counter()
    assert main(["synth", "--out", str(tmp_path / "d"), "--rows", "500", "--seed", "5"]) == 0
    args = ["evaluate", "--data", str(tmp_path / "d" / "data.csv"),
            "--schema", str(tmp_path / "d" / "schema.txt"), "--splits", "10",
            "--iterations", "50"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    same_report = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    ds, _ = generate(SynthSpec(n_rows=500, seed=5))
    train, test = random_split(ds.n_rows, 0.2, 0)
    cfg = BoostConfig(n_iterations=50)
    save_model(fit_on_rows(ds, train, cfg), tmp_path / "clean.json")
    t = ds.target.copy()
    t[test] = np.random.default_rng(0).normal(size=len(test)) * 1e4
    save_model(fit_on_rows(ds.with_target(t), train, cfg), tmp_path / "dirty.json")
    same_model = (tmp_path / "clean.json").read_bytes() == (tmp_path / "dirty.json").read_bytes()
    dt = time.perf_counter() - t0
    verdict(5, "deterministic protocol, no leakage", same_report and same_model and dt < 120,
            f"report identical={same_report}, model identical={same_model}, {dt:.1f}s")


def test_c6_persistence_round_trip(tmp_path):
    t0 = time.perf_counter()
    ds, _ = generate(SynthSpec(n_rows=1000, seed=6))
    model = fit_gbm(encode(ds, fit_encoding(ds)), ds.target,
                    BoostConfig(n_iterations=50, max_depth=3), schema=ds.schema)
    cols = dict(ds.columns)
    contractor = list(cols["contractor"])
    for i in range(0, 1000, 7):
        contractor[i] = "UNSEEN-CO"
    for i in range(3, 1000, 11):
        contractor[i] = None
    cols["contractor"] = tuple(contractor)
    probe = Dataset(ds.schema, ds.n_rows, cols, None)
    path = tmp_path / "m.json"
    save_model(model, path)
    again = load_model(path)
    a = model.predict_matrix(model.encode(probe))
    b = again.predict_matrix(again.encode(probe))
    dt = time.perf_counter() - t0
    verdict(6, "save/load/predict bit-equal", a.tobytes() == b.tobytes() and dt < 10,
            f"{int(np.sum(a != b))} differing rows of 1000, {dt:.2f}s")


def test_c7_metric_examples():
    checks = [
        mae([1.5, 2.0], [1.5, 2.0]) == 0.0,
        mae([0, 0], [1, -1]) == 1.0,
        mae([2, 4, 6], [2, 4, 9]) == 1.0,
        abs(pearson([1, 2, 3, 5], [5, 7, 9, 13]) - 1.0) <= 1e-12,
        abs(pearson([1, 2, 3, 5], [-1, -2, -3, -5]) + 1.0) <= 1e-12,
        abs(pearson([1, 2, 3], [1, 3, 2]) - 0.5) <= 1e-12,
    ]
    try:
        pearson([4, 4, 4], [1, 2, 3])
        raises = False
    except UndefinedCorrelationError:
        raises = True
    verdict(7, "metric unit examples", all(checks) and raises,
            f"{sum(checks)}/{len(checks)} examples, constant input raises={raises}")


def test_c8_quintile_report_integrity(tmp_path):
    ds, truth = generate(SynthSpec(n_rows=1000, seed=8))
    best, worst = quintile_partition(ds.target, 0.2)
    sizes_ok = len(best) == len(worst) == 200 and not set(best.tolist()) & set(worst.tolist())
    written = build_report(ds, tmp_path, 0.2, scatter=(ds.target, truth))
    worst_sum_err = 0.0
    n_tables = 0
    for path in glob.glob(str(tmp_path / "quintile_*.csv")):
        rows = [r for r in csv.DictReader(open(path)) if r["category"] != ""]
        for col in ("freq_best", "freq_worst"):
            n_tables += 1
            worst_sum_err = max(worst_sum_err, abs(math.fsum(float(r[col]) for r in rows) - 1))
    twins_ok = True
    svgs = [p for p in written if p.endswith(".svg")]
    for p in svgs:
        text = open(p[:-4] + ".csv").read()
        name = os.path.basename(p)[:-4]
        if name == "scatter":
            regen = render_scatter_svg(text, "Predicted vs actual")
        elif name.startswith("hist_"):
            regen = render_histogram_svg(text, name[5:])
        else:
            regen = render_quintile_svg(text, name[len("quintile_"):])
        twins_ok &= regen == open(p).read()
    ok = sizes_ok and n_tables > 0 and worst_sum_err <= 1e-12 and twins_ok
    verdict(8, "quintile and report integrity", ok,
            f"sizes/disjoint={sizes_ok}, {n_tables} tables max |sum-1|={worst_sum_err:.1e}, "
            f"{len(svgs)} SVGs regenerate={twins_ok}")


def test_c9_desk_scale_performance():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(1000, 50))
    X[rng.random(X.shape) < 0.05] = np.nan
    y = 3 * np.nan_to_num(X[:, 0]) + np.nan_to_num(X[:, 1]) * np.nan_to_num(X[:, 2])
    y += rng.normal(size=1000)
    t0 = time.perf_counter()
    model = fit_gbm(X, y, BoostConfig(n_iterations=200, max_depth=4))
    dt = time.perf_counter() - t0
    verdict(9, "training n=1000 d=50 M=200 depth 4", model.n_stages == 200 and dt < 10,
            f"{dt:.2f}s")
