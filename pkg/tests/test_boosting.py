import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracboost.boosting import (
    AbsoluteLoss,
    BoostConfig,
    SquaredLoss,
    fit_gbm,
    get_loss,
    line_search,
    predict,
    pseudo_residuals,
)

from oracles import central_difference, weighted_median_brute


def regression_data(seed, n=200, d=4, noise=1.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = 3 * X[:, 0] + np.where(X[:, 1] > 0, 2.0, -1.0) + noise * rng.normal(size=n)
    return X, y


def test_pseudo_residual_examples():
    assert pseudo_residuals(SquaredLoss(), [3, 5], [1, 1]).tolist() == [2, 4]
    assert pseudo_residuals(AbsoluteLoss(), [3, 0, 2], [1, 1, 2]).tolist() == [1, -1, 0]


def test_pseudo_residual_length_mismatch():
    with pytest.raises(ValueError):
        pseudo_residuals(SquaredLoss(), [1, 2], [1])
    with pytest.raises(ValueError):
        line_search(SquaredLoss(), [1, 2], [1, 1], [1])


def test_unknown_loss():
    with pytest.raises(ValueError, match="unknown loss"):
        get_loss("huber")


@pytest.mark.parametrize("loss", [SquaredLoss(), AbsoluteLoss()])
def test_gradient_matches_finite_difference(loss):
    rng = np.random.default_rng(1)
    y = rng.normal(size=1000) * 5
    F = rng.normal(size=1000) * 5
    if loss.kind == "absolute":
        keep = np.abs(y - F) > 1e-3
        y, F = y[keep], F[keep]
    fd = -central_difference(loss.evaluate, y, F)
    np.testing.assert_allclose(pseudo_residuals(loss, y, F), fd, rtol=1e-6, atol=0)


def test_squared_line_search_examples():
    assert line_search(SquaredLoss(), [2, 4], [0, 0], [1, 2]) == 2.0
    assert line_search(SquaredLoss(), [1, 1], [0, 0], [0, 0]) == 0.0


def test_absolute_line_search_examples():
    # breakpoints 1, 2, 3 with equal weight -> median 2
    assert line_search(AbsoluteLoss(), [1, 2, 3], [0, 0, 0], [1, 1, 1]) == 2.0
    # even count: every b in [1, 2] is optimal, the smallest is returned
    assert line_search(AbsoluteLoss(), [1, 2], [0, 0], [1, 1]) == 1.0
    # weights |h| pull the median toward the heavy point
    assert line_search(AbsoluteLoss(), [10, 1], [0, 0], [10, 1]) == 1.0


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-3, 3)), min_size=1, max_size=30))
def test_absolute_line_search_matches_brute_force(pairs):
    r = np.array([a for a, _ in pairs], dtype=float)
    h = np.array([b for _, b in pairs], dtype=float)
    got = line_search(AbsoluteLoss(), r, np.zeros_like(r), h)
    assert got == weighted_median_brute(r, h)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_squared_line_search_is_minimizer(seed):
    rng = np.random.default_rng(seed)
    r, h = rng.normal(size=20), rng.normal(size=20)
    b = line_search(SquaredLoss(), r, np.zeros(20), h)
    obj = lambda c: np.sum((r - c * h) ** 2)
    assert obj(b) <= min(obj(b - 1e-3), obj(b + 1e-3))


def test_init_estimates():
    assert SquaredLoss().init_estimate(np.array([1.0, 2.0, 6.0])) == 3.0
    assert AbsoluteLoss().init_estimate(np.array([1.0, 2.0, 6.0])) == 2.0
    assert SquaredLoss().init_estimate(np.array([0.1] * 7)) == 0.1


def test_single_depth_zero_stage_is_mean():
    X, y = regression_data(0, n=50)
    m = fit_gbm(X, y, BoostConfig(n_iterations=1, max_depth=0, shrinkage=1.0))
    p = m.predict_matrix(X)
    assert np.allclose(p, y.mean(), rtol=0, atol=1e-12)


@pytest.mark.parametrize("loss", ["squared", "absolute"])
def test_constant_targets_predict_exactly(loss):
    X, _ = regression_data(0, n=40)
    y = np.full(40, 7.3)
    m = fit_gbm(X, y, BoostConfig(n_iterations=20, loss=loss))
    assert np.all(m.predict_matrix(X) == 7.3)
    assert np.all(m.predict_matrix(np.full((3, 4), np.nan)) == 7.3)


def test_training_trace_matches_prediction_bitwise():
    X, y = regression_data(4)
    X[::5, 2] = np.nan
    trace = []
    m = fit_gbm(X, y, BoostConfig(n_iterations=30, max_depth=3), trace=trace)
    staged = list(m.staged_predict_matrix(X))
    assert len(trace) == len(staged) == 31
    for a, b in zip(trace, staged):
        assert a.tobytes() == b.tobytes()
    assert m.predict_matrix(X).tobytes() == trace[-1].tobytes()


@pytest.mark.parametrize("loss", ["squared", "absolute"])
def test_monotone_descent_without_guard(loss):
    X, y = regression_data(2, n=150)
    trace = []
    cfg = BoostConfig(n_iterations=60, max_depth=2, min_leaf=3, shrinkage=1.0, loss=loss)
    m = fit_gbm(X, y, cfg, trace=trace)
    assert all(b <= a for a, b in zip(m.train_loss, m.train_loss[1:]))
    lf = get_loss(loss)
    # stored steps are the exact line-search optimum, so the b = 0 fallback never fired
    for i, (b, tree) in enumerate(m.stages):
        assert b == line_search(lf, y, trace[i], tree.predict(X))


def test_train_loss_length_and_start():
    X, y = regression_data(3)
    m = fit_gbm(X, y, BoostConfig(n_iterations=15))
    assert len(m.train_loss) == 16
    assert m.train_loss[0] == pytest.approx(0.5 * np.var(y), rel=1e-12)


def test_determinism():
    X, y = regression_data(5)
    a = fit_gbm(X, y, BoostConfig(n_iterations=25))
    b = fit_gbm(X, y, BoostConfig(n_iterations=25))
    assert a.predict_matrix(X).tobytes() == b.predict_matrix(X).tobytes()


def test_inputs_not_mutated():
    X, y = regression_data(6)
    X[::4, 0] = np.nan
    X0, y0 = X.copy(), y.copy()
    fit_gbm(X, y, BoostConfig(n_iterations=5))
    assert np.array_equal(X, X0, equal_nan=True) and np.array_equal(y, y0)


def test_smaller_shrinkage_needs_more_stages():
    X, y = regression_data(7)
    fast = fit_gbm(X, y, BoostConfig(n_iterations=50, shrinkage=1.0, max_depth=2))
    slow = fit_gbm(X, y, BoostConfig(n_iterations=50, shrinkage=0.1, max_depth=2))
    assert slow.train_loss[10] > fast.train_loss[10]
    assert slow.train_loss[-1] < slow.train_loss[10]


def test_noise_free_fit():
    rng = np.random.default_rng(9)
    X = rng.uniform(-2, 2, size=(50, 2))
    y = np.where(X[:, 0] > 0, 5.0, 0.0) + np.where(X[:, 1] > 0.5, 3.0, 0.0)
    m = fit_gbm(X, y, BoostConfig(n_iterations=100, max_depth=2, min_leaf=1, shrinkage=0.5))
    assert np.mean(np.abs(m.predict_matrix(X) - y)) < 0.05 * np.std(y)


def test_absolute_loss_resists_outliers():
    X, y = regression_data(10, n=300, noise=0.3)
    y_out = y.copy()
    y_out[:15] += 500.0
    mask = np.arange(300) >= 15
    sq = fit_gbm(X, y_out, BoostConfig(n_iterations=80, max_depth=2, loss="squared"))
    ab = fit_gbm(X, y_out, BoostConfig(n_iterations=80, max_depth=2, loss="absolute"))
    err = lambda m: np.mean(np.abs(m.predict_matrix(X)[mask] - y[mask]))
    assert err(ab) < err(sq)


@pytest.mark.parametrize("kwargs", [
    {"n_iterations": 0}, {"shrinkage": 0.0}, {"shrinkage": 1.5},
    {"max_depth": -1}, {"min_leaf": 0}, {"loss": "huber"},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        BoostConfig(**kwargs)


def test_fit_input_validation():
    with pytest.raises(ValueError):
        fit_gbm(np.ones((3, 2)), [1, 2], BoostConfig())
    with pytest.raises(ValueError):
        fit_gbm(np.ones((3, 2)), [1, np.nan, 2], BoostConfig())


def test_predict_feature_count_mismatch():
    X, y = regression_data(0, n=30)
    m = fit_gbm(X, y, BoostConfig(n_iterations=3))
    with pytest.raises(ValueError):
        m.predict_matrix(np.ones((2, 3)))


def test_documented_gradient_and_step_examples():
    assert pseudo_residuals(SquaredLoss(), [3, 1], [1, 1]).tolist() == [2, 0]
    assert pseudo_residuals(AbsoluteLoss(), [3, 1, 0], [1, 1, 1]).tolist() == [1, 0, -1]
    assert line_search(SquaredLoss(), [2, 2], [0, 0], [1, 1]) == 2.0
    assert line_search(SquaredLoss(), [1, 2, 3], [0, 0, 0], [0, 0, 0]) == 0.0
    assert line_search(AbsoluteLoss(), [1, 5, 9], [0, 0, 0], [1, 1, 1]) == 5.0


def test_zero_stage_model_predicts_base():
    from fracboost.boosting import BoostedModel
    m = BoostedModel(2.5, [], 0.1, "squared")
    assert np.all(m.predict_matrix(np.ones((4, 2))) == 2.5)


def test_synthetic_noise_free_training_fit():
    from fracboost.data import encode, fit_encoding
    from fracboost.synth import SynthSpec, generate
    ds, _ = generate(SynthSpec(n_rows=50, noise_sigma=0.0))
    X = encode(ds, fit_encoding(ds))
    m = fit_gbm(X, ds.target, BoostConfig(n_iterations=200, max_depth=3, shrinkage=0.1))
    assert np.mean(np.abs(m.predict_matrix(X) - ds.target)) < 0.05 * np.std(ds.target)


def test_unseen_category_gives_finite_prediction():
    from fracboost.data import Dataset, encode, fit_encoding
    from fracboost.synth import SynthSpec, generate
    ds, _ = generate(SynthSpec(n_rows=80))
    m = fit_gbm(encode(ds, fit_encoding(ds)), ds.target, BoostConfig(n_iterations=10),
                schema=ds.schema)
    cols = dict(ds.columns)
    cols["contractor"] = ("never-seen",) * ds.n_rows
    p = predict(m, Dataset(ds.schema, ds.n_rows, cols, None))
    assert np.all(np.isfinite(p))
