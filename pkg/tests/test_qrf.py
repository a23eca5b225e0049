import numpy as np
import pytest

from models.qrf import qrf_fit, qrf_quantile
from models.residual_window import ResidualWindow
from utils.errors import LagLengthMismatch, WindowTooSmall
from utils.stats import empirical_quantile


def test_constant_residuals():
    model = qrf_fit([3.0] * 100, lag_window=4, n_trees=5, seed=0)
    for p in (0.0, 0.05, 0.5, 0.95, 1.0):
        assert qrf_quantile(model, [3.0] * 4, p) == 3.0


def test_single_leaf_forest_is_the_empirical_quantile():
    rng = np.random.default_rng(1)
    residuals = rng.normal(size=80)
    model = qrf_fit(ResidualWindow(80, residuals), lag_window=5, n_trees=1, seed=0, max_depth=0)
    assert model.n_trees == 1
    for p in (0.0, 0.05, 0.5, 0.9, 0.95, 1.0):
        assert qrf_quantile(model, residuals[-5:], p) == empirical_quantile(residuals[5:], p)


def test_alternating_residuals_are_predicted_from_the_last_lag():
    residuals = [10.0, -10.0] * 100
    model = qrf_fit(residuals, lag_window=1, n_trees=10, seed=4)
    assert qrf_quantile(model, [10.0], 0.5) == -10.0
    assert qrf_quantile(model, [-10.0], 0.5) == 10.0


def test_fit_is_deterministic_for_a_seed():
    rng = np.random.default_rng(2)
    residuals = rng.normal(size=300)
    recent = residuals[-8:]
    first = qrf_fit(residuals, lag_window=8, n_trees=7, seed=5)
    second = qrf_fit(residuals, lag_window=8, n_trees=7, seed=5, n_jobs=4)
    for p in (0.05, 0.25, 0.5, 0.75, 0.95):
        assert qrf_quantile(first, recent, p) == qrf_quantile(second, recent, p)


def test_extreme_levels_are_pooled_min_and_max():
    rng = np.random.default_rng(6)
    residuals = rng.normal(size=200)
    model = qrf_fit(residuals, lag_window=3, n_trees=6, seed=1)
    recent = residuals[-3:]
    pooled = np.concatenate(model.leaves_for(recent))
    assert qrf_quantile(model, recent, 0.0) == pooled.min()
    assert qrf_quantile(model, recent, 1.0) == pooled.max()


def test_quantiles_are_monotone_in_level():
    rng = np.random.default_rng(9)
    residuals = rng.standard_t(df=3, size=400)
    model = qrf_fit(residuals, lag_window=6, n_trees=8, seed=2, min_leaf_size=3)
    levels = np.linspace(0, 1, 21)
    values = [qrf_quantile(model, residuals[-6:], p) for p in levels]
    assert values == sorted(values)


def test_lag_length_mismatch():
    model = qrf_fit([1.0, 2.0, 3.0, 4.0] * 10, lag_window=4, n_trees=2, seed=0)
    with pytest.raises(LagLengthMismatch):
        qrf_quantile(model, [1.0, 2.0], 0.5)


def test_window_too_small():
    with pytest.raises(WindowTooSmall):
        qrf_fit([1.0, 2.0, 3.0], lag_window=2, n_trees=1, seed=0)
