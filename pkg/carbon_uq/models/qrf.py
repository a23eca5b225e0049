"""
Quantile regression forest over lagged residuals.

Each tree is a scikit-learn regression tree grown on a bootstrap resample of
the autoregressive training pairs ``(r[i-w..i-1] -> r[i])``. After growing,
every training pair is routed through the tree and each leaf keeps the full
multiset of targets that reach it, so the forest predicts a conditional
distribution instead of a mean.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.tree import DecisionTreeRegressor

from models.residual_window import ResidualWindow
from utils.errors import LagLengthMismatch, WindowTooSmall
from utils.stats import sorted_quantile, weighted_quantile

logger = logging.getLogger("carbon_uq.qrf")

_SEED_MODULUS = 2**32


class QrfModel:
    """
    A fitted quantile regression forest.

    ``trees[k]`` is ``None`` for a single-leaf tree (depth limit 0); such a
    tree sends every input to leaf 0.
    """

    def __init__(
        self,
        trees: List[Optional[DecisionTreeRegressor]],
        leaf_targets: List[Dict[int, np.ndarray]],
        lag_window: int,
        seed: int,
    ):
        if not trees:
            raise ValueError("a forest needs at least one tree")
        self.trees = trees
        self.leaf_targets = leaf_targets
        self.lag_window = lag_window
        self.seed = seed

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def leaves_for(self, recent: Sequence[float]) -> List[np.ndarray]:
        """Target multiset (sorted) of the leaf ``recent`` reaches in each tree."""
        recent = np.asarray(recent, dtype=float)
        if recent.shape != (self.lag_window,):
            raise LagLengthMismatch(
                f"expected {self.lag_window} lagged residuals, got {recent.size}"
            )

        features = recent.reshape(1, -1)
        leaves = []
        for tree, targets in zip(self.trees, self.leaf_targets):
            leaf = 0 if tree is None else int(tree.apply(features)[0])
            leaves.append(targets[leaf])
        return leaves

    def conditional_distribution(
        self, recent: Sequence[float]
    ) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """
        Pool the reached leaves, each tree weighted equally.

        Returns:
            ``(ordered, cumulative)`` where ``cumulative`` is ``None`` when all
            leaves have the same size, in which case equal tree weights reduce
            to an unweighted multiset
        """
        leaves = self.leaves_for(recent)
        values = np.concatenate(leaves)
        order = np.argsort(values, kind="stable")

        sizes = {leaf.size for leaf in leaves}
        if len(sizes) == 1:
            return values[order], None

        weights = np.concatenate(
            [np.full(leaf.size, 1.0 / (leaf.size * len(leaves))) for leaf in leaves]
        )
        cumulative = np.cumsum(weights[order])
        cumulative /= cumulative[-1]
        return values[order], cumulative


def _training_pairs(residuals: np.ndarray, lag_window: int) -> Tuple[np.ndarray, np.ndarray]:
    features = sliding_window_view(residuals[:-1], lag_window)
    targets = residuals[lag_window:]
    return features, targets


def _fit_tree(
    features: np.ndarray,
    targets: np.ndarray,
    tree_seed: int,
    max_depth: Optional[int],
    min_leaf_size: int,
) -> Tuple[Optional[DecisionTreeRegressor], Dict[int, np.ndarray]]:
    if max_depth == 0:
        return None, {0: np.sort(targets)}

    rng = np.random.default_rng(tree_seed)
    sample = rng.integers(0, targets.size, size=targets.size)

    tree = DecisionTreeRegressor(
        max_depth=max_depth,
        min_samples_leaf=min_leaf_size,
        max_features=max(1, math.ceil(features.shape[1] / 3)),
        random_state=tree_seed % _SEED_MODULUS,
    )
    tree.fit(features[sample], targets[sample])

    leaf_of = tree.apply(features)
    leaf_targets = {
        int(leaf): np.sort(targets[leaf_of == leaf]) for leaf in np.unique(leaf_of)
    }
    return tree, leaf_targets


def qrf_fit(
    window: Union[ResidualWindow, Sequence[float]],
    lag_window: int,
    n_trees: int,
    seed: int,
    max_depth: Optional[int] = None,
    min_leaf_size: int = 5,
    n_jobs: int = 1,
) -> QrfModel:
    """
    Fit a quantile regression forest on the residual window.

    Tree k draws its bootstrap resample and feature subsets from
    ``seed + k``, so the forest does not depend on the order trees are
    fitted in and ``n_jobs`` never changes the result.

    Args:
        window: Residuals, oldest first
        lag_window: Number of lagged residuals per feature vector (w)
        n_trees: Number of trees
        seed: Base seed
        max_depth: Depth limit (``None`` = unlimited, 0 = single leaf)
        min_leaf_size: Minimum bootstrap samples per leaf
        n_jobs: Trees fitted in parallel

    Raises:
        WindowTooSmall: If the window has no more than ``lag_window + 1`` residuals
    """
    residuals = window.residuals if isinstance(window, ResidualWindow) else np.asarray(window, dtype=float)
    if residuals.size <= lag_window + 1:
        raise WindowTooSmall(
            f"{residuals.size} residuals cannot train lag window {lag_window}"
        )
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")

    features, targets = _training_pairs(residuals, lag_window)
    fitted = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_fit_tree)(features, targets, seed + k, max_depth, min_leaf_size)
        for k in range(n_trees)
    )

    trees = [tree for tree, _ in fitted]
    leaf_targets = [leaves for _, leaves in fitted]
    return QrfModel(trees, leaf_targets, lag_window, seed)


def qrf_quantile(model: QrfModel, recent: Sequence[float], p: float) -> float:
    """
    Conditional type-1 quantile of the next residual given the last w.

    Raises:
        LagLengthMismatch: If ``recent`` does not hold exactly w residuals
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    ordered, cumulative = model.conditional_distribution(recent)
    if cumulative is None:
        return sorted_quantile(ordered, p)
    return weighted_quantile(ordered, cumulative, p)
