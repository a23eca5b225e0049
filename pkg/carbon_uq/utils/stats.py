"""
Type-1 (inverse empirical CDF) quantiles.
"""

import math
from typing import Sequence

import numpy as np

from utils.errors import EmptyInput

# Slack for accumulated float error in cumulative weights.
_CUMULATIVE_TOLERANCE = 1e-12


def empirical_quantile(values: Sequence[float], p: float) -> float:
    """
    Type-1 empirical quantile.

    Sort ascending to e[1..n] and return e[clamp(ceil(p * n), 1, n)], so
    p=0 gives the minimum and p=1 the maximum.

    Raises:
        EmptyInput: If ``values`` is empty
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    ordered = np.sort(np.asarray(values, dtype=float))
    return sorted_quantile(ordered, p)


def sorted_quantile(ordered: np.ndarray, p: float) -> float:
    """Type-1 quantile of an already ascending array."""
    n = ordered.size
    if n == 0:
        raise EmptyInput("quantile of an empty sample")
    k = min(max(math.ceil(p * n), 1), n)
    return float(ordered[k - 1])


def weighted_quantile(ordered: np.ndarray, cumulative: np.ndarray, p: float) -> float:
    """
    Type-1 quantile of a weighted sample.

    Args:
        ordered: Values sorted ascending
        cumulative: Normalized cumulative weights aligned with ``ordered``
            (last element 1)
        p: Probability level in [0, 1]

    Returns:
        The smallest value whose cumulative weight reaches ``p``
    """
    if ordered.size == 0:
        raise EmptyInput("quantile of an empty sample")
    index = int(np.searchsorted(cumulative, p - _CUMULATIVE_TOLERANCE, side="left"))
    return float(ordered[min(index, ordered.size - 1)])
