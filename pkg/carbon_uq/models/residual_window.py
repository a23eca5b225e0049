"""
Sliding window of recent prediction residuals.
"""

from collections import deque
from typing import Iterable, Optional

import numpy as np


class ResidualWindow:
    """
    Fixed-capacity residual set, oldest first.

    Once full, every push evicts the oldest residual so the window always
    holds the most recent ``capacity`` residuals.
    """

    def __init__(self, capacity: int, residuals: Optional[Iterable[float]] = None):
        """
        Initialize the window.

        Args:
            capacity: Maximum number of residuals kept (T >= 2)
            residuals: Optional initial residuals, oldest first; only the
                most recent ``capacity`` are kept
        """
        if capacity < 2:
            raise ValueError(f"window capacity must be >= 2, got {capacity}")
        self.capacity = capacity
        self._residuals = deque(maxlen=capacity)
        if residuals is not None:
            self.extend(residuals)

    def push(self, residual: float) -> None:
        self._residuals.append(float(residual))

    def extend(self, residuals: Iterable[float]) -> None:
        for residual in residuals:
            self.push(residual)

    def __len__(self) -> int:
        return len(self._residuals)

    @property
    def is_full(self) -> bool:
        return len(self._residuals) == self.capacity

    @property
    def residuals(self) -> np.ndarray:
        """Copy of the current residuals, oldest first."""
        return np.fromiter(self._residuals, dtype=float, count=len(self._residuals))

    def recent(self, n: int) -> np.ndarray:
        """The last ``n`` residuals, oldest first."""
        return self.residuals[-n:] if n else np.empty(0)
