# Precondition checks shared by the numeric modules

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from src.utils.exceptions import DimensionError, NumericFailure, UsageError


def require_shape(op: str, array: np.ndarray, expected: Sequence[int]) -> None:
    """Raise DimensionError unless ``array.shape == expected``."""
    if tuple(array.shape) != tuple(expected):
        raise DimensionError(op, array.shape, tuple(expected), reason="unexpected shape")


def require_same_shape(op: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(op, a.shape, b.shape)


def require_rank(op: str, array: np.ndarray, ranks: Tuple[int, ...]) -> None:
    if array.ndim not in ranks:
        raise DimensionError(op, array.shape, reason=f"expected rank in {ranks}")


def require_finite(op: str, array: np.ndarray) -> None:
    """Raise NumericFailure naming ``op`` when any entry is NaN or infinite."""
    if not np.all(np.isfinite(array)):
        raise NumericFailure(op)


def require_positive_int(name: str, value: int, minimum: int = 1) -> int:
    if int(value) != value or value < minimum:
        raise UsageError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)
