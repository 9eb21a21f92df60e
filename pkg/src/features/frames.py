"""
Frame sampling and pooling over feature matrices.
"""

from __future__ import annotations

from typing import List

import numpy as np

from src.models.dataset import FeatureMatrix
from src.utils.validation import require_positive_int


def sample_frame_indices(n_total: int, n_wanted: int) -> List[int]:
    """Evenly spread indices: floor(i * n_total / n_wanted) for i < n_wanted.

    Short videos repeat frames instead of failing.
    """
    require_positive_int("n_total", n_total)
    require_positive_int("n_wanted", n_wanted)
    return [(i * n_total) // n_wanted for i in range(n_wanted)]


def resample(m: FeatureMatrix, n_wanted: int) -> FeatureMatrix:
    """Rows of ``m`` picked by ``sample_frame_indices``; identity when counts match."""
    if m.n_frames == n_wanted:
        return m
    return FeatureMatrix(values=m.values[sample_frame_indices(m.n_frames, n_wanted)])


def mean_pool(m: FeatureMatrix) -> np.ndarray:
    """Columnwise mean, the global feature vector of a video."""
    return m.values.mean(axis=0)
