"""Diversity proxy for desk-scale runs."""

import numpy as np
from scipy.spatial.distance import pdist

from ..errors import InsufficientDataError


def mean_pairwise_distance(features) -> float:
    """Mean Euclidean distance over all pairs of feature vectors."""
    arr = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if arr.shape[0] < 2:
        raise InsufficientDataError(f"Need at least 2 samples for pairwise distance, got {arr.shape[0]}")
    return float(pdist(arr, metric="euclidean").mean())
