"""CLIP score: 100 * max(0, cosine(image embedding, text embedding))."""

import numpy as np

from ..errors import DegenerateInputError, DimensionError


def clip_score(image_vec, text_vec) -> float:
    a = np.asarray(image_vec, dtype=np.float64).reshape(-1)
    b = np.asarray(text_vec, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionError(f"Embedding dimensions differ: {a.size} vs {b.size}")
    norm_a, norm_b = np.linalg.norm(a), np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise DegenerateInputError("CLIP score is undefined for a zero embedding")
    cosine = float(a @ b / (norm_a * norm_b))
    return 100.0 * max(0.0, min(cosine, 1.0))
