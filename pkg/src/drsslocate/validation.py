"""Input validation helpers shared by the estimator front ends."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array


def check_anchors(X) -> np.ndarray:
    """Coerce anchor coordinates to a finite float (n_anchors, d) array."""
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[0] < X.shape[1] + 3:
        raise ValueError(
            f"need at least d + 3 anchors, got {X.shape[0]} for d={X.shape[1]}"
        )
    return X


def check_drss(y, n_anchors: int) -> np.ndarray:
    """Coerce DRSS readings to a float vector of length n_anchors - 1."""
    y = check_array(y, dtype=float, ensure_2d=False)
    if y.ndim != 1:
        raise ValueError("DRSS readings must be a 1-d vector")
    if y.shape[0] != n_anchors - 1:
        raise ValueError(
            f"expected {n_anchors - 1} DRSS readings for {n_anchors} anchors, "
            f"got {y.shape[0]}"
        )
    return y


def check_rn_index(rn_index: int, n_anchors: int) -> int:
    """Validate a reference-anchor index against the anchor count."""
    rn = int(rn_index)
    if rn < 0 or rn >= n_anchors:
        raise ValueError(f"rn_index must be in [0, {n_anchors - 1}], got {rn}")
    return rn
