"""Exact Euclidean projection onto the probability simplex (sort based)."""

from __future__ import annotations

import numpy as np

__all__ = ["project_to_simplex", "project_rows"]


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Project a vector onto {x >= 0, sum(x) = 1} in Euclidean norm."""
    return project_rows(np.asarray(v, dtype=float)[None, :])[0]


def project_rows(v: np.ndarray) -> np.ndarray:
    """Row-wise simplex projection of a 2-D array.

    Uses the sorted-threshold construction: with u the row sorted descending,
    the threshold is the largest j with u_j + (1 - cumsum(u)_j)/j > 0, and the
    projection is max(v - tau, 0) with tau chosen so the row sums to one.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {v.shape}")
    n = v.shape[1]
    u = -np.sort(-v, axis=1)
    cssv = np.cumsum(u, axis=1) - 1.0
    j = np.arange(1, n + 1)
    cond = u - cssv / j > 0.0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = cssv[np.arange(v.shape[0]), rho] / (rho + 1)
    return np.maximum(v - tau[:, None], 0.0)
