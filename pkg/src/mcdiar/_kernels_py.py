"""Pure-numpy kernel implementations.

Drop-in fallback for the compiled extension. Same contracts, same results to
floating-point tolerance; used automatically when the extension is not built
or when MCDIAR_PURE_PYTHON=1.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 256  # rows per cdist block, bounds the pairwise matrix size

BACKEND = "numpy"


def directed_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """max over rows of `a` of the min Euclidean distance to rows of `b`."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("expected 2-d matrices")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("empty matrix")
    if a.shape[1] != b.shape[1]:
        raise ValueError("column counts differ")
    b_sq = np.einsum("ij,ij->i", b, b)
    worst = 0.0
    for lo in range(0, a.shape[0], _CHUNK):
        chunk = a[lo : lo + _CHUNK]
        sq = np.einsum("ij,ij->i", chunk, chunk)[:, None] - 2.0 * (chunk @ b.T) + b_sq[None, :]
        np.maximum(sq, 0.0, out=sq)
        worst = max(worst, float(np.sqrt(sq.min(axis=1)).max()))
    return worst


def gaussian_loglik_sum(x: np.ndarray, mean: np.ndarray, var: np.ndarray) -> float:
    """Sum over rows of the diagonal-covariance Gaussian log-density."""
    x = np.asarray(x, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * var))
    quad = np.sum((x - mean) ** 2 / var, axis=1)
    return float(x.shape[0] * log_norm - 0.5 * np.sum(quad))


def gmm2_loglik_sum(
    x: np.ndarray,
    weights: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
) -> float:
    """Sum over rows of the 2-component diagonal-GMM log-density."""
    x = np.asarray(x, dtype=np.float64)
    lp = np.empty((x.shape[0], 2))
    for k in range(2):
        log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * variances[k]))
        quad = np.sum((x - means[k]) ** 2 / variances[k], axis=1)
        lp[:, k] = np.log(weights[k]) + log_norm - 0.5 * quad
    hi = lp.max(axis=1)
    return float(np.sum(hi + np.log(np.sum(np.exp(lp - hi[:, None]), axis=1))))
