"""Linear estimation and neighbor selection primitives.

Fits go through orthogonal-factorization least squares (LAPACK gelsy); normal
equations are reserved for test oracles. Candidate sets are small (<= 728), so
nearest-neighbor search is exact.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla

from .errors import SingularDesignError

COND_LIMIT = 1e12
WEIGHT_EPS = 1e-8  # floor on distances, applied on the normalized feature scale


def _dependent_columns(X: np.ndarray, rank: int) -> list[int]:
    # Pivoted QR: pivots beyond the numerical rank index the dependent columns.
    _, _, piv = sla.qr(X, mode="economic", pivoting=True)
    return sorted(int(c) for c in piv[rank:])


def ols_fit(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least-squares coefficients argmin_b ||y - Xb||^2.

    Raises SingularDesignError when the condition number exceeds 1e12,
    naming the dependent columns.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"incompatible shapes X{X.shape}, y{y.shape}")
    n, p = X.shape
    if n < p:
        raise ValueError(f"underdetermined system: {n} rows < {p} columns")
    sol, _, rank, _ = sla.lstsq(X, y, cond=1.0 / COND_LIMIT, lapack_driver="gelsy")
    if rank < p:
        raise SingularDesignError(rank, p, _dependent_columns(X, rank))
    return sol


def wls_fit(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted least squares argmin_b sum_i w_i (y_i - x_i b)^2 via row rescaling."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != y.shape:
        raise ValueError(f"weights shape {w.shape} != targets shape {y.shape}")
    if not np.all(np.isfinite(w)) or (w < 0).any():
        raise ValueError("weights must be finite and nonnegative")
    if int((w > 0).sum()) < X.shape[1]:
        raise ValueError(
            f"need at least {X.shape[1]} strictly positive weights, have {int((w > 0).sum())}"
        )
    sw = np.sqrt(w)
    return ols_fit(X * sw[:, None], y * sw)


def euclidean_distances(target: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Euclidean distance from each candidate vector to the target vector."""
    target = np.asarray(target, dtype=np.float64)
    candidates = np.asarray(candidates, dtype=np.float64)
    if candidates.ndim != 2 or target.ndim != 1 or candidates.shape[1] != target.shape[0]:
        raise ValueError(
            f"dimension mismatch: target has {target.shape}, candidates {candidates.shape}"
        )
    return np.sqrt(((candidates - target) ** 2).sum(axis=1))


def knn_select(distances: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k smallest distances, ties resolved toward the later candidate.

    The result is returned sorted ascending (chronological order for rolling
    candidate windows). With the fixed tie rule the selection for k is always a
    subset of the selection for k+1.
    """
    d = np.asarray(distances, dtype=np.float64)
    n = d.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    order = np.lexsort((-np.arange(n), d))  # distance ascending, later index first on ties
    return np.sort(order[:k])


def inv_dist_weights(distances: np.ndarray, eps: float = WEIGHT_EPS) -> np.ndarray:
    """Normalized inverse-distance weights with an epsilon floor on the distances."""
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 1 or len(d) == 0:
        raise ValueError("need at least one distance")
    inv = 1.0 / np.maximum(d, eps)
    return inv / inv.sum()
