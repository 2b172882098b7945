"""k-means on learned representations and the ACC / NMI clustering scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidKError, LengthMismatchError


@dataclass
class KMeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations: int
    inertia_history: list = field(default_factory=list)


def _sq_dists(points, centroids):
    d = (np.sum(points ** 2, axis=1)[:, None] - 2.0 * points @ centroids.T
         + np.sum(centroids ** 2, axis=1)[None, :])
    return np.maximum(d, 0.0)


def _kmeans_pp(points, K, rng):
    N = points.shape[0]
    chosen = [int(rng.integers(N))]
    closest = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(N, p=closest / total))
        else:
            # every point coincides with a chosen centre
            rest = np.setdiff1d(np.arange(N), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        closest = np.minimum(closest, np.sum((points - points[idx]) ** 2, axis=1))
    return points[chosen].copy()


def kmeans(points, K, seed=0, max_iter=300):
    """Lloyd's algorithm with k-means++ seeding.

    ``points`` is N x L (one row per sample).  A cluster that loses all its
    members is re-seeded with the point farthest from its current centroid.
    Stops when assignments no longer change or after ``max_iter`` rounds.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"points must be 2-D, got shape {points.shape}")
    N = points.shape[0]
    K = int(K)
    if K < 1 or K > N:
        raise InvalidKError(f"K must be in [1, {N}], got {K}")
    if not np.all(np.isfinite(points)):
        raise ValueError("points contain non-finite values")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(points, K, rng)

    labels = None
    history = []
    it = 0
    for it in range(1, int(max_iter) + 1):
        d = _sq_dists(points, centroids)
        new = np.argmin(d, axis=1)
        dist = d[np.arange(N), new]
        for k in range(K):
            if not np.any(new == k):
                # only take from clusters that keep at least one member
                sizes = np.bincount(new, minlength=K)
                donor = np.where(sizes[new] > 1, dist, -1.0)
                far = int(np.argmax(donor))
                new[far] = k
                dist[far] = 0.0
        history.append(float(dist.sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for k in range(K):
            centroids[k] = points[labels == k].mean(axis=0)

    labels = new
    inertia = float(np.sum((points - centroids[labels]) ** 2))
    return KMeansResult(labels.astype(np.int64), centroids, inertia, it, history)


def _check_pair(y, y_pred):
    y = np.asarray(y).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y.shape != y_pred.shape:
        raise LengthMismatchError(f"label vectors differ in length: {y.size} vs {y_pred.size}")
    if y.size == 0:
        raise LengthMismatchError("label vectors are empty")
    return y, y_pred


def contingency(y, y_pred):
    """Count matrix C[a, b] = #{i : y_i is class a and y_pred_i is cluster b}."""
    y, y_pred = _check_pair(y, y_pred)
    _, yi = np.unique(y, return_inverse=True)
    _, pi = np.unique(y_pred, return_inverse=True)
    C = np.zeros((yi.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(C, (yi, pi), 1)
    return C


def accuracy(y, y_pred):
    """Fraction of samples correctly labelled under the best one-to-one
    cluster-to-class mapping (Hungarian matching on the contingency table)."""
    C = contingency(y, y_pred)
    n = max(C.shape)
    padded = np.zeros((n, n), dtype=np.int64)
    padded[:C.shape[0], :C.shape[1]] = C
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum()) / float(C.sum())


def nmi(y, y_pred):
    """Mutual information normalized by the larger of the two entropies.

    Returns 1.0 when both partitions are trivial (single cluster).
    """
    C = contingency(y, y_pred).astype(np.float64)
    n = C.sum()
    pxy = C / n
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    nz = pxy > 0
    mi = float(np.sum(pxy[nz] * np.log(pxy[nz] / np.outer(px, py)[nz])))
    hx = float(-np.sum(px * np.log(px)))
    hy = float(-np.sum(py * np.log(py)))
    denom = max(hx, hy)
    if denom <= 0:
        return 1.0
    return min(max(mi / denom, 0.0), 1.0)
