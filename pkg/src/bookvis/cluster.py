"""Seeded Lloyd k-means with k-means++ initialization.

One implementation backs both the cover-color quantizer and the visual
vocabulary training, so the convergence behavior (objective trace,
empty-cluster handling, determinism under a fixed seed) is identical
everywhere clustering happens.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

MAX_ITER = 50
REL_TOL = 1e-4


def _plusplus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first center uniform, then D^2-weighted picks."""
    n = points.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    # squared distance of every point to its nearest already-chosen center
    d2 = np.einsum("ij,ij->i", points - points[chosen[0]], points - points[chosen[0]])
    for c in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # all remaining mass sits on existing centers; caller guarantees
            # enough distinct points, so this only happens on exact ties
            chosen[c] = rng.integers(n)
        else:
            r = rng.random() * total
            chosen[c] = int(np.searchsorted(np.cumsum(d2), r, side="right").clip(0, n - 1))
        diff = points - points[chosen[c]]
        d2 = np.minimum(d2, np.einsum("ij,ij->i", diff, diff))
    return points[chosen].copy()


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = MAX_ITER,
    tol: float = REL_TOL,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Cluster `points` (n x d) into at most `k` groups.

    Returns (centroids, assignments, objective_trace). The objective is the
    sum of squared distances to assigned centroids; the trace is recorded
    once per Lloyd iteration and is non-increasing. Empty clusters are
    re-seeded from the point farthest from its current centroid. If the
    data has fewer than `k` distinct points, that many centroids come back.

    Deterministic given (points, k, seed).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.size == 0:
        raise ValidationError("kmeans requires at least one point")
    if k < 1:
        raise ValidationError("kmeans requires k >= 1")

    n_distinct = np.unique(pts, axis=0).shape[0]
    k_eff = min(k, n_distinct)

    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(pts, k_eff, rng)

    trace: list[float] = []
    assign = np.zeros(pts.shape[0], dtype=np.int64)
    prev_obj = np.inf
    for it in range(max_iter):
        # squared distances to every centroid; argmin ties go to the lowest index
        d2 = (
            np.einsum("ij,ij->i", pts, pts)[:, None]
            - 2.0 * pts @ centroids.T
            + np.einsum("ij,ij->i", centroids, centroids)[None, :]
        )
        np.maximum(d2, 0.0, out=d2)
        assign = np.argmin(d2, axis=1)
        d_assigned = d2[np.arange(pts.shape[0]), assign]
        obj = float(d_assigned.sum())
        trace.append(obj)
        if prev_obj < np.inf and (prev_obj <= 0.0 or (prev_obj - obj) / prev_obj < tol):
            break
        prev_obj = obj
        if it == max_iter - 1:
            break  # keep centroids consistent with the last assignment

        counts = np.bincount(assign, minlength=k_eff)
        sums = np.zeros_like(centroids)
        np.add.at(sums, assign, pts)
        nonempty = counts > 0
        new_centroids = centroids.copy()
        new_centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        empty = np.flatnonzero(~nonempty)
        if empty.size:
            # farthest points (one per empty cluster) become the new centers
            order = np.argsort(d_assigned, kind="stable")[::-1]
            for slot, point_idx in zip(empty, order[: empty.size]):
                new_centroids[slot] = pts[point_idx]
        centroids = new_centroids

    return centroids, assign, trace
