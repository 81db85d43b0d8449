"""Pure-numpy implementations of the hot kernels.

These are the reference semantics. The numba backend mirrors each function
loop-for-loop; accumulations here use np.add.at so the summation order is
the same sequential order the compiled loops use.
"""

from __future__ import annotations

import numpy as np

EARTH_RADIUS_M = 6_371_000.0


def haversine_many(
    lat_deg: float,
    lon_deg: float,
    lats_deg: np.ndarray,
    lons_deg: np.ndarray,
) -> np.ndarray:
    """Great-circle distance in meters from one point to many, spherical model."""
    lat0 = np.radians(lat_deg)
    lon0 = np.radians(lon_deg)
    lats = np.radians(lats_deg)
    lons = np.radians(lons_deg)
    sin_dlat = np.sin((lats - lat0) * 0.5)
    sin_dlon = np.sin((lons - lon0) * 0.5)
    h = sin_dlat * sin_dlat + np.cos(lat0) * np.cos(lats) * sin_dlon * sin_dlon
    # guard against fp overshoot just past 1.0 on antipodal pairs
    h = np.minimum(h, 1.0)
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(h))


def vote_counts(
    q_idx: np.ndarray,
    lab_idx: np.ndarray,
    n_questions: int,
    n_labels: int,
) -> np.ndarray:
    """Tally answers into an int64 matrix of shape (n_questions, n_labels)."""
    counts = np.zeros((n_questions, n_labels), dtype=np.int64)
    np.add.at(counts, (q_idx, lab_idx), 1)
    return counts


def weighted_vote_counts(
    q_idx: np.ndarray,
    lab_idx: np.ndarray,
    weights: np.ndarray,
    n_questions: int,
    n_labels: int,
) -> np.ndarray:
    """Tally per-answer weights into a float64 matrix (n_questions, n_labels)."""
    counts = np.zeros((n_questions, n_labels), dtype=np.float64)
    np.add.at(counts, (q_idx, lab_idx), weights)
    return counts


def em_fit(
    q_idx: np.ndarray,
    w_idx: np.ndarray,
    lab_idx: np.ndarray,
    n_questions: int,
    n_workers: int,
    n_labels: int,
    max_iters: int,
    tol: float,
    alpha: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Confusion-matrix EM over a flat answer table.

    Every question must carry at least one answer; the caller enforces that.
    Posteriors start from normalized vote proportions. Each iteration runs
    the M-step (Laplace-smoothed confusion matrices and label priors from
    the current posteriors) and then the E-step in log space. Stops when the
    largest posterior change falls below tol.

    Returns (posteriors (nq, nl), confusion (nw, true, given), priors (nl),
    iterations).
    """
    counts = vote_counts(q_idx, lab_idx, n_questions, n_labels).astype(np.float64)
    posts = counts / counts.sum(axis=1, keepdims=True)
    priors = np.full(n_labels, 1.0 / n_labels)
    # layout (worker, given, true) keeps the M-step scatter contiguous
    conf_gt = np.empty((n_workers, n_labels, n_labels))
    iters = 0
    for _ in range(max_iters):
        iters += 1
        conf_gt[:] = alpha
        flat = conf_gt.reshape(n_workers * n_labels, n_labels)
        np.add.at(flat, w_idx * n_labels + lab_idx, posts[q_idx])
        conf_gt /= conf_gt.sum(axis=1, keepdims=True)
        priors = posts.mean(axis=0)
        log_post = np.tile(np.log(np.maximum(priors, 1e-300)), (n_questions, 1))
        log_rows = np.log(np.maximum(conf_gt[w_idx, lab_idx, :], 1e-300))
        np.add.at(log_post, q_idx, log_rows)
        log_post -= log_post.max(axis=1, keepdims=True)
        new_posts = np.exp(log_post)
        new_posts /= new_posts.sum(axis=1, keepdims=True)
        delta = np.abs(new_posts - posts).max()
        posts = new_posts
        if delta < tol:
            break
    confusion = np.ascontiguousarray(conf_gt.transpose(0, 2, 1))
    return posts, confusion, priors, iters


def kmeans_lloyd(
    x: np.ndarray,
    centroids: np.ndarray,
    pinned: np.ndarray,
    max_iters: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Lloyd iterations with optional pinned assignments.

    pinned[i] >= 0 fixes point i to that cluster; free points take the
    nearest centroid, ties to the smallest cluster index. Converges when the
    assignment stops changing or every centroid moves less than tol. A final
    assignment pass keeps labels consistent with the returned centroids.
    Empty clusters keep their previous centroid.
    """
    n, _ = x.shape
    k = centroids.shape[0]
    cents = centroids.copy()
    labels = np.empty(n, dtype=np.int64)
    free = pinned < 0
    iters = 0
    for _ in range(max_iters):
        iters += 1
        d2 = ((x[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.where(free, d2.argmin(axis=1), pinned)
        changed = iters > 1 and bool((new_labels != labels).any())
        labels = new_labels
        new_cents = np.empty_like(cents)
        for c in range(k):
            members = x[labels == c]
            new_cents[c] = members.mean(axis=0) if len(members) else cents[c]
        shift = np.sqrt(((new_cents - cents) ** 2).sum(axis=1)).max()
        cents = new_cents
        if iters > 1 and not changed:
            break
        if shift < tol:
            break
    d2 = ((x[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
    labels = np.where(free, d2.argmin(axis=1), pinned)
    return labels.astype(np.int64), cents, iters
