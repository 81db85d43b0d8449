"""Numba-compiled implementations of the hot kernels.

Each function mirrors its numpy twin in numpy_backend.py. Accumulation
order matches np.add.at (sequential over the answer table), so integer
kernels agree exactly and float kernels agree to rounding.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .numpy_backend import EARTH_RADIUS_M

_DEG = math.pi / 180.0


@njit(cache=True)
def haversine_many(lat_deg, lon_deg, lats_deg, lons_deg):
    n = lats_deg.shape[0]
    out = np.empty(n)
    lat0 = lat_deg * _DEG
    lon0 = lon_deg * _DEG
    cos0 = math.cos(lat0)
    for i in range(n):
        lat1 = lats_deg[i] * _DEG
        lon1 = lons_deg[i] * _DEG
        sin_dlat = math.sin((lat1 - lat0) * 0.5)
        sin_dlon = math.sin((lon1 - lon0) * 0.5)
        h = sin_dlat * sin_dlat + cos0 * math.cos(lat1) * sin_dlon * sin_dlon
        if h > 1.0:
            h = 1.0
        out[i] = 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))
    return out


@njit(cache=True)
def vote_counts(q_idx, lab_idx, n_questions, n_labels):
    counts = np.zeros((n_questions, n_labels), dtype=np.int64)
    for a in range(q_idx.shape[0]):
        counts[q_idx[a], lab_idx[a]] += 1
    return counts


@njit(cache=True)
def weighted_vote_counts(q_idx, lab_idx, weights, n_questions, n_labels):
    counts = np.zeros((n_questions, n_labels), dtype=np.float64)
    for a in range(q_idx.shape[0]):
        counts[q_idx[a], lab_idx[a]] += weights[a]
    return counts


@njit(cache=True)
def em_fit(q_idx, w_idx, lab_idx, n_questions, n_workers, n_labels,
           max_iters, tol, alpha):
    n = q_idx.shape[0]
    posts = np.zeros((n_questions, n_labels))
    for a in range(n):
        posts[q_idx[a], lab_idx[a]] += 1.0
    for q in range(n_questions):
        s = 0.0
        for t in range(n_labels):
            s += posts[q, t]
        for t in range(n_labels):
            posts[q, t] /= s
    priors = np.full(n_labels, 1.0 / n_labels)
    conf_gt = np.empty((n_workers, n_labels, n_labels))
    log_post = np.empty((n_questions, n_labels))
    iters = 0
    for _ in range(max_iters):
        iters += 1
        for w in range(n_workers):
            for g in range(n_labels):
                for t in range(n_labels):
                    conf_gt[w, g, t] = alpha
        for a in range(n):
            q = q_idx[a]
            w = w_idx[a]
            g = lab_idx[a]
            for t in range(n_labels):
                conf_gt[w, g, t] += posts[q, t]
        for w in range(n_workers):
            for t in range(n_labels):
                s = 0.0
                for g in range(n_labels):
                    s += conf_gt[w, g, t]
                for g in range(n_labels):
                    conf_gt[w, g, t] /= s
        for t in range(n_labels):
            s = 0.0
            for q in range(n_questions):
                s += posts[q, t]
            priors[t] = s / n_questions
        for q in range(n_questions):
            for t in range(n_labels):
                p = priors[t]
                if p < 1e-300:
                    p = 1e-300
                log_post[q, t] = math.log(p)
        for a in range(n):
            q = q_idx[a]
            w = w_idx[a]
            g = lab_idx[a]
            for t in range(n_labels):
                c = conf_gt[w, g, t]
                if c < 1e-300:
                    c = 1e-300
                log_post[q, t] += math.log(c)
        delta = 0.0
        for q in range(n_questions):
            m = log_post[q, 0]
            for t in range(1, n_labels):
                if log_post[q, t] > m:
                    m = log_post[q, t]
            s = 0.0
            for t in range(n_labels):
                log_post[q, t] = math.exp(log_post[q, t] - m)
                s += log_post[q, t]
            for t in range(n_labels):
                v = log_post[q, t] / s
                d = abs(v - posts[q, t])
                if d > delta:
                    delta = d
                posts[q, t] = v
        if delta < tol:
            break
    confusion = np.empty((n_workers, n_labels, n_labels))
    for w in range(n_workers):
        for t in range(n_labels):
            for g in range(n_labels):
                confusion[w, t, g] = conf_gt[w, g, t]
    return posts, confusion, priors, iters


@njit(cache=True)
def kmeans_lloyd(x, centroids, pinned, max_iters, tol):
    n, d = x.shape
    k = centroids.shape[0]
    cents = centroids.copy()
    labels = np.empty(n, dtype=np.int64)
    iters = 0
    for _ in range(max_iters):
        iters += 1
        changed = False
        for i in range(n):
            if pinned[i] >= 0:
                new = pinned[i]
            else:
                best = 0
                best_d2 = math.inf
                for c in range(k):
                    d2 = 0.0
                    for j in range(d):
                        diff = x[i, j] - cents[c, j]
                        d2 += diff * diff
                    if d2 < best_d2:
                        best_d2 = d2
                        best = c
                new = best
            if iters > 1 and new != labels[i]:
                changed = True
            labels[i] = new
        new_cents = np.zeros((k, d))
        sizes = np.zeros(k, dtype=np.int64)
        for i in range(n):
            c = labels[i]
            sizes[c] += 1
            for j in range(d):
                new_cents[c, j] += x[i, j]
        shift = 0.0
        for c in range(k):
            move = 0.0
            for j in range(d):
                if sizes[c] > 0:
                    new_cents[c, j] /= sizes[c]
                else:
                    new_cents[c, j] = cents[c, j]
                diff = new_cents[c, j] - cents[c, j]
                move += diff * diff
            move = math.sqrt(move)
            if move > shift:
                shift = move
        cents = new_cents
        if iters > 1 and not changed:
            break
        if shift < tol:
            break
    for i in range(n):
        if pinned[i] >= 0:
            labels[i] = pinned[i]
        else:
            best = 0
            best_d2 = math.inf
            for c in range(k):
                d2 = 0.0
                for j in range(d):
                    diff = x[i, j] - cents[c, j]
                    d2 += diff * diff
                if d2 < best_d2:
                    best_d2 = d2
                    best = c
            labels[i] = best
    return labels, cents, iters
