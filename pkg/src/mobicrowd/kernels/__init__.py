"""Kernel dispatch.

Two interchangeable backends live here: a numba-compiled one and a pure
numpy one. The environment variable MOBICROWD_KERNELS picks which is active
at import time:

    auto   use numba when it imports, fall back to numpy (default)
    numba  require numba, raise if it is unavailable
    numpy  force the pure-numpy path

Integer kernels agree exactly across backends; float kernels agree to
rounding. Results are reproducible per backend.
"""

from __future__ import annotations

import os

import numpy as np

from . import numpy_backend

ENV_VAR = "MOBICROWD_KERNELS"
_CHOICES = ("auto", "numba", "numpy")

EARTH_RADIUS_M = numpy_backend.EARTH_RADIUS_M


def _resolve_backend(choice: str | None = None):
    """Return (name, module) for the requested backend choice."""
    if choice is None:
        choice = os.environ.get(ENV_VAR, "auto")
    choice = choice.strip().lower()
    if choice not in _CHOICES:
        raise ValueError(
            f"{ENV_VAR} must be one of {_CHOICES}, got {choice!r}"
        )
    if choice == "numpy":
        return "numpy", numpy_backend
    try:
        from . import numba_backend
    except ImportError:
        if choice == "numba":
            raise RuntimeError(
                f"{ENV_VAR}=numba but numba is not importable"
            ) from None
        return "numpy", numpy_backend
    return "numba", numba_backend


_BACKEND_NAME, _impl = _resolve_backend()


def active_backend() -> str:
    """Name of the backend selected at import time."""
    return _BACKEND_NAME


def haversine_many(lat_deg, lon_deg, lats_deg, lons_deg) -> np.ndarray:
    return _impl.haversine_many(
        float(lat_deg),
        float(lon_deg),
        np.ascontiguousarray(lats_deg, dtype=np.float64),
        np.ascontiguousarray(lons_deg, dtype=np.float64),
    )


def vote_counts(q_idx, lab_idx, n_questions: int, n_labels: int) -> np.ndarray:
    return _impl.vote_counts(
        np.ascontiguousarray(q_idx, dtype=np.int64),
        np.ascontiguousarray(lab_idx, dtype=np.int64),
        int(n_questions),
        int(n_labels),
    )


def weighted_vote_counts(
    q_idx, lab_idx, weights, n_questions: int, n_labels: int
) -> np.ndarray:
    return _impl.weighted_vote_counts(
        np.ascontiguousarray(q_idx, dtype=np.int64),
        np.ascontiguousarray(lab_idx, dtype=np.int64),
        np.ascontiguousarray(weights, dtype=np.float64),
        int(n_questions),
        int(n_labels),
    )


def em_fit(
    q_idx,
    w_idx,
    lab_idx,
    n_questions: int,
    n_workers: int,
    n_labels: int,
    max_iters: int = 100,
    tol: float = 1e-6,
    alpha: float = 1.0,
):
    return _impl.em_fit(
        np.ascontiguousarray(q_idx, dtype=np.int64),
        np.ascontiguousarray(w_idx, dtype=np.int64),
        np.ascontiguousarray(lab_idx, dtype=np.int64),
        int(n_questions),
        int(n_workers),
        int(n_labels),
        int(max_iters),
        float(tol),
        float(alpha),
    )


def kmeans_lloyd(x, centroids, pinned, max_iters: int = 300, tol: float = 1e-9):
    return _impl.kmeans_lloyd(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(centroids, dtype=np.float64),
        np.ascontiguousarray(pinned, dtype=np.int64),
        int(max_iters),
        float(tol),
    )
