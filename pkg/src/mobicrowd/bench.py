"""Compare the numba and numpy kernel backends on synthetic workloads.

Run as `python -m mobicrowd.bench`. The numba path is called once before
timing so compilation does not count against it.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from .kernels import numpy_backend

try:
    from .kernels import numba_backend
except ImportError:
    numba_backend = None


def _workloads(scale: int, rng: np.random.Generator) -> dict:
    n_answers = 50_000 * scale
    n_questions = 10_000 * scale
    n_workers = 200
    n_labels = 4
    q_idx = rng.integers(0, n_questions, n_answers)
    # em_fit normalizes per question, so every question needs >= 1 answer
    q_covered = np.concatenate([
        np.arange(n_questions, dtype=np.int64),
        rng.integers(0, n_questions, n_answers - n_questions),
    ])
    w_idx = rng.integers(0, n_workers, n_answers)
    lab_idx = rng.integers(0, n_labels, n_answers)
    weights = rng.uniform(0.1, 1.0, n_answers)
    lats = rng.uniform(-60, 60, n_answers)
    lons = rng.uniform(-180, 179, n_answers)
    x = rng.normal(size=(2_000 * scale, 3))
    cents = x[:2].copy()
    pinned = np.full(len(x), -1, dtype=np.int64)
    return {
        "vote_counts": (
            q_idx.astype(np.int64), lab_idx.astype(np.int64),
            n_questions, n_labels,
        ),
        "weighted_vote_counts": (
            q_idx.astype(np.int64), lab_idx.astype(np.int64), weights,
            n_questions, n_labels,
        ),
        "em_fit": (
            q_covered, w_idx.astype(np.int64),
            lab_idx.astype(np.int64), n_questions, n_workers, n_labels,
            30, 1e-6, 1.0,
        ),
        "haversine_many": (52.23, 21.01, lats, lons),
        "kmeans_lloyd": (x, cents, pinned, 100, 1e-9),
    }


def _time(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scale", type=int, default=1,
                        help="multiply workload sizes")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(7)
    work = _workloads(args.scale, rng)

    print(f"{'kernel':<22}{'numpy (s)':>12}{'numba (s)':>12}{'speedup':>10}")
    for name, call_args in work.items():
        t_np = _time(getattr(numpy_backend, name), call_args, args.repeats)
        if numba_backend is None:
            print(f"{name:<22}{t_np:>12.5f}{'n/a':>12}{'':>10}")
            continue
        fn = getattr(numba_backend, name)
        fn(*call_args)
        t_nb = _time(fn, call_args, args.repeats)
        ratio = t_np / t_nb if t_nb > 0 else float("inf")
        print(f"{name:<22}{t_np:>12.5f}{t_nb:>12.5f}{ratio:>9.1f}x")
    if numba_backend is None:
        print("numba is not importable; showing the numpy backend only")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
