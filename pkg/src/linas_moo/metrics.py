"""Pareto-front analytics: front extraction, exact 2-D hypervolume, traces.

Hypervolume is computed in minimization convention; use
:func:`store_objective_matrix` to orient a store's raw values first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .objective import DegenerateScaleError, EvaluationStore, ObjectiveSpec, oriented_values


def store_objective_matrix(store: EvaluationStore) -> np.ndarray:
    """The store's values oriented so every column is minimized."""
    return oriented_values(store.values_matrix(), store.objectives)


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    """Boolean mask of rows not strictly dominated by any other row.

    Duplicates of a non-dominated point are all kept.
    """
    F = np.asarray(points, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError("need an (N, m) matrix")
    if F.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return ~np.any(le & lt, axis=0)


def pareto_front(values: np.ndarray, objectives: Sequence[ObjectiveSpec]) -> np.ndarray:
    """Indices of the non-dominated rows of a raw natural-direction matrix."""
    return np.nonzero(nondominated_mask(oriented_values(values, objectives)))[0]


def default_reference(points: np.ndarray) -> np.ndarray:
    """Componentwise worst value plus one percent of the observed range.

    With a zero-range column the reference sits on the points themselves and
    that column contributes no volume.
    """
    F = np.asarray(points, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] == 0:
        raise ValueError("need a non-empty (N, m) matrix")
    worst = F.max(axis=0)
    return worst + 0.01 * (worst - F.min(axis=0))


def hypervolume_2d(points: np.ndarray, reference) -> float:
    """Exact area dominated by ``points`` inside the reference box.

    Points are minimization vectors; any point with a coordinate at or
    beyond the reference is clipped away. The non-dominated staircase is
    swept left to right: each step adds ``(ref_x - x) * (y_prev - y)``.
    """
    F = np.asarray(points, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if F.ndim != 2 or F.shape[1] != 2 or ref.shape != (2,):
        raise ValueError("hypervolume_2d handles exactly two objectives")
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(ref))):
        raise ValueError("points and reference must be finite")
    F = F[np.all(F < ref, axis=1)]
    if F.shape[0] == 0:
        return 0.0
    F = np.unique(F[nondominated_mask(F)], axis=0)
    # Unique rows of a 2-D front sort by ascending x with strictly
    # descending y, giving the staircase directly.
    x, y = F[:, 0], F[:, 1]
    y_prev = np.concatenate([[ref[1]], y[:-1]])
    return float(np.sum((ref[0] - x) * (y_prev - y)))


@dataclass(frozen=True)
class HypervolumeTrace:
    """Hypervolume of measurement prefixes against one fixed reference."""

    counts: tuple[int, ...]
    hypervolumes: tuple[float, ...]
    reference: tuple[float, ...]


def hv_trace(
    store: EvaluationStore,
    reference=None,
    stride: int = 10,
) -> HypervolumeTrace:
    """Hypervolume after every ``stride`` measurements, plus the final count.

    The reference defaults to :func:`default_reference` over the whole
    store, so the trace is non-decreasing.
    """
    if stride < 1:
        raise ValueError("stride must be positive")
    if len(store) == 0:
        raise ValueError("store is empty")
    F = store_objective_matrix(store)
    ref = default_reference(F) if reference is None else np.asarray(reference, dtype=np.float64)
    counts = list(range(stride, len(F), stride)) + [len(F)]
    hvs = tuple(hypervolume_2d(F[:k], ref) for k in counts)
    return HypervolumeTrace(tuple(counts), hvs, tuple(float(r) for r in ref))


def union_bounds(point_sets: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise min and max over the concatenation of all sets.

    Raises:
        DegenerateScaleError: if some objective never varies across the union.
    """
    stacked = np.concatenate([np.asarray(s, dtype=np.float64) for s in point_sets])
    if stacked.ndim != 2 or stacked.shape[0] == 0:
        raise ValueError("need at least one non-empty point set")
    lo, hi = stacked.min(axis=0), stacked.max(axis=0)
    flat = np.nonzero(hi == lo)[0]
    if flat.size:
        raise DegenerateScaleError(
            f"objective column(s) {flat.tolist()} have zero range across the union"
        )
    return lo, hi


def normalized_hypervolume(
    points: np.ndarray, bounds: tuple[np.ndarray, np.ndarray]
) -> float:
    """Hypervolume after min-max scaling to the unit box, reference (1, 1).

    ``bounds`` usually comes from :func:`union_bounds` over every search arm
    under comparison, which puts all arms on one scale.
    """
    lo, hi = bounds
    scaled = (np.asarray(points, dtype=np.float64) - lo) / (hi - lo)
    return hypervolume_2d(scaled, np.ones(2))
