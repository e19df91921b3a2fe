"""Discriminative subset selection over mined tracks.

Facility-location objective with an open cost per selected track and a
bonus for tracks with high confidence: selecting D out of n tracks earns

    sum_i max_{j in D} similarities[i, j] - open_cost * |D|
        + discriminative_weight * sum_{j in D} confidence[j]

where the empty set scores zero. Greedy maximization with a budget
gives the usual constant-factor guarantee for the coverage part.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SelectionConfig:
    open_cost: float = 0.1
    discriminative_weight: float = 0.1
    budget: int | None = None

    def __post_init__(self):
        if self.open_cost < 0.0:
            raise ValueError("open_cost must be non-negative")
        if self.discriminative_weight < 0.0:
            raise ValueError("discriminative_weight must be non-negative")
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be positive when given")


@dataclass(frozen=True)
class SelectionInstance:
    """Pairwise similarities plus a per-track confidence bonus."""

    similarities: np.ndarray
    confidences: np.ndarray

    def __post_init__(self):
        sims = np.asarray(self.similarities, dtype=np.float64)
        conf = np.asarray(self.confidences, dtype=np.float64)
        if sims.ndim != 2 or sims.shape[0] != sims.shape[1]:
            raise ValueError("similarities must be a square matrix")
        if conf.shape != (sims.shape[0],):
            raise ValueError("confidences length must match the matrix")
        if not np.isfinite(sims).all() or not np.isfinite(conf).all():
            raise ValueError("selection inputs must be finite")
        sims = sims.copy()
        conf = conf.copy()
        sims.flags.writeable = False
        conf.flags.writeable = False
        object.__setattr__(self, "similarities", sims)
        object.__setattr__(self, "confidences", conf)

    @property
    def num_tracks(self) -> int:
        return self.similarities.shape[0]


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[int, ...]
    objective: float
    gains: tuple[float, ...]


def track_similarities(tracks) -> np.ndarray:
    """Feature dot products; missing features contribute zero."""
    n = len(tracks)
    sims = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        fi = tracks[i].feature
        if fi is None:
            continue
        for j in range(n):
            fj = tracks[j].feature
            if fj is None:
                continue
            sims[i, j] = float(np.dot(fi, fj))
    return sims


def build_instance(tracks) -> SelectionInstance:
    return SelectionInstance(
        similarities=track_similarities(tracks),
        confidences=np.array([t.confidence for t in tracks], dtype=np.float64),
    )


def objective(
    instance: SelectionInstance, selected: tuple[int, ...], cfg: SelectionConfig
) -> float:
    """Value of a candidate subset; the empty set scores zero."""
    if not selected:
        return 0.0
    ids = np.asarray(selected, dtype=np.intp)
    if len(set(selected)) != len(selected):
        raise ValueError("selected tracks must be distinct")
    coverage = float(instance.similarities[:, ids].max(axis=1).sum())
    bonus = float(instance.confidences[ids].sum())
    return (
        coverage
        - cfg.open_cost * len(selected)
        + cfg.discriminative_weight * bonus
    )


def _marginal_gain(
    instance: SelectionInstance,
    best: np.ndarray | None,
    candidate: int,
    cfg: SelectionConfig,
) -> float:
    """Gain of adding candidate given the current per-track best coverage.

    best is None for the empty set, where coverage jumps from zero to the
    candidate's full column rather than growing elementwise.
    """
    column = instance.similarities[:, candidate]
    if best is None:
        coverage_gain = float(column.sum())
    else:
        coverage_gain = float(np.maximum(column - best, 0.0).sum())
    return (
        coverage_gain
        - cfg.open_cost
        + cfg.discriminative_weight * float(instance.confidences[candidate])
    )


def greedy_select(
    instance: SelectionInstance, cfg: SelectionConfig, lazy: bool = True
) -> SelectionResult:
    """Greedy maximization; stops when no candidate improves the objective.

    Ties break toward the smallest track index. The lazy variant keeps a
    priority queue of stale gains; it must refresh every gain once after
    the first pick, because gains relative to the empty set are not upper
    bounds when similarities go negative, and is exact from then on by
    diminishing returns of the coverage term over non-empty sets.
    """
    n = instance.num_tracks
    budget = n if cfg.budget is None else min(cfg.budget, n)
    selected: list[int] = []
    gains: list[float] = []
    best: np.ndarray | None = None
    remaining = set(range(n))

    if not lazy:
        while remaining and len(selected) < budget:
            scored = [
                (_marginal_gain(instance, best, c, cfg), c) for c in sorted(remaining)
            ]
            gain, chosen = max(scored, key=lambda pair: (pair[0], -pair[1]))
            if gain <= 0.0:
                break
            selected.append(chosen)
            gains.append(gain)
            remaining.discard(chosen)
            column = instance.similarities[:, chosen]
            best = column.copy() if best is None else np.maximum(best, column)
        return SelectionResult(
            selected=tuple(selected),
            objective=objective(instance, tuple(selected), cfg),
            gains=tuple(gains),
        )

    # Lazy path. Entries are (-gain, candidate, generation); a stale entry
    # gets rescored and pushed back. Generation 0 covers the empty set;
    # generation g > 0 means scored against the first g picks.
    heap = [
        (-_marginal_gain(instance, None, c, cfg), c, 0) for c in range(n)
    ]
    heapq.heapify(heap)
    while heap and len(selected) < budget:
        neg_gain, candidate, generation = heapq.heappop(heap)
        if candidate not in remaining:
            continue
        if generation != len(selected):
            fresh = _marginal_gain(instance, best, candidate, cfg)
            heapq.heappush(heap, (-fresh, candidate, len(selected)))
            continue
        gain = -neg_gain
        if gain <= 0.0:
            break
        selected.append(candidate)
        gains.append(gain)
        remaining.discard(candidate)
        column = instance.similarities[:, candidate]
        best = column.copy() if best is None else np.maximum(best, column)
        if len(selected) == 1:
            # Rebuild from scratch: empty-set gains are not valid upper
            # bounds once coverage is elementwise.
            heap = [
                (-_marginal_gain(instance, best, c, cfg), c, 1)
                for c in sorted(remaining)
            ]
            heapq.heapify(heap)
    return SelectionResult(
        selected=tuple(selected),
        objective=objective(instance, tuple(selected), cfg),
        gains=tuple(gains),
    )


def brute_force_select(
    instance: SelectionInstance, cfg: SelectionConfig
) -> SelectionResult:
    """Exact maximizer by enumeration. Intended for small oracle instances."""
    from itertools import combinations

    n = instance.num_tracks
    if n > 20:
        raise ValueError("brute force limited to 20 tracks")
    budget = n if cfg.budget is None else min(cfg.budget, n)
    best_subset: tuple[int, ...] = ()
    best_value = 0.0
    for size in range(1, budget + 1):
        for subset in combinations(range(n), size):
            value = objective(instance, subset, cfg)
            if value > best_value + 1e-15:
                best_value = value
                best_subset = subset
    return SelectionResult(selected=best_subset, objective=best_value, gains=())
