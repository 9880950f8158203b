"""Ranked recommendations: direct-lookup scoring and the popularity baseline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .data import Popularity
from .network import DependencyNetwork


@dataclass(frozen=True)
class RecommendationList:
    """Full ranking over all non-input items, scores non-increasing.

    Positions are 0-based: entries[0] is rank 0.
    """

    entries: tuple[tuple[int, float], ...]
    input_set: frozenset[int]

    def __post_init__(self):
        prev = None
        for item, score in self.entries:
            if item in self.input_set:
                raise ValueError(f"input item {item} present in ranking")
            if prev is not None and score > prev:
                raise ValueError("scores must be non-increasing")
            prev = score

    @property
    def items(self) -> tuple[int, ...]:
        return tuple(item for item, _ in self.entries)


def dn_scores(dn: DependencyNetwork, input_set: Iterable[int]) -> np.ndarray:
    """Per-item p(X_i = 1 | input items = 1, all others = 0) by direct lookup.

    One tree traversal per candidate item; no sampling, no inference.
    Input positions hold NaN.
    """
    input_set = frozenset(input_set)
    n = dn.n_vars
    for j in input_set:
        if not 0 <= j < n:
            raise ValueError(f"input item {j} out of range [0, {n})")
    x = np.zeros(n, dtype=np.int64)
    for j in input_set:
        x[j] = 1
    scores = np.full(n, np.nan)
    for i in range(n):
        if i not in input_set:
            scores[i] = dn.local_distribution(i, x)[1]
    return scores


def _ranked(candidates: Iterable[tuple[int, float, float]]) -> list[tuple[int, float]]:
    """Sort by score desc, popularity desc, index asc."""
    ordered = sorted(candidates, key=lambda t: (-t[1], -t[2], t[0]))
    return [(item, score) for item, score, _ in ordered]


def recommend(dn: DependencyNetwork, input_set: Iterable[int]) -> RecommendationList:
    """Rank all non-input items by lookup probability.

    Ties break by training popularity (when the model carries it), then by
    item index, so identical (model, input) pairs always give identical lists.
    """
    input_set = frozenset(input_set)
    scores = dn_scores(dn, input_set)
    pop = dn.popularity.probs if dn.popularity is not None else np.zeros(dn.n_vars)
    cands = [(i, float(scores[i]), float(pop[i])) for i in range(dn.n_vars) if i not in input_set]
    return RecommendationList(tuple(_ranked(cands)), input_set)


def baseline_recommend(pop: Popularity, input_set: Iterable[int]) -> RecommendationList:
    """Rank non-input items by overall popularity (index ascending on ties)."""
    input_set = frozenset(input_set)
    n = len(pop)
    for j in input_set:
        if not 0 <= j < n:
            raise ValueError(f"input item {j} out of range [0, {n})")
    cands = [(i, float(pop.probs[i]), 0.0) for i in range(n) if i not in input_set]
    return RecommendationList(tuple(_ranked(cands)), input_set)
