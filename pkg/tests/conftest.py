"""Shared fixtures: hand datasets, random joints, synthetic web traffic."""

from __future__ import annotations

import numpy as np
import pytest

from depnet.data import CaseMatrix
from depnet.network import ExplicitJoint


@pytest.fixture
def perfect_pair() -> CaseMatrix:
    """20 cases over 2 items, perfectly correlated: 10 x {0,1}, 10 x {}."""
    cases = tuple([frozenset({0, 1})] * 10 + [frozenset()] * 10)
    return CaseMatrix(2, cases)


@pytest.fixture
def balanced_product() -> CaseMatrix:
    """2 items, all 4 combinations x 5: children of any split mirror the root."""
    combos = [frozenset(), frozenset({0}), frozenset({1}), frozenset({0, 1})]
    return CaseMatrix(2, tuple(c for c in combos for _ in range(5)))


def random_positive_joint(n: int, rng: np.random.Generator) -> ExplicitJoint:
    """Strictly positive joint, bounded away from zero, exactly normalized."""
    raw = rng.random(2**n) + 0.1
    return ExplicitJoint(n, raw / raw.sum())


def chain_joint() -> ExplicitJoint:
    """p(x) p(y|x) p(z|y) with nondegenerate tables; X and Z independent given Y."""
    px = np.array([0.7, 0.3])
    py_x = np.array([[0.8, 0.2], [0.3, 0.7]])  # [x, y]
    pz_y = np.array([[0.6, 0.4], [0.1, 0.9]])  # [y, z]
    probs = np.empty(8)
    for x in range(2):
        for y in range(2):
            for z in range(2):
                probs[x * 4 + y * 2 + z] = px[x] * py_x[x, y] * pz_y[y, z]
    return ExplicitJoint(3, probs)


def synthetic_web_cases(n_items: int = 30, n_cases: int = 400, seed: int = 7) -> CaseMatrix:
    """Power-law item popularity with planted pairwise co-visits."""
    rng = np.random.default_rng(seed)
    weights = (np.arange(n_items) + 2.0) ** -1.1
    probs = np.clip(weights * (3.0 / weights.sum()), 0.005, 0.9)
    cases = []
    for _ in range(n_cases):
        picked = set(np.flatnonzero(rng.random(n_items) < probs).tolist())
        for j in list(picked):
            # items (2k, 2k+1) for k < 5 tend to co-occur
            if j < 10 and j % 2 == 0 and rng.random() < 0.7:
                picked.add(j + 1)
        cases.append(frozenset(picked))
    return CaseMatrix(n_items, tuple(cases))


@pytest.fixture
def synthetic_web() -> CaseMatrix:
    return synthetic_web_cases()
