"""Per-variable probabilistic decision trees: Bayesian score, greedy learning, lookup."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaln

from .data import CaseMatrix


@dataclass(frozen=True)
class ScoreConfig:
    """Scoring configuration: structure prior kappa^f, uniform parameter prior."""

    kappa: float = 0.01

    def __post_init__(self):
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")


@dataclass(frozen=True)
class SplitTest:
    """Binary split: X_variable = value vs all other values."""

    variable: int
    value: int


@dataclass
class Leaf:
    counts: np.ndarray  # per-state counts of the tree's target variable

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or len(c) < 2 or np.any(c < 0):
            raise ValueError("leaf counts must be >= 2 nonnegative integers")
        self.counts = c

    @property
    def n_states(self) -> int:
        return len(self.counts)

    def posterior(self) -> np.ndarray:
        """Posterior-mean distribution (N_k + 1)/(N + r); strictly positive."""
        c = self.counts
        return (c + 1.0) / (c.sum() + len(c))


@dataclass
class Internal:
    test: SplitTest
    child_eq: "TreeNode"
    child_neq: "TreeNode"


TreeNode = Leaf | Internal


class _Counter:
    """Mutable call counter, used to verify the lookup-only prediction path."""

    __slots__ = ("value",)

    def __init__(self):
        self.value = 0

    def bump(self):
        self.value += 1

    def reset(self):
        self.value = 0


traversals = _Counter()


@dataclass
class DecisionTree:
    """Local distribution p(target | predictors) as a binary-split tree.

    ``split_gains`` records, per predictor, the score delta of the first
    split that introduced it; downstream arc strengths come from here.
    """

    target: int
    root: TreeNode
    split_gains: dict[int, float] = field(default_factory=dict)

    @property
    def predictors(self) -> frozenset[int]:
        """Set of variables appearing in any split; this set is the parent set."""
        out: set[int] = set()
        for node, _depth in _walk(self.root):
            if isinstance(node, Internal):
                out.add(node.test.variable)
        return frozenset(out)

    def leaves(self) -> list[Leaf]:
        return [n for n, _ in _walk(self.root) if isinstance(n, Leaf)]


def _walk(node: TreeNode, depth: int = 0) -> Iterator[tuple[TreeNode, int]]:
    """Preorder walk, eq child before neq child."""
    yield node, depth
    if isinstance(node, Internal):
        yield from _walk(node.child_eq, depth + 1)
        yield from _walk(node.child_neq, depth + 1)


def leaf_log_marginal(counts: Sequence[int] | np.ndarray, r: int | None = None) -> float:
    """Log marginal likelihood of a leaf under a uniform Dirichlet prior.

    ln Gamma(r) - ln Gamma(r + N) + sum_k ln Gamma(1 + N_k), N = sum_k N_k.
    """
    c = np.asarray(counts, dtype=np.int64)
    if r is None:
        r = len(c)
    if r != len(c) or r < 2:
        raise ValueError(f"need r == len(counts) >= 2, got r={r}, len={len(c)}")
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    n = int(c.sum())
    return float(gammaln(r) - gammaln(r + n) + gammaln(1 + c).sum())


def _leaf_counts(y: np.ndarray, rows: np.ndarray) -> np.ndarray:
    n1 = int(y[rows].sum())
    return np.array([len(rows) - n1, n1], dtype=np.int64)


def _route_rows(rows: np.ndarray, col_mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hit = col_mask[rows]
    return rows[hit], rows[~hit]


def _column_mask(data: CaseMatrix, j: int) -> np.ndarray:
    mask = np.zeros(data.n_cases, dtype=bool)
    start, end = data.csc.indptr[j], data.csc.indptr[j + 1]
    mask[data.csc.indices[start:end]] = True
    return mask


def _target_column(data: CaseMatrix, target: int) -> np.ndarray:
    return _column_mask(data, target)


def tree_log_score(tree: DecisionTree, data: CaseMatrix, cfg: ScoreConfig) -> float:
    """f * ln(kappa) + sum over leaves of the leaf log marginal.

    f = (#leaves) * (r - 1); leaf counts are re-accumulated from the cases
    routed to each leaf, not read from the tree.
    """
    y = _target_column(data, tree.target)
    all_rows = np.arange(data.n_cases)
    log_kappa = math.log(cfg.kappa)
    total = 0.0

    def rec(node: TreeNode, rows: np.ndarray) -> float:
        nonlocal total
        if isinstance(node, Leaf):
            counts = _leaf_counts(y, rows)
            r = node.n_states
            total += log_kappa * (r - 1) + leaf_log_marginal(counts, r)
            return 0.0
        mask = _column_mask(data, node.test.variable)
        if node.test.value == 1:
            rows_eq, rows_neq = _route_rows(rows, mask)
        else:
            rows_neq, rows_eq = _route_rows(rows, mask)
        rec(node.child_eq, rows_eq)
        rec(node.child_neq, rows_neq)
        return 0.0

    rec(tree.root, all_rows)
    return total


def _pair_log_marginal(c0: np.ndarray, c1: np.ndarray) -> np.ndarray:
    """Vectorized binary-leaf log marginal: lnGamma(2) term is zero."""
    return gammaln(1 + c0) + gammaln(1 + c1) - gammaln(2 + c0 + c1)


@dataclass
class _LeafState:
    leaf: Leaf
    rows: np.ndarray
    used: frozenset[int]  # variables tested on the path to this leaf
    depth: int
    parent: Internal | None
    side: str  # "eq" | "neq" | "root"
    best_delta: float = -math.inf
    best_var: int = -1


def _evaluate_leaf(
    state: _LeafState,
    data: CaseMatrix,
    y: np.ndarray,
    target: int,
    log_kappa: float,
) -> None:
    """Best admissible split for one leaf: delta over all candidate variables.

    For binary items only the (j, 1) split is enumerated; (j, 0) induces the
    identical partition.  Zero-count children stay admissible (the score
    penalizes them); variables already tested on the path do not.
    """
    rows = state.rows
    n_l = len(rows)
    n1 = int(y[rows].sum())
    n0 = n_l - n1
    parent_lm = float(_pair_log_marginal(np.array(n0), np.array(n1)))

    X = data.csr
    c1 = np.asarray(X[rows].sum(axis=0)).ravel()
    pos_rows = rows[y[rows]]
    c11 = np.asarray(X[pos_rows].sum(axis=0)).ravel()
    c10 = c1 - c11
    c01 = n1 - c11
    c00 = n0 - c10

    delta = log_kappa + _pair_log_marginal(c10, c11) + _pair_log_marginal(c00, c01) - parent_lm
    delta[target] = -math.inf
    for j in state.used:
        delta[j] = -math.inf

    if len(delta) == 0 or np.all(np.isinf(delta)):
        state.best_delta, state.best_var = -math.inf, -1
        return
    j = int(np.argmax(delta))  # first max: lowest variable index wins ties
    state.best_delta, state.best_var = float(delta[j]), j


def learn_tree(target: int, data: CaseMatrix, cfg: ScoreConfig) -> DecisionTree:
    """Greedy hill climbing over leaf-replacement binary splits.

    Starts from a singleton root leaf; repeatedly applies the single best
    strictly-positive-delta replacement over all (leaf, variable) pairs;
    stops when none remains.  Ties break on lowest variable index, then
    lowest split value, then shallowest/leftmost leaf in preorder.
    """
    if not 0 <= target < data.n_items:
        raise ValueError(f"target {target} out of range [0, {data.n_items})")
    y = _target_column(data, target)
    all_rows = np.arange(data.n_cases)
    log_kappa = math.log(cfg.kappa)

    root: TreeNode = Leaf(_leaf_counts(y, all_rows))
    root_state = _LeafState(root, all_rows, frozenset(), 0, None, "root")
    _evaluate_leaf(root_state, data, y, target, log_kappa)
    frontier: dict[int, _LeafState] = {id(root): root_state}
    gains: dict[int, float] = {}

    while True:
        order = {id(node): i for i, (node, _) in enumerate(_walk(root)) if isinstance(node, Leaf)}
        best: _LeafState | None = None
        best_key = None
        for state in frontier.values():
            if state.best_var < 0:
                continue
            key = (-state.best_delta, state.best_var, 1, state.depth, order[id(state.leaf)])
            if best_key is None or key < best_key:
                best_key, best = key, state
        if best is None or not best.best_delta > 0.0:
            break

        j, delta = best.best_var, best.best_delta
        mask = _column_mask(data, j)
        rows_eq, rows_neq = best.rows[mask[best.rows]], best.rows[~mask[best.rows]]
        child_eq = Leaf(_leaf_counts(y, rows_eq))
        child_neq = Leaf(_leaf_counts(y, rows_neq))
        node = Internal(SplitTest(j, 1), child_eq, child_neq)
        if best.parent is None:
            root = node
        elif best.side == "eq":
            best.parent.child_eq = node
        else:
            best.parent.child_neq = node

        used = best.used | {j}
        del frontier[id(best.leaf)]
        for leaf, rows, side in ((child_eq, rows_eq, "eq"), (child_neq, rows_neq, "neq")):
            state = _LeafState(leaf, rows, used, best.depth + 1, node, side)
            _evaluate_leaf(state, data, y, target, log_kappa)
            frontier[id(leaf)] = state

        if j not in gains:
            gains[j] = delta

    return DecisionTree(target, root, gains)


def tree_lookup(tree: DecisionTree, assignment: Sequence[int] | np.ndarray) -> np.ndarray:
    """Route a full assignment to a leaf; return its posterior-mean distribution.

    The target coordinate of ``assignment`` is ignored.
    """
    traversals.bump()
    node = tree.root
    while isinstance(node, Internal):
        if assignment[node.test.variable] == node.test.value:
            node = node.child_eq
        else:
            node = node.child_neq
    return node.posterior()
