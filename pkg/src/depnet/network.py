"""Dependency networks: tree assembly, arc derivation, exact consistent networks."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from .data import CaseMatrix, DataError, ItemVocabulary, Popularity, popularity as _popularity
from .trees import DecisionTree, ScoreConfig, learn_tree, tree_lookup


@dataclass(frozen=True)
class Arc:
    source: int
    target: int
    strength: float
    order_index: int


@dataclass
class DependencyNetwork:
    """One decision tree per variable plus the derived, ordered arc set.

    Arc (X -> Y) exists iff X appears in a split of Y's tree.  Strength is
    the score delta of the first split that introduced the arc; the global
    order is descending strength (ties by target then source index), which
    drives the viewer's reveal slider.
    """

    vocabulary: ItemVocabulary
    trees: list[DecisionTree]
    arcs: list[Arc]
    popularity: Popularity | None = None

    def __post_init__(self):
        if len(self.trees) != len(self.vocabulary):
            raise ValueError("need exactly one tree per vocabulary item")
        for i, tree in enumerate(self.trees):
            if tree.target != i:
                raise ValueError(f"tree at position {i} targets {tree.target}")
        if sorted(a.order_index for a in self.arcs) != list(range(len(self.arcs))):
            raise ValueError("arc order_index values must be a permutation of 0..n-1")

    @property
    def n_vars(self) -> int:
        return len(self.trees)

    @property
    def cards(self) -> tuple[int, ...]:
        return (2,) * self.n_vars

    def local_distribution(self, i: int, assignment: Sequence[int] | np.ndarray) -> np.ndarray:
        return tree_lookup(self.trees[i], assignment)

    def arc_pairs(self) -> set[tuple[int, int]]:
        return {(a.source, a.target) for a in self.arcs}

    @classmethod
    def assemble(
        cls,
        vocabulary: ItemVocabulary,
        trees: list[DecisionTree],
        popularity: Popularity | None = None,
    ) -> "DependencyNetwork":
        arcs = derive_arcs(trees)
        return cls(vocabulary, trees, arcs, popularity)


def derive_arcs(trees: Sequence[DecisionTree]) -> list[Arc]:
    """Arcs from split sets, ordered by descending strength (ties: target, source)."""
    raw: list[tuple[float, int, int]] = []
    for tree in trees:
        predictors = tree.predictors
        if predictors != set(tree.split_gains):
            raise ValueError(f"tree for {tree.target}: split gains out of sync with splits")
        for j in predictors:
            raw.append((tree.split_gains[j], j, tree.target))
    raw.sort(key=lambda t: (-t[0], t[2], t[1]))
    return [
        Arc(source=j, target=t, strength=s, order_index=k)
        for k, (s, j, t) in enumerate(raw)
    ]


def _learn_one(data: CaseMatrix, cfg: ScoreConfig, target: int) -> DecisionTree:
    return learn_tree(target, data, cfg)


def learn_dependency_network(
    data: CaseMatrix,
    cfg: ScoreConfig | None = None,
    vocabulary: ItemVocabulary | None = None,
    n_jobs: int = 1,
) -> DependencyNetwork:
    """Learn every local tree independently (no acyclicity constraint)."""
    cfg = cfg or ScoreConfig()
    if data.n_items < 1:
        raise DataError("cannot learn from an empty vocabulary")
    if data.n_cases < 1:
        raise DataError("cannot learn from an empty case matrix")
    if vocabulary is None:
        vocabulary = ItemVocabulary.generic(data.n_items)
    elif len(vocabulary) != data.n_items:
        raise DataError("vocabulary size does not match case matrix")

    targets = range(data.n_items)
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(partial(_learn_one, data, cfg), targets, chunksize=8))
    else:
        trees = [learn_tree(t, data, cfg) for t in targets]
    return DependencyNetwork.assemble(vocabulary, trees, _popularity(data))


@dataclass(frozen=True)
class ExplicitJoint:
    """Small explicit joint distribution over discrete variables.

    ``probs`` is flat over full assignments in canonical state order
    (lexicographic, variable 0 most significant).  Must be strictly
    positive and normalized.
    """

    n: int
    probs: np.ndarray
    cards: tuple[int, ...] = ()

    def __post_init__(self):
        cards = self.cards or (2,) * self.n
        object.__setattr__(self, "cards", tuple(int(c) for c in cards))
        if self.n != len(self.cards) or self.n < 1 or self.n > 12:
            raise ValueError(f"need 1 <= n <= 12 variables, got n={self.n}")
        p = np.asarray(self.probs, dtype=float).ravel()
        if len(p) != int(np.prod(self.cards)):
            raise ValueError("probs length must equal the product of cardinalities")
        if np.any(p <= 0.0):
            raise ValueError("joint must be strictly positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"joint must sum to 1 within 1e-12, got {p.sum()!r}")
        object.__setattr__(self, "probs", p)

    @property
    def tensor(self) -> np.ndarray:
        return self.probs.reshape(self.cards)

    def marginal(self, i: int) -> np.ndarray:
        axes = tuple(k for k in range(self.n) if k != i)
        return self.tensor.sum(axis=axes)

    def conditional(self, targets: Sequence[int], evidence: dict[int, int]) -> np.ndarray:
        """Exact p(targets | evidence), flat in canonical order of ``targets``."""
        targets = tuple(targets)
        if set(targets) & set(evidence):
            raise ValueError("targets and evidence overlap")
        t = self.tensor
        idx: list[object] = [slice(None)] * self.n
        for var, val in evidence.items():
            idx[var] = val
        sliced = t[tuple(idx)]
        remaining = [k for k in range(self.n) if k not in evidence]
        drop = tuple(pos for pos, var in enumerate(remaining) if var not in targets)
        marg = sliced.sum(axis=drop) if drop else sliced
        kept = [var for var in remaining if var in targets]
        # reorder axes to the requested target order
        perm = [kept.index(var) for var in targets]
        marg = np.transpose(marg, perm)
        out = marg / marg.sum()
        return out.ravel()


def _conditional_on(tensor: np.ndarray, i: int, given: Sequence[int]) -> tuple[np.ndarray, list[int]]:
    """p(x_i | x_given) as a tensor over sorted(given + [i]); returns kept axis order."""
    n = tensor.ndim
    keep = sorted(set(given) | {i})
    drop = tuple(k for k in range(n) if k not in keep)
    marg = tensor.sum(axis=drop) if drop else tensor
    pos_i = keep.index(i)
    cond = marg / marg.sum(axis=pos_i, keepdims=True)
    return cond, keep


def _independent_given(
    tensor: np.ndarray, i: int, q: int, given: Sequence[int], tol: float
) -> bool:
    """True iff X_i is independent of X_q given the variables in ``given``."""
    cond, keep = _conditional_on(tensor, i, list(given) + [q])
    pos_q = keep.index(q)
    ref = cond.take(indices=[0], axis=pos_q)
    return bool(np.max(np.abs(cond - ref)) <= tol)


def conditionally_dependent(p: ExplicitJoint, i: int, j: int, tol: float = 1e-9) -> bool:
    """Direct check: does p(x_i | all others) vary with x_j?"""
    others = [k for k in range(p.n) if k not in (i, j)]
    return not _independent_given(p.tensor, i, j, others, tol)


@dataclass
class TableNetwork:
    """Dependency network with exact full conditional tables as locals.

    ``tables[i]`` has one axis per parent (ascending variable order) plus a
    trailing axis over the states of X_i.
    """

    n: int
    cards: tuple[int, ...]
    parents: tuple[tuple[int, ...], ...]
    tables: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not (len(self.parents) == len(self.tables) == self.n):
            raise ValueError("need parents and a table for every variable")
        for i, (pa, tab) in enumerate(zip(self.parents, self.tables)):
            expected = tuple(self.cards[q] for q in pa) + (self.cards[i],)
            if tab.shape != expected:
                raise ValueError(f"table {i} shape {tab.shape}, expected {expected}")
            if np.any(tab <= 0.0):
                raise ValueError(f"table {i} must be strictly positive")
            if np.max(np.abs(tab.sum(axis=-1) - 1.0)) > 1e-12:
                raise ValueError(f"table {i} rows must sum to 1")

    @property
    def n_vars(self) -> int:
        return self.n

    def local_distribution(self, i: int, assignment: Sequence[int] | np.ndarray) -> np.ndarray:
        key = tuple(int(assignment[q]) for q in self.parents[i])
        return self.tables[i][key]

    def arc_pairs(self) -> set[tuple[int, int]]:
        return {(q, i) for i in range(self.n) for q in self.parents[i]}


def consistent_dn_from_joint(p: ExplicitJoint, tol: float = 1e-9) -> TableNetwork:
    """Minimal consistent dependency network for an explicit positive joint.

    Each local starts as the exact full conditional; parents are removed,
    lowest index first with a restart after each removal, whenever the
    child is conditionally independent of the parent given the remaining
    parents.  For positive joints the minimal set is unique.
    """
    t = p.tensor
    parents: list[tuple[int, ...]] = []
    tables: list[np.ndarray] = []
    for i in range(p.n):
        current = [k for k in range(p.n) if k != i]
        changed = True
        while changed:
            changed = False
            for q in list(current):
                rest = [k for k in current if k != q]
                if _independent_given(t, i, q, rest, tol):
                    current.remove(q)
                    changed = True
                    break
        current.sort()
        cond, keep = _conditional_on(t, i, current)
        pos_i = keep.index(i)
        tables.append(np.moveaxis(cond, pos_i, -1))
        parents.append(tuple(current))
    return TableNetwork(p.n, p.cards, tuple(parents), tuple(tables))


def is_bidirectional(net) -> bool:
    """True iff the arc set is symmetric as a relation."""
    pairs = net.arc_pairs()
    return all((b, a) in pairs for (a, b) in pairs)


def adjacency_set(net) -> set[tuple[int, int]]:
    """Unordered adjacencies: {X, Y} present iff X->Y or Y->X."""
    return {(min(a, b), max(a, b)) for (a, b) in net.arc_pairs()}
