import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depnet.data import CaseMatrix
from depnet.trees import (
    DecisionTree,
    Internal,
    Leaf,
    ScoreConfig,
    SplitTest,
    leaf_log_marginal,
    learn_tree,
    tree_log_score,
    tree_lookup,
)

CFG = ScoreConfig(kappa=0.01)


def factorial_log_marginal(counts) -> float:
    """Independent oracle: ln( (r-1)! * prod N_k! / (N + r - 1)! ) via exact integers."""
    r = len(counts)
    n = sum(counts)
    num = math.factorial(r - 1)
    for c in counts:
        num *= math.factorial(c)
    den = math.factorial(n + r - 1)
    return math.log(Fraction(num, den))


def test_leaf_log_marginal_empty():
    assert leaf_log_marginal([0, 0]) == 0.0


def test_leaf_log_marginal_worked_examples():
    assert leaf_log_marginal([3, 1]) == pytest.approx(factorial_log_marginal([3, 1]), abs=1e-12)
    assert leaf_log_marginal([3, 1]) == pytest.approx(math.log(0.05), abs=1e-12)
    assert leaf_log_marginal([2, 2]) == pytest.approx(factorial_log_marginal([2, 2]), abs=1e-12)
    assert leaf_log_marginal([2, 2]) == pytest.approx(math.log(1 / 30), abs=1e-12)


def test_leaf_log_marginal_multistate():
    assert leaf_log_marginal([1, 2, 3]) == pytest.approx(factorial_log_marginal([1, 2, 3]), abs=1e-12)


def test_leaf_log_marginal_validation():
    with pytest.raises(ValueError):
        leaf_log_marginal([5])
    with pytest.raises(ValueError):
        leaf_log_marginal([1, -1])
    with pytest.raises(ValueError):
        leaf_log_marginal([1, 1], r=3)


@settings(max_examples=60)
@given(st.lists(st.integers(0, 30), min_size=2, max_size=5))
def test_leaf_log_marginal_exchangeable(counts):
    base = leaf_log_marginal(counts)
    for perm in permutations(counts):
        assert leaf_log_marginal(list(perm)) == pytest.approx(base, abs=1e-12)


@settings(max_examples=60)
@given(st.lists(st.integers(0, 40), min_size=2, max_size=4))
def test_leaf_log_marginal_matches_factorials(counts):
    assert leaf_log_marginal(counts) == pytest.approx(factorial_log_marginal(counts), abs=1e-10)


def _single_leaf_tree(target: int) -> DecisionTree:
    return DecisionTree(target, Leaf(np.array([0, 0])), {})


def _one_split_tree(target: int, j: int) -> DecisionTree:
    return DecisionTree(
        target, Internal(SplitTest(j, 1), Leaf(np.array([0, 0])), Leaf(np.array([0, 0]))), {}
    )


def test_tree_log_score_single_leaf(perfect_pair):
    # target 1 has counts (10, 10) at the root; the factorial closed form
    # ln(0.01) + ln(10! * 10! / 21!) is authoritative and equals -19.776484
    expected = math.log(0.01) + factorial_log_marginal([10, 10])
    got = tree_log_score(_single_leaf_tree(1), perfect_pair, CFG)
    assert got == pytest.approx(expected, abs=1e-10)
    assert got == pytest.approx(-19.776, abs=5e-4)


def test_tree_log_score_perfect_split(perfect_pair):
    expected = 2 * math.log(0.01) + 2 * factorial_log_marginal([10, 0])
    got = tree_log_score(_one_split_tree(1, 0), perfect_pair, CFG)
    assert got == pytest.approx(expected, abs=1e-10)
    assert got == pytest.approx(-14.006, abs=5e-4)


def test_tree_log_score_empty_dataset():
    empty = CaseMatrix(2, ())
    assert tree_log_score(_single_leaf_tree(0), empty, CFG) == pytest.approx(math.log(0.01), abs=1e-12)


def test_tree_log_score_decomposes(perfect_pair):
    # score of the split tree = sum over leaves of (ln kappa + leaf marginal)
    tree = _one_split_tree(1, 0)
    per_leaf = [
        math.log(CFG.kappa) + factorial_log_marginal([0, 10]),
        math.log(CFG.kappa) + factorial_log_marginal([10, 0]),
    ]
    assert tree_log_score(tree, perfect_pair, CFG) == pytest.approx(sum(per_leaf), abs=1e-10)


def test_learn_tree_perfect_correlation(perfect_pair):
    tree = learn_tree(1, perfect_pair, CFG)
    assert isinstance(tree.root, Internal)
    assert tree.root.test == SplitTest(0, 1)
    assert isinstance(tree.root.child_eq, Leaf) and isinstance(tree.root.child_neq, Leaf)
    assert tree.predictors == {0}
    # the split wins by the worked score margin (-14.006 beats -19.776)
    split_score = tree_log_score(tree, perfect_pair, CFG)
    root_score = tree_log_score(_single_leaf_tree(1), perfect_pair, CFG)
    assert split_score == pytest.approx(2 * math.log(0.01) + 2 * factorial_log_marginal([10, 0]), abs=1e-10)
    assert root_score == pytest.approx(math.log(0.01) + factorial_log_marginal([10, 10]), abs=1e-10)
    assert split_score == pytest.approx(-14.006, abs=5e-4)
    assert root_score == pytest.approx(-19.776, abs=5e-4)
    assert tree.split_gains[0] == pytest.approx(split_score - root_score, abs=1e-9)


def test_learn_tree_independent_target(balanced_product):
    # children of any candidate split have exactly the root's proportions
    tree = learn_tree(1, balanced_product, CFG)
    assert isinstance(tree.root, Leaf)
    assert tree.predictors == frozenset()
    # the score evidence: every candidate delta is <= 0
    root_score = tree_log_score(_single_leaf_tree(1), balanced_product, CFG)
    alt_score = tree_log_score(_one_split_tree(1, 0), balanced_product, CFG)
    assert alt_score <= root_score


def test_learn_tree_no_candidates():
    data = CaseMatrix(1, (frozenset({0}), frozenset()))
    tree = learn_tree(0, data, CFG)
    assert isinstance(tree.root, Leaf)
    assert tree.predictors == frozenset()


def test_learn_tree_empty_data_single_leaf():
    tree = learn_tree(0, CaseMatrix(3, ()), CFG)
    assert isinstance(tree.root, Leaf)


def test_learn_tree_tie_breaks_lowest_variable():
    # items 0 and 2 are identical predictors of target 1
    cases = tuple([frozenset({0, 1, 2})] * 7 + [frozenset()] * 7)
    tree = learn_tree(1, CaseMatrix(3, cases), CFG)
    assert isinstance(tree.root, Internal)
    assert tree.root.test.variable == 0


def test_learn_tree_score_monotone(synthetic_web):
    # replay the greedy path: every applied split must have had a positive gain
    tree = learn_tree(3, synthetic_web, ScoreConfig(kappa=0.5))
    for gain in tree.split_gains.values():
        assert gain > 0.0
    # final tree beats the single-leaf start
    if tree.predictors:
        final = tree_log_score(tree, synthetic_web, ScoreConfig(kappa=0.5))
        start = tree_log_score(_single_leaf_tree(3), synthetic_web, ScoreConfig(kappa=0.5))
        assert final > start


def test_tree_lookup_uniform_on_empty_leaf():
    tree = DecisionTree(0, Leaf(np.array([0, 0])), {})
    assert np.allclose(tree_lookup(tree, np.zeros(1, dtype=int)), [0.5, 0.5])


def test_tree_lookup_smoothing():
    tree = DecisionTree(0, Leaf(np.array([3, 1])), {})
    dist = tree_lookup(tree, np.zeros(1, dtype=int))
    assert dist == pytest.approx([4 / 6, 2 / 6], abs=1e-12)


def test_tree_lookup_routes_by_split(perfect_pair):
    tree = learn_tree(1, perfect_pair, CFG)
    x = np.array([1, 0])
    assert tree_lookup(tree, x)[1] == pytest.approx(11 / 12, abs=1e-12)
    x = np.array([0, 0])
    assert tree_lookup(tree, x)[1] == pytest.approx(1 / 12, abs=1e-12)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 50), min_size=2, max_size=4))
def test_tree_lookup_positive_and_normalized(counts):
    tree = DecisionTree(0, Leaf(np.array(counts)), {})
    dist = tree_lookup(tree, np.zeros(1, dtype=int))
    assert np.all(dist > 0.0)
    assert float(dist.sum()) == pytest.approx(1.0, abs=1e-12)


def test_predictors_computed_from_splits():
    inner = Internal(
        SplitTest(2, 1),
        Leaf(np.array([1, 0])),
        Internal(SplitTest(4, 1), Leaf(np.array([0, 1])), Leaf(np.array([1, 1]))),
    )
    tree = DecisionTree(0, inner, {})
    assert tree.predictors == {2, 4}


def _brute_force_first_split(target: int, data: CaseMatrix, cfg: ScoreConfig):
    """Exhaustive (variable) argmax by full-tree rescoring; ties to lowest index."""
    root_score = tree_log_score(_single_leaf_tree(target), data, cfg)
    best = None
    for j in range(data.n_items):
        if j == target:
            continue
        delta = tree_log_score(_one_split_tree(target, j), data, cfg) - root_score
        if best is None or delta > best[0]:
            best = (delta, j)
    return best


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_learn_tree_first_split_matches_enumeration(data):
    n_items = data.draw(st.integers(2, 4))
    n_cases = data.draw(st.integers(4, 24))
    rows = [
        frozenset(
            j for j in range(n_items) if data.draw(st.booleans())
        )
        for _ in range(n_cases)
    ]
    matrix = CaseMatrix(n_items, tuple(rows))
    target = data.draw(st.integers(0, n_items - 1))
    tree = learn_tree(target, matrix, CFG)
    delta, j = _brute_force_first_split(target, matrix, CFG)
    if delta > 1e-9:
        assert isinstance(tree.root, Internal)
        learned_delta = tree.split_gains[tree.root.test.variable]
        assert learned_delta == pytest.approx(delta, abs=1e-9)
        assert tree.root.test.variable == j
    elif delta < -1e-9:
        assert isinstance(tree.root, Leaf)


def _brute_force_second_action(target: int, data: CaseMatrix, first_j: int, cfg: ScoreConfig):
    """Best single replacement applied to either child of the first split."""
    base = _one_split_tree(target, first_j)
    base_score = tree_log_score(base, data, cfg)
    best = None
    for side in ("eq", "neq"):
        for j in range(data.n_items):
            if j in (target, first_j):
                continue
            grown = _one_split_tree(target, first_j)
            child = Internal(SplitTest(j, 1), Leaf(np.array([0, 0])), Leaf(np.array([0, 0])))
            if side == "eq":
                grown.root.child_eq = child
            else:
                grown.root.child_neq = child
            delta = tree_log_score(grown, data, cfg) - base_score
            # tie order: variable index, then eq (leftmost) before neq
            key = (-delta, j, 0 if side == "eq" else 1)
            if best is None or key < best[0]:
                best = (key, delta, j, side)
    return best


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_learn_tree_two_rounds_match_enumeration(data):
    n_items = data.draw(st.integers(3, 4))
    n_cases = data.draw(st.integers(8, 30))
    rows = [
        frozenset(j for j in range(n_items) if data.draw(st.booleans())) for _ in range(n_cases)
    ]
    matrix = CaseMatrix(n_items, tuple(rows))
    target = data.draw(st.integers(0, n_items - 1))

    first = _brute_force_first_split(target, matrix, CFG)
    if first is None or first[0] <= 1e-9:
        return
    _, first_j = first
    best = _brute_force_second_action(target, matrix, first_j, CFG)
    tree = learn_tree(target, matrix, CFG)
    if best is None:
        return
    _, delta2, j2, side2 = best
    if abs(delta2) <= 1e-9:
        return  # margin too small to compare across summation orders
    assert isinstance(tree.root, Internal)
    if delta2 > 0:
        grown_child = tree.root.child_eq if side2 == "eq" else tree.root.child_neq
        assert isinstance(grown_child, Internal)
        assert grown_child.test.variable == j2
    else:
        assert isinstance(tree.root.child_eq, Leaf)
        assert isinstance(tree.root.child_neq, Leaf)


def test_learn_tree_rejects_bad_target(perfect_pair):
    with pytest.raises(ValueError):
        learn_tree(5, perfect_pair, CFG)


def test_score_config_validation():
    with pytest.raises(ValueError):
        ScoreConfig(kappa=0.0)
    with pytest.raises(ValueError):
        ScoreConfig(kappa=-1.0)
