import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import synthetic_web_cases
from depnet.data import CaseMatrix, Popularity, popularity
from depnet.evaluate import (
    EvalConfig,
    EvaluationError,
    cf_evaluate,
    parse_protocol,
    position_probability,
    protocol_partition,
    user_score,
)
from depnet.network import learn_dependency_network
from depnet.trees import ScoreConfig


def _rng(seed=0):
    return np.random.default_rng(seed)


def test_parse_protocol():
    assert parse_protocol("allbut1") == ("allbut1", None)
    assert parse_protocol("given2") == ("given", 2)
    assert parse_protocol("given10") == ("given", 10)
    for bad in ("given0", "givenx", "bogus"):
        with pytest.raises(ValueError):
            parse_protocol(bad)


def test_position_probability_worked_examples():
    assert position_probability(0, 5.0) == 1.0
    assert position_probability(5, 5.0) == 0.5  # the half-life position
    assert position_probability(10, 5.0) == 0.25
    with pytest.raises(ValueError):
        position_probability(-1, 5.0)


def test_user_score_perfect_lists_exact():
    assert user_score([7, 3, 5], {7}, a=5.0) == 1.0
    assert user_score([7, 3, 5], {7, 3}, a=5.0) == 1.0
    assert user_score(list(range(20)), set(range(20)), a=5.0) == 1.0


def test_user_score_half_life_hit():
    # single measurement item at rank 5: 2^(-5/5) / 2^0 = 0.5
    items = [9, 8, 7, 6, 5, 0]
    assert user_score(items, {0}, a=5.0) == pytest.approx(0.5, abs=1e-12)


def test_user_score_two_hits_mixed():
    # hits at ranks 0 and 2: (1 + 2^(-2/5)) / (1 + 2^(-1/5))
    items = [4, 9, 5]
    expected = (1 + 2 ** (-2 / 5)) / (1 + 2 ** (-1 / 5))
    assert user_score(items, {4, 5}, a=5.0) == pytest.approx(expected, abs=1e-12)


def test_user_score_empty_measurement():
    with pytest.raises(EvaluationError):
        user_score([1, 2], set(), a=5.0)


def test_user_score_monotone_in_rank():
    # moving the single hit deeper strictly lowers the score
    scores = [user_score([*range(k), 99, *range(k, 10)], {99}) for k in range(5)]
    assert all(a > b for a, b in zip(scores, scores[1:]))


def test_user_score_one_iff_hits_on_top():
    # any measurement item below rank K-1 costs utility
    assert user_score([5, 6, 7], {5, 6}) == 1.0
    assert user_score([5, 7, 6], {5, 6}) < 1.0
    assert user_score([7, 5, 6], {5, 6}) < 1.0


def test_user_score_dominance():
    # same hits, one strictly better rank: strictly higher score
    worse = user_score([0, 8, 1, 9, 2, 3], {8, 9})
    better = user_score([8, 0, 1, 9, 2, 3], {8, 9})
    assert better > worse


@settings(max_examples=50)
@given(st.integers(1, 6), st.integers(0, 40))
def test_user_score_bounds(k_size, shift):
    items = list(range(50))
    measurement = set(range(shift, min(50, shift + k_size)))
    if not measurement:
        return
    s = user_score(items, measurement)
    assert 0.0 < s <= 1.0
    if shift == 0:
        assert s == 1.0


def test_partition_allbut1_sizes():
    cfg = EvalConfig(protocol="allbut1")
    part = protocol_partition({3, 5, 9}, cfg, _rng())
    assert part is not None
    input_set, measurement = part
    assert len(input_set) == 2 and len(measurement) == 1
    assert input_set | measurement == {3, 5, 9}
    assert not input_set & measurement


def test_partition_allbut1_single_item_user():
    cfg = EvalConfig(protocol="allbut1")
    part = protocol_partition({4}, cfg, _rng())
    assert part == (frozenset(), frozenset({4}))
    # sensitivity floor excludes these users
    cfg2 = EvalConfig(protocol="allbut1", min_preferred=2)
    assert protocol_partition({4}, cfg2, _rng()) is None


def test_partition_allbut1_empty_user_skips():
    assert protocol_partition(set(), EvalConfig(protocol="allbut1"), _rng()) is None


def test_partition_given_m():
    cfg = EvalConfig(protocol="given2")
    part = protocol_partition({1, 2, 3, 4}, cfg, _rng())
    assert part is not None
    input_set, measurement = part
    assert len(input_set) == 2 and len(measurement) == 2
    # too few preferred items: skip
    assert protocol_partition({1, 2}, EvalConfig(protocol="given5"), _rng()) is None
    assert protocol_partition({1, 2}, EvalConfig(protocol="given2"), _rng()) is None


def test_partition_deterministic():
    cfg = EvalConfig(protocol="given2", seed=5)
    a = protocol_partition({1, 2, 3, 4, 5}, cfg, np.random.Generator(np.random.PCG64(99)))
    b = protocol_partition({1, 2, 3, 4, 5}, cfg, np.random.Generator(np.random.PCG64(99)))
    assert a == b


def test_eval_config_validation():
    with pytest.raises(ValueError):
        EvalConfig(protocol="nope")
    with pytest.raises(ValueError):
        EvalConfig(half_life=0.0)
    with pytest.raises(ValueError):
        EvalConfig(seed=-1)
    with pytest.raises(ValueError):
        EvalConfig(min_preferred=0)


def test_cf_evaluate_perfect_model_scores_100():
    # every user prefers the two most popular items; allbut1 always ranks
    # the held-out one first
    pop = Popularity(np.array([0.9, 0.8, 0.1, 0.05]))
    test = CaseMatrix(4, tuple([frozenset({0, 1})] * 6))
    report = cf_evaluate(pop, test, EvalConfig(protocol="allbut1", seed=1))
    assert report.score == pytest.approx(100.0)
    assert report.n_users == 6
    assert report.skipped == 0


def test_cf_evaluate_empty_measurements_error():
    pop = Popularity(np.array([0.5, 0.5]))
    test = CaseMatrix(2, (frozenset(),))
    with pytest.raises(EvaluationError):
        cf_evaluate(pop, test, EvalConfig(protocol="allbut1"))


def test_cf_evaluate_vocabulary_mismatch():
    pop = Popularity(np.array([0.5, 0.5]))
    test = CaseMatrix(3, (frozenset({0}),))
    with pytest.raises(EvaluationError):
        cf_evaluate(pop, test, EvalConfig())


def test_cf_evaluate_deterministic_and_reduction_order_free():
    data = synthetic_web_cases(n_items=12, n_cases=120, seed=3)
    pop = popularity(data)
    cfg = EvalConfig(protocol="allbut1", seed=9)
    r1 = cf_evaluate(pop, data, cfg)
    r2 = cf_evaluate(pop, data, cfg)
    assert r1 == r2
    # single-item users have forced partitions: reordering them cannot
    # change the mean
    singles = tuple(frozenset({i % 5}) for i in range(40))
    m_fwd = CaseMatrix(12, singles)
    m_rev = CaseMatrix(12, tuple(reversed(singles)))
    assert cf_evaluate(pop, m_fwd, cfg).score == pytest.approx(
        cf_evaluate(pop, m_rev, cfg).score, abs=1e-12
    )


def test_cf_evaluate_parallel_matches_serial():
    data = synthetic_web_cases(n_items=10, n_cases=60, seed=11)
    pop = popularity(data)
    cfg = EvalConfig(protocol="given2", seed=2)
    serial = cf_evaluate(pop, data, cfg, n_jobs=1)
    parallel = cf_evaluate(pop, data, cfg, n_jobs=3)
    assert serial == parallel


def test_cf_evaluate_given_m_counts_non_increasing():
    data = synthetic_web_cases(n_items=15, n_cases=300, seed=5)
    pop = popularity(data)
    counts = []
    for proto in ("given2", "given5", "given10"):
        try:
            counts.append(cf_evaluate(pop, data, EvalConfig(protocol=proto)).n_users)
        except EvaluationError:
            counts.append(0)
    assert counts[0] >= counts[1] >= counts[2]


def test_cf_evaluate_dn_end_to_end(perfect_pair):
    dn = learn_dependency_network(perfect_pair, ScoreConfig(kappa=0.01))
    test = CaseMatrix(2, tuple([frozenset({0, 1})] * 4))
    report = cf_evaluate(dn, test, EvalConfig(protocol="allbut1", seed=0))
    # held-out item is always ranked first (it is the only candidate)
    assert report.score == pytest.approx(100.0)
