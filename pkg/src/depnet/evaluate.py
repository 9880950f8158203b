"""Ranked-list accuracy: half-life utility metric and the holdout protocols."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from .data import CaseMatrix, Popularity
from .network import DependencyNetwork
from .recommend import RecommendationList, baseline_recommend, recommend


class EvaluationError(Exception):
    pass


def parse_protocol(name: str) -> tuple[str, int | None]:
    """'allbut1' -> ('allbut1', None); 'given5' -> ('given', 5)."""
    if name == "allbut1":
        return "allbut1", None
    if name.startswith("given"):
        try:
            m = int(name[len("given"):])
        except ValueError:
            raise ValueError(f"bad protocol {name!r}") from None
        if m < 1:
            raise ValueError("given-m needs m >= 1")
        return "given", m
    raise ValueError(f"bad protocol {name!r}; expected 'allbut1' or 'given<m>'")


@dataclass(frozen=True)
class EvalConfig:
    protocol: str = "allbut1"
    half_life: float = 5.0
    seed: int = 0
    # Eligibility floor for allbut1.  The default 1 admits single-item users
    # (their input set is empty); raise to 2 for sensitivity analysis.
    min_preferred: int = 1

    def __post_init__(self):
        parse_protocol(self.protocol)
        if not self.half_life > 0.0:
            raise ValueError("half_life must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.min_preferred < 1:
            raise ValueError("min_preferred must be >= 1")


@dataclass(frozen=True)
class EvalReport:
    """cfaccuracy summary: 100 x mean per-user normalized utility."""

    score: float
    n_users: int
    skipped: int
    per_user: tuple[tuple[int, int, float], ...]  # (user ordinal, K, utility)

    def __post_init__(self):
        for _, _, util in self.per_user:
            if not 0.0 <= util <= 1.0 + 1e-12:
                raise ValueError(f"per-user utility {util} outside [0, 1]")


def position_probability(k: int, a: float = 5.0) -> float:
    """Chance the viewer reaches 0-based rank k: 2^(-k/a), a = half-life."""
    if k < 0:
        raise ValueError("rank must be >= 0")
    return 2.0 ** (-k / a)


def user_score(
    ranking: RecommendationList | Sequence[int],
    measurement: Iterable[int],
    a: float = 5.0,
) -> float:
    """Utility of one list, normalized by the all-hits-on-top utility.

    sum of p(k) over ranks holding measurement items, divided by
    sum_{k=0}^{K-1} p(k) with K = |measurement|.
    """
    items = ranking.items if isinstance(ranking, RecommendationList) else tuple(ranking)
    measurement = frozenset(measurement)
    k_size = len(measurement)
    if k_size == 0:
        raise EvaluationError("empty measurement set; caller must skip this case")
    hit = 0.0
    for k, item in enumerate(items):
        if item in measurement:
            hit += position_probability(k, a)
    best = 0.0
    for k in range(k_size):
        best += position_probability(k, a)
    return hit / best


def _user_rng(seed: int, ordinal: int) -> np.random.Generator:
    # Derived from (global seed, stable user ordinal): adding users does not
    # reshuffle the partitions of existing ones.
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, ordinal])))


def protocol_partition(
    preferred: Iterable[int],
    cfg: EvalConfig,
    rng: np.random.Generator,
) -> tuple[frozenset[int], frozenset[int]] | None:
    """Split one user's preferred items into (input, measurement); None = skip.

    allbut1: one uniformly chosen item is the measurement, the rest input.
    given-m: m uniformly chosen items are the input, the rest measurement;
    users with fewer than m+1 preferred items are skipped.
    """
    items = sorted(preferred)
    kind, m = parse_protocol(cfg.protocol)
    if kind == "allbut1":
        if len(items) < max(1, cfg.min_preferred):
            return None
        pick = int(rng.integers(len(items)))
        measurement = frozenset({items[pick]})
        return frozenset(items) - measurement, measurement
    assert m is not None
    if len(items) < m + 1:
        return None
    chosen = rng.choice(len(items), size=m, replace=False)
    input_set = frozenset(items[int(c)] for c in chosen)
    return input_set, frozenset(items) - input_set


def _rank_fn(model):
    if isinstance(model, DependencyNetwork):
        return lambda input_set: recommend(model, input_set)
    if isinstance(model, Popularity):
        return lambda input_set: baseline_recommend(model, input_set)
    raise TypeError(f"cannot evaluate model of type {type(model).__name__}")


def _evaluate_chunk(
    model, cfg: EvalConfig, chunk: tuple[tuple[int, frozenset[int]], ...]
) -> tuple[list[tuple[int, int, float]], int]:
    rank = _rank_fn(model)
    per_user: list[tuple[int, int, float]] = []
    skipped = 0
    for ordinal, case in chunk:
        part = protocol_partition(case, cfg, _user_rng(cfg.seed, ordinal))
        if part is None:
            skipped += 1
            continue
        input_set, measurement = part
        util = user_score(rank(input_set), measurement, cfg.half_life)
        per_user.append((ordinal, len(measurement), util))
    return per_user, skipped


def cf_evaluate(
    model: DependencyNetwork | Popularity,
    test: CaseMatrix,
    cfg: EvalConfig,
    n_jobs: int = 1,
) -> EvalReport:
    """Partition, recommend, and score every evaluable test case.

    Per-user partitions depend only on (seed, user ordinal), so results do
    not change with ``n_jobs``.
    """
    n_items = model.n_vars if isinstance(model, DependencyNetwork) else len(model)
    if n_items != test.n_items:
        raise EvaluationError("model and test set have different vocabularies")
    _rank_fn(model)  # reject unknown model types before spawning workers

    numbered = tuple(enumerate(test.cases))
    if n_jobs > 1 and len(numbered) > 1:
        chunks = [tuple(numbered[i::n_jobs]) for i in range(n_jobs)]
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(partial(_evaluate_chunk, model, cfg), chunks))
        per_user = sorted((row for rows, _ in results for row in rows), key=lambda r: r[0])
        skipped = sum(s for _, s in results)
    else:
        per_user, skipped = _evaluate_chunk(model, cfg, numbered)

    if not per_user:
        raise EvaluationError("no evaluable users under this protocol")
    score = 100.0 * float(np.mean([u for _, _, u in per_user]))
    return EvalReport(score, len(per_user), skipped, tuple(per_user))
