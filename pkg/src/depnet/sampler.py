"""Ordered Gibbs sampling and the exact transition-matrix oracle.

State indexing is canonical throughout: lexicographic with variable 0 most
significant, i.e. index = sum_i x_i * prod_{k>i} r_k.

Randomness: a single PCG64 generator seeded from the config.  Uniforms are
drawn as row-major blocks of shape (sweeps, n) and consumed one per
(sweep, variable) in index order; a resampled value is the smallest state v
with u < cumulative(local distribution)(v).  Clamped or skipped variables
still consume their draw, so sample streams are reproducible and
independent of evidence patterns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_ORACLE_STATES = 2**20


class SamplerError(Exception):
    pass


class StateSpaceError(SamplerError):
    """State space exceeds the exact-oracle guard."""


class UniquenessError(SamplerError):
    """Eigenvalue-1 eigenspace is numerically multi-dimensional.

    Signals non-positive local distributions; Gibbs chains built from
    strictly positive locals always have a unique stationary distribution.
    """


@dataclass(frozen=True)
class GibbsConfig:
    seed: int = 0
    burn_in: int = 1000
    samples: int = 10000
    thin: int = 1
    init: str = "zeros"  # "zeros" | "marginal-random"

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.init not in ("zeros", "marginal-random"):
            raise ValueError(f"unknown init policy {self.init!r}")


def _cards_of(net) -> tuple[int, ...]:
    return tuple(net.cards)


def state_strides(cards: Sequence[int]) -> np.ndarray:
    strides = np.ones(len(cards), dtype=np.int64)
    for i in range(len(cards) - 2, -1, -1):
        strides[i] = strides[i + 1] * cards[i + 1]
    return strides


def encode_state(x: Sequence[int], cards: Sequence[int]) -> int:
    return int(np.dot(np.asarray(x, dtype=np.int64), state_strides(cards)))


def decode_state(index: int, cards: Sequence[int]) -> np.ndarray:
    strides = state_strides(cards)
    out = np.empty(len(cards), dtype=np.int64)
    for i, s in enumerate(strides):
        out[i], index = divmod(index, int(s))
    return out


def _check_guard(cards: Sequence[int]) -> int:
    n_states = int(np.prod(np.asarray(cards, dtype=np.int64)))
    if n_states > MAX_ORACLE_STATES:
        raise StateSpaceError(
            f"state space has {n_states} states, exact oracle guard is {MAX_ORACLE_STATES}"
        )
    return n_states


@dataclass
class TransitionMatrix:
    """Row-stochastic matrix over the full joint state space."""

    n_states: int
    entries: np.ndarray
    cards: tuple[int, ...]

    def __post_init__(self):
        if self.entries.shape != (self.n_states, self.n_states):
            raise ValueError("entries must be square over n_states")
        if np.any(self.entries < 0.0):
            raise ValueError("entries must be nonnegative")
        rowsum = self.entries.sum(axis=1)
        if np.max(np.abs(rowsum - 1.0)) > 1e-12:
            raise ValueError("rows must sum to 1 within 1e-12")


def local_transition_matrix(net, k: int) -> TransitionMatrix:
    """Resampling matrix M^k: from state i to j, zero unless i and j agree
    on all coordinates other than k; otherwise p(x_k = j_k | rest of i)."""
    cards = _cards_of(net)
    n_states = _check_guard(cards)
    strides = state_strides(cards)
    r_k = cards[k]
    m = np.zeros((n_states, n_states))
    for i in range(n_states):
        x = decode_state(i, cards)
        if x[k] != 0:
            continue  # one distribution per context; fill all r_k source rows below
        dist = np.asarray(net.local_distribution(k, x), dtype=float)
        base = i  # state with x_k = 0
        for v_from in range(r_k):
            row = base + v_from * int(strides[k])
            for v_to in range(r_k):
                m[row, base + v_to * int(strides[k])] = dist[v_to]
    return TransitionMatrix(n_states, m, cards)


def chain_matrix(net, order: Sequence[int] | None = None) -> TransitionMatrix:
    """Full-sweep matrix: ordered product of local matrices in visit order."""
    cards = _cards_of(net)
    n = len(cards)
    if order is None:
        order = range(n)
    order = [int(k) for k in order]
    if sorted(order) != list(range(n)):
        raise ValueError(f"order must be a permutation of 0..{n - 1}")
    _check_guard(cards)
    m: np.ndarray | None = None
    for k in order:
        local = local_transition_matrix(net, k).entries
        m = local if m is None else m @ local
    assert m is not None
    return TransitionMatrix(m.shape[0], m, tuple(cards))


def power_iteration_stationary(
    m: TransitionMatrix | np.ndarray,
    start: np.ndarray | None = None,
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
) -> np.ndarray:
    """Iterate pi <- pi M until the update residual drops below tol."""
    entries = m.entries if isinstance(m, TransitionMatrix) else np.asarray(m, dtype=float)
    n = entries.shape[0]
    if start is None:
        pi = np.full(n, 1.0 / n)
    else:
        pi = np.asarray(start, dtype=float)
        if pi.shape != (n,) or np.any(pi < 0) or pi.sum() <= 0:
            raise ValueError("start must be a nonnegative distribution over states")
        pi = pi / pi.sum()
    for _ in range(max_iter):
        nxt = pi @ entries
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt
        pi = nxt
    raise UniquenessError(f"power iteration did not reach residual {tol} in {max_iter} steps")


_EIG_CHECK_LIMIT = 2048


def exact_stationary(m: TransitionMatrix | np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """The unique pi with pi M = pi and sum(pi) = 1.

    Solved by a linear system (small spaces get an explicit eigenvalue
    multiplicity check); residual verified below ``tol``.
    """
    entries = m.entries if isinstance(m, TransitionMatrix) else np.asarray(m, dtype=float)
    n = entries.shape[0]
    if n > _EIG_CHECK_LIMIT:
        pi = power_iteration_stationary(entries, tol=tol)
        return pi / pi.sum()

    eigvals = np.linalg.eigvals(entries)
    if int(np.sum(np.abs(eigvals - 1.0) < 1e-10)) != 1:
        raise UniquenessError(
            "eigenvalue-1 eigenspace is multi-dimensional; local distributions "
            "are not strictly positive"
        )
    a = (entries - np.eye(n)).T
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        pi = np.linalg.lstsq(a, b, rcond=None)[0]
    pi = pi / pi.sum()
    residual = float(np.max(np.abs(pi @ entries - pi)))
    if residual > tol:
        raise UniquenessError(f"stationary residual {residual} exceeds {tol}")
    return pi


@dataclass
class GibbsResult:
    """Kept full-sweep states plus aggregation helpers."""

    samples: np.ndarray  # (kept, n) small ints
    cards: tuple[int, ...]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def marginals(self) -> np.ndarray:
        """Per-variable empirical distributions, shape (n, max_card)."""
        n = len(self.cards)
        out = np.zeros((n, max(self.cards)))
        for i in range(n):
            counts = np.bincount(self.samples[:, i], minlength=self.cards[i])
            out[i, : self.cards[i]] = counts[: self.cards[i]] / self.n_samples
        return out

    def joint_probs(self) -> np.ndarray:
        """Empirical joint over the full state space (guarded)."""
        n_states = _check_guard(self.cards)
        strides = state_strides(self.cards)
        codes = self.samples.astype(np.int64) @ strides
        return np.bincount(codes, minlength=n_states) / self.n_samples


def _draw(dist: np.ndarray, u: float) -> int:
    c = 0.0
    for v, pv in enumerate(dist):
        c += pv
        if u < c:
            return v
    return len(dist) - 1  # cumulative rounding; u ~ 1.0


_BLOCK_SWEEPS = 8192


def _run_chain(
    net,
    cfg: GibbsConfig,
    clamped: dict[int, int] | None = None,
) -> GibbsResult:
    cards = _cards_of(net)
    n = len(cards)
    clamped = clamped or {}
    for var, val in clamped.items():
        if not 0 <= var < n or not 0 <= val < cards[var]:
            raise ValueError(f"evidence {var}={val} out of range")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))

    x = np.zeros(n, dtype=np.int64)
    if cfg.init == "marginal-random":
        u0 = rng.random((1, n))
        zeros = np.zeros(n, dtype=np.int64)
        for i in range(n):
            x[i] = _draw(np.asarray(net.local_distribution(i, zeros), dtype=float), u0[0, i])
    for var, val in clamped.items():
        x[var] = val

    total = cfg.burn_in + cfg.samples * cfg.thin
    kept = np.empty((cfg.samples, n), dtype=np.int64)
    kept_count = 0
    sweep = 0
    while sweep < total:
        block = min(_BLOCK_SWEEPS, total - sweep)
        u = rng.random((block, n))
        for t in range(block):
            for i in range(n):
                if i in clamped:
                    continue
                dist = np.asarray(net.local_distribution(i, x), dtype=float)
                x[i] = _draw(dist, u[t, i])
            sweep += 1
            post = sweep - cfg.burn_in
            if post > 0 and post % cfg.thin == 0:
                kept[kept_count] = x
                kept_count += 1
    assert kept_count == cfg.samples
    return GibbsResult(kept, tuple(cards))


def ordered_gibbs_run(net, cfg: GibbsConfig) -> GibbsResult:
    """Fixed-order sweeps: resample each variable in index order from its
    local distribution; discard burn-in, then keep every thin-th sweep."""
    return _run_chain(net, cfg)


@dataclass
class ConditionalEstimate:
    targets: tuple[int, ...]
    probs: np.ndarray  # flat over target subspace, canonical order of targets
    n_samples: int


def gibbs_conditional(
    net,
    evidence: dict[int, int],
    targets: Sequence[int],
    cfg: GibbsConfig,
) -> ConditionalEstimate:
    """Clamped ordered Gibbs: evidence held fixed, empirical distribution of targets."""
    targets = tuple(int(t) for t in targets)
    if set(targets) & set(evidence):
        raise ValueError("targets and evidence overlap")
    result = _run_chain(net, cfg, clamped=dict(evidence))
    cards = [result.cards[t] for t in targets]
    strides = state_strides(cards)
    codes = result.samples[:, list(targets)].astype(np.int64) @ strides
    probs = np.bincount(codes, minlength=int(np.prod(cards))) / result.n_samples
    return ConditionalEstimate(targets, probs, result.n_samples)
