"""Sparse binary preference datasets: parsing, splitting, popularity."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, Iterator

import numpy as np
from scipy import sparse


class DataError(Exception):
    """Base class for dataset ingestion and validation failures."""


class ParseError(DataError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class FormatError(DataError):
    pass


class VocabularyError(DataError):
    pass


@dataclass(frozen=True)
class Item:
    item_id: int
    title: str = ""
    url: str = ""


@dataclass(frozen=True)
class ItemVocabulary:
    """Ordered item list with a dense index: external id -> 0..n-1.

    Item order is the order of first declaration, so dense indices are
    stable across runs for identical input.
    """

    items: tuple[Item, ...]
    index: dict[int, int] = field(compare=False)

    def __post_init__(self):
        if len(self.index) != len(self.items):
            raise VocabularyError("duplicate external item ids")
        for pos, item in enumerate(self.items):
            if self.index.get(item.item_id) != pos:
                raise VocabularyError(f"index inconsistent for item id {item.item_id}")

    @classmethod
    def from_items(cls, items: Iterable[Item]) -> "ItemVocabulary":
        items = tuple(items)
        index: dict[int, int] = {}
        for pos, item in enumerate(items):
            if item.item_id in index:
                raise VocabularyError(f"duplicate item id {item.item_id}")
            index[item.item_id] = pos
        return cls(items, index)

    @classmethod
    def generic(cls, n_items: int) -> "ItemVocabulary":
        """Placeholder vocabulary for data without item metadata."""
        return cls.from_items(Item(i, f"item_{i}") for i in range(n_items))

    def __len__(self) -> int:
        return len(self.items)

    def dense(self, item_id: int) -> int:
        try:
            return self.index[item_id]
        except KeyError:
            raise VocabularyError(f"unknown item id {item_id}") from None


@dataclass(frozen=True)
class CaseMatrix:
    """Binary user x item observations: one preferred-item set per case.

    Absence of an index means value 0 (implicit vote).  Cases with zero
    preferred items are legal and retained.
    """

    n_items: int
    cases: tuple[frozenset[int], ...]

    def __post_init__(self):
        for case in self.cases:
            for j in case:
                if not 0 <= j < self.n_items:
                    raise DataError(f"item index {j} out of range [0, {self.n_items})")

    @property
    def n_cases(self) -> int:
        return len(self.cases)

    def counts(self) -> np.ndarray:
        """Per-item occurrence counts across all cases."""
        out = np.zeros(self.n_items, dtype=np.int64)
        for case in self.cases:
            for j in case:
                out[j] += 1
        return out

    def mean_items_per_case(self) -> float:
        if not self.cases:
            raise DataError("empty case matrix")
        return sum(len(c) for c in self.cases) / len(self.cases)

    @cached_property
    def csr(self) -> sparse.csr_matrix:
        """0/1 matrix (n_cases x n_items) for vectorized counting."""
        indptr = np.zeros(len(self.cases) + 1, dtype=np.int64)
        indices = []
        for i, case in enumerate(self.cases):
            items = sorted(case)
            indices.extend(items)
            indptr[i + 1] = indptr[i] + len(items)
        data = np.ones(len(indices), dtype=np.int64)
        return sparse.csr_matrix(
            (data, np.asarray(indices, dtype=np.int64), indptr),
            shape=(len(self.cases), self.n_items),
        )

    @cached_property
    def csc(self) -> sparse.csc_matrix:
        """Column-oriented copy; fast per-item row lookups during learning."""
        return self.csr.tocsc()

    def fingerprint(self) -> str:
        """Content checksum, invariant to item order within a case."""
        h = hashlib.sha256()
        h.update(f"{self.n_items};{self.n_cases}\n".encode())
        for case in self.cases:
            h.update(",".join(str(j) for j in sorted(case)).encode())
            h.update(b"\n")
        return "sha256:" + h.hexdigest()


@dataclass(frozen=True)
class Popularity:
    """Smoothed per-item preference probabilities, each strictly in (0, 1)."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or np.any(p <= 0.0) or np.any(p >= 1.0):
            raise DataError("popularity probabilities must lie strictly in (0, 1)")
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return len(self.probs)


def _iter_text_lines(stream: bytes | IO[bytes] | IO[str], encoding: str) -> Iterator[str]:
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    raw = stream.read()
    if isinstance(raw, bytes):
        raw = raw.decode(encoding)
    # splitlines handles both CRLF and LF
    yield from raw.splitlines()


_UCI_IGNORED_TAGS = frozenset({"I", "T", "N", "D"})


def parse_uci_web(
    stream: bytes | IO[bytes] | IO[str],
    vocabulary: ItemVocabulary | None = None,
) -> tuple[ItemVocabulary, CaseMatrix]:
    """Parse the UCI anonymous-web ASCII format.

    ``A,<id>,<ignored>,"<title>","<url>"`` declares an attribute,
    ``C,"<case_id>",<case_id>`` starts a case, ``V,<id>,1`` marks the
    current case as preferring the attribute.  Tags I/T/N/D are ignored.

    When ``vocabulary`` is supplied (e.g. parsing a test file against a
    training vocabulary) the A-records must reference known ids and the
    returned vocabulary is the supplied one.
    """
    own_vocab = vocabulary is None
    items: list[Item] = []
    index: dict[int, int] = {}
    if vocabulary is not None:
        index = vocabulary.index
    cases: list[set[int]] = []
    current: set[int] | None = None

    for line_no, line in enumerate(_iter_text_lines(stream, "ascii"), start=1):
        if not line.strip():
            continue
        try:
            fields = next(csv.reader([line]))
        except csv.Error as exc:
            raise ParseError(line_no, f"malformed record: {exc}") from None
        if not fields:
            continue
        tag = fields[0]
        if tag in _UCI_IGNORED_TAGS:
            continue
        if tag == "A":
            if len(fields) < 4:
                raise ParseError(line_no, "A-record needs id, skip, title[, url]")
            try:
                item_id = int(fields[1])
            except ValueError:
                raise ParseError(line_no, f"non-integer attribute id {fields[1]!r}") from None
            title = fields[3]
            url = fields[4] if len(fields) > 4 else ""
            if own_vocab:
                if item_id in index:
                    raise VocabularyError(f"line {line_no}: duplicate attribute id {item_id}")
                index[item_id] = len(items)
                items.append(Item(item_id, title, url))
            elif item_id not in index:
                raise VocabularyError(
                    f"line {line_no}: attribute id {item_id} not in supplied vocabulary"
                )
        elif tag == "C":
            if len(fields) < 2:
                raise ParseError(line_no, "C-record needs a case id")
            if current is not None:
                cases.append(current)
            current = set()
        elif tag == "V":
            if len(fields) < 2:
                raise ParseError(line_no, "V-record needs an attribute id")
            if current is None:
                raise FormatError(f"line {line_no}: V-record before any C-record")
            try:
                item_id = int(fields[1])
            except ValueError:
                raise ParseError(line_no, f"non-integer attribute id {fields[1]!r}") from None
            if item_id not in index:
                raise VocabularyError(f"line {line_no}: undeclared attribute id {item_id}")
            current.add(index[item_id])
        else:
            raise ParseError(line_no, f"unknown record tag {tag!r}")

    if current is not None:
        cases.append(current)
    vocab = vocabulary if vocabulary is not None else ItemVocabulary(tuple(items), index)
    matrix = CaseMatrix(len(vocab), tuple(frozenset(c) for c in cases))
    return vocab, matrix


def _quote(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def serialize_uci_web(vocabulary: ItemVocabulary, matrix: CaseMatrix) -> bytes:
    """Write (vocabulary, cases) back to the UCI anonymous-web format."""
    if matrix.n_items != len(vocabulary):
        raise DataError("vocabulary size does not match case matrix")
    out = ["I,4,depnet export,1"]
    for item in vocabulary.items:
        out.append(f"A,{item.item_id},1,{_quote(item.title)},{_quote(item.url)}")
    id_of = [item.item_id for item in vocabulary.items]
    for ordinal, case in enumerate(matrix.cases, start=1):
        out.append(f'C,"{ordinal}",{ordinal}')
        for j in sorted(case):
            out.append(f"V,{id_of[j]},1")
    return ("\n".join(out) + "\n").encode("ascii")


def parse_sparse_pairs(stream: bytes | IO[bytes] | IO[str], n_items: int) -> CaseMatrix:
    """Parse generic ``case_id,item_index`` lines into a CaseMatrix.

    One case per distinct case id (first-appearance order); duplicates
    within a case collapse.  Lines starting with ``#`` are comments.
    """
    cases: dict[int, set[int]] = {}
    for line_no, line in enumerate(_iter_text_lines(stream, "utf-8"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split(",")
        if len(parts) != 2:
            raise ParseError(line_no, f"expected 'case_id,item_index', got {stripped!r}")
        try:
            case_id = int(parts[0])
            item = int(parts[1])
        except ValueError:
            raise ParseError(line_no, f"non-integer field in {stripped!r}") from None
        if not 0 <= item < n_items:
            raise DataError(f"line {line_no}: item index {item} out of range [0, {n_items})")
        cases.setdefault(case_id, set()).add(item)
    return CaseMatrix(n_items, tuple(frozenset(c) for c in cases.values()))


def split_train_test(
    matrix: CaseMatrix, test_fraction: float, seed: int
) -> tuple[CaseMatrix, CaseMatrix]:
    """Random disjoint, exhaustive partition; |test| = round(fraction * N)."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if matrix.n_cases == 0:
        raise DataError("cannot split an empty case matrix")
    n = matrix.n_cases
    n_test = int(math.floor(test_fraction * n + 0.5))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    test_idx = set(int(i) for i in perm[:n_test])
    train = tuple(matrix.cases[i] for i in range(n) if i not in test_idx)
    test = tuple(matrix.cases[i] for i in range(n) if i in test_idx)
    return CaseMatrix(matrix.n_items, train), CaseMatrix(matrix.n_items, test)


def popularity(matrix: CaseMatrix) -> Popularity:
    """Smoothed item popularity: (count_i + 1) / (N + 2).

    Add-one smoothing keeps every probability strictly inside (0, 1),
    which downstream positivity requirements need; ranking order among
    observed items is unchanged.
    """
    if matrix.n_cases == 0:
        raise DataError("popularity of an empty case matrix is undefined")
    counts = matrix.counts()
    return Popularity((counts + 1.0) / (matrix.n_cases + 2.0))
