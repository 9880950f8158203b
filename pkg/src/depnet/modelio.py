"""Canonical model files and viewer bundles.

Serialization is canonical: fixed field order, floats at 17 significant
digits, compact separators.  Equal models produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .data import Item, ItemVocabulary, Popularity
from .network import Arc, DependencyNetwork
from .trees import DecisionTree, Internal, Leaf, SplitTest, TreeNode, _walk

MODEL_FORMAT = "depnet-model"
BUNDLE_FORMAT = "depnet-viewer"
FORMAT_VERSION = 1


class ModelFormatError(Exception):
    pass


def _canon(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if not math.isfinite(f):
            raise ModelFormatError(f"non-finite float {f!r} in canonical output")
        return format(f, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_canon(v)}" for k, v in obj.items()) + "}"
    raise ModelFormatError(f"cannot canonicalize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Deterministic JSON: insertion-order keys, '%.17g' floats, no spaces."""
    return _canon(obj) + "\n"


@dataclass(frozen=True)
class ModelMeta:
    kappa: float
    seed: int
    n_cases: int
    checksum: str


def _tree_preorder(tree: DecisionTree) -> list[dict]:
    out = []
    for node, _depth in _walk(tree.root):
        if isinstance(node, Internal):
            out.append({"split": [node.test.variable, node.test.value]})
        else:
            out.append({"leaf": [int(c) for c in node.counts]})
    return out


def _tree_from_preorder(nodes: list[dict]) -> TreeNode:
    it = iter(nodes)

    def build() -> TreeNode:
        entry = next(it)
        if "split" in entry:
            j, v = entry["split"]
            eq = build()
            neq = build()
            return Internal(SplitTest(int(j), int(v)), eq, neq)
        return Leaf(np.asarray(entry["leaf"], dtype=np.int64))

    root = build()
    try:
        next(it)
    except StopIteration:
        return root
    raise ModelFormatError("trailing nodes after tree preorder")


def model_to_dict(dn: DependencyNetwork, meta: ModelMeta) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": FORMAT_VERSION,
        "n_items": dn.n_vars,
        "items": [
            {"id": it.item_id, "title": it.title, "url": it.url} for it in dn.vocabulary.items
        ],
        "kappa": meta.kappa,
        "seed": meta.seed,
        "dataset": {"cases": meta.n_cases, "items": dn.n_vars, "checksum": meta.checksum},
        "popularity": (
            [float(p) for p in dn.popularity.probs] if dn.popularity is not None else None
        ),
        "trees": [_tree_preorder(t) for t in dn.trees],
        "arcs": [
            {"from": a.source, "to": a.target, "strength": a.strength, "order_index": a.order_index}
            for a in dn.arcs
        ],
    }


def _check_header(doc: dict, expected_format: str) -> None:
    if not isinstance(doc, dict) or doc.get("format") != expected_format:
        raise ModelFormatError(f"not a {expected_format} file")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported {expected_format} version {doc.get('version')!r}, "
            f"expected {FORMAT_VERSION}"
        )


def model_from_dict(doc: dict) -> tuple[DependencyNetwork, ModelMeta]:
    _check_header(doc, MODEL_FORMAT)
    vocab = ItemVocabulary.from_items(
        Item(int(e["id"]), e.get("title", ""), e.get("url", "")) for e in doc["items"]
    )
    gains: dict[int, dict[int, float]] = {}
    arcs = []
    for e in doc["arcs"]:
        arc = Arc(int(e["from"]), int(e["to"]), float(e["strength"]), int(e["order_index"]))
        arcs.append(arc)
        gains.setdefault(arc.target, {})[arc.source] = arc.strength
    trees = []
    for target, nodes in enumerate(doc["trees"]):
        trees.append(DecisionTree(target, _tree_from_preorder(nodes), gains.get(target, {})))
    pop = None
    if doc.get("popularity") is not None:
        pop = Popularity(np.asarray(doc["popularity"], dtype=float))
    meta = ModelMeta(
        kappa=float(doc["kappa"]),
        seed=int(doc["seed"]),
        n_cases=int(doc["dataset"]["cases"]),
        checksum=str(doc["dataset"]["checksum"]),
    )
    return DependencyNetwork(vocab, trees, arcs, pop), meta


def save_model(dn: DependencyNetwork, meta: ModelMeta, path: str | Path) -> None:
    Path(path).write_text(canonical_json(model_to_dict(dn, meta)), encoding="ascii")


def load_model(source: str | Path | IO[str]) -> tuple[DependencyNetwork, ModelMeta]:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="ascii")
    return model_from_dict(json.loads(text))


def _tree_nested(node: TreeNode) -> dict:
    if isinstance(node, Internal):
        return {
            "split": {"variable": node.test.variable, "value": node.test.value},
            "eq": _tree_nested(node.child_eq),
            "neq": _tree_nested(node.child_neq),
        }
    return {
        "leaf": {
            "counts": [int(c) for c in node.counts],
            "posterior": [float(p) for p in node.posterior()],
        }
    }


def bundle_to_dict(dn: DependencyNetwork, meta: ModelMeta) -> dict:
    """Self-contained viewer bundle: nodes, ordered arcs, nested trees."""
    return {
        "format": BUNDLE_FORMAT,
        "version": FORMAT_VERSION,
        "metadata": {
            "kappa": meta.kappa,
            "dataset": {"cases": meta.n_cases, "items": dn.n_vars, "checksum": meta.checksum},
        },
        "nodes": [
            {"id": it.item_id, "index": i, "title": it.title}
            for i, it in enumerate(dn.vocabulary.items)
        ],
        "arcs": [
            {"from": a.source, "to": a.target, "strength": a.strength, "order_index": a.order_index}
            for a in dn.arcs
        ],
        "trees": [_tree_nested(t.root) for t in dn.trees],
    }


def save_bundle(dn: DependencyNetwork, meta: ModelMeta, path: str | Path) -> None:
    Path(path).write_text(canonical_json(bundle_to_dict(dn, meta)), encoding="ascii")


def load_bundle(source: str | Path | IO[str]) -> dict:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="ascii")
    doc = json.loads(text)
    _check_header(doc, BUNDLE_FORMAT)
    return doc
