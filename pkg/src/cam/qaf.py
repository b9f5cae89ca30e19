"""Quantitative argumentation trees: domain types, validation, serialization.

A model is a tree of arguments. Leaves are dataset features whose strength
comes straight from the instance; internal nodes (concepts and the global
root) carry a base score in (0, 1) and receive weighted influence from
their children. Edges are stored child -> parent; a negative weight makes
the child an attacker of its parent, a positive weight a supporter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import NodeNotFoundError, SchemaError

SCHEMA_VERSION = 1

# Base scores are clamped away from {0, 1} so log-odds stay finite.
BASE_SCORE_EPS = 1e-12

# Edges whose trained weight falls below this magnitude are pruned; the
# orphaned child is reported as inert rather than reattached.
WEIGHT_PRUNE_EPS = 1e-12

NODE_KINDS = ("feature", "concept", "root")


def clamp_base_score(value: float) -> float:
    """Clamp a base score into [BASE_SCORE_EPS, 1 - BASE_SCORE_EPS]."""
    return min(max(float(value), BASE_SCORE_EPS), 1.0 - BASE_SCORE_EPS)


@dataclass(frozen=True)
class ArgumentNode:
    """A feature, concept, or root argument."""

    id: str
    kind: str
    label: str
    description: Optional[str] = None
    meaning: Optional[tuple[float, ...]] = None
    base_score: Optional[float] = None
    round: int = 0

    def __post_init__(self) -> None:
        if self.kind not in NODE_KINDS:
            raise SchemaError(f"unknown node kind {self.kind!r} for {self.id!r}")
        if self.meaning is not None:
            object.__setattr__(self, "meaning", tuple(float(v) for v in self.meaning))


@dataclass(frozen=True)
class Edge:
    """A weighted child -> parent link."""

    child: str
    parent: str
    weight: float


@dataclass(frozen=True)
class QafModel:
    """An immutable argumentation tree with base scores and edge weights.

    ``feature_order`` fixes the alignment between feature leaves and
    instance vectors; ``edges`` keep their insertion order, which also
    fixes the reasoner's accumulation order.
    """

    nodes: tuple[ArgumentNode, ...]
    edges: tuple[Edge, ...]
    root: str
    embedding_dim: int
    feature_order: tuple[str, ...]
    _by_id: dict[str, ArgumentNode] = field(init=False, repr=False, compare=False)
    _children: dict[str, tuple[Edge, ...]] = field(init=False, repr=False, compare=False)
    _parent: dict[str, Edge] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "feature_order", tuple(self.feature_order))
        by_id = {n.id: n for n in self.nodes}
        children: dict[str, list[Edge]] = {n.id: [] for n in self.nodes}
        parent: dict[str, Edge] = {}
        for e in self.edges:
            if e.parent in children:
                children[e.parent].append(e)
            # Multi-parent nodes keep the last edge here; validate() reports them.
            parent[e.child] = e
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_children", {k: tuple(v) for k, v in children.items()})
        object.__setattr__(self, "_parent", parent)

    def node(self, node_id: str) -> ArgumentNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise NodeNotFoundError(f"unknown node id {node_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._by_id

    def children_edges(self, node_id: str) -> tuple[Edge, ...]:
        self.node(node_id)
        return self._children.get(node_id, ())

    def children(self, node_id: str) -> tuple[str, ...]:
        return tuple(e.child for e in self.children_edges(node_id))

    def parent_edge(self, node_id: str) -> Optional[Edge]:
        self.node(node_id)
        return self._parent.get(node_id)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of structural validation.

    ``violations`` are invariant breaches; ``inert_nodes`` are non-root
    nodes left parentless by zero-weight pruning (informational).
    """

    violations: tuple[str, ...]
    inert_nodes: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def attackers(model: QafModel, node_id: str) -> set[str]:
    """Children connected to ``node_id`` by a negative-weight edge."""
    return {e.child for e in model.children_edges(node_id) if e.weight < 0}


def supporters(model: QafModel, node_id: str) -> set[str]:
    """Children connected to ``node_id`` by a positive-weight edge."""
    return {e.child for e in model.children_edges(node_id) if e.weight > 0}


def root_polarity(model: QafModel, node_id: str) -> int:
    """Sign of the product of edge weights along the path to the root.

    +1 means raising the node's strength pushes the root up, -1 down.
    """
    node = model.node(node_id)
    if node.id == model.root:
        raise CamInvalid("root_polarity is undefined for the root node")
    sign = 1
    current = node.id
    seen = {current}
    while current != model.root:
        edge = model.parent_edge(current)
        if edge is None:
            raise CamInvalid(f"node {current!r} has no path to the root")
        if edge.weight == 0:
            raise CamInvalid(f"zero-weight edge on path at {current!r}")
        if edge.weight < 0:
            sign = -sign
        current = edge.parent
        if current in seen:
            raise CamInvalid(f"cycle through {current!r}")
        seen.add(current)
    return sign


class CamInvalid(SchemaError):
    """Structural precondition violated for an operation on a model."""


def validate(model: QafModel) -> ValidationReport:
    """Check every structural invariant; violations are data, not errors."""
    violations: list[str] = []
    inert: list[str] = []

    ids = [n.id for n in model.nodes]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        violations.append(f"duplicate node ids: {dupes}")
    if not model.has_node(model.root):
        violations.append(f"root {model.root!r} is not a node")
        return ValidationReport(tuple(violations), ())

    for n in model.nodes:
        if n.kind == "feature":
            if n.base_score is not None:
                violations.append(f"feature {n.id!r} carries a base score")
        else:
            if n.base_score is None:
                violations.append(f"{n.kind} {n.id!r} has no base score")
            elif not (0.0 < n.base_score < 1.0):
                violations.append(f"{n.kind} {n.id!r} base score {n.base_score} outside (0,1)")
        if n.meaning is not None:
            if model.embedding_dim and len(n.meaning) != model.embedding_dim:
                violations.append(f"node {n.id!r} meaning dimension {len(n.meaning)} != {model.embedding_dim}")
            norm = math.sqrt(sum(v * v for v in n.meaning))
            if abs(norm - 1.0) > 1e-9:
                violations.append(f"node {n.id!r} meaning norm {norm:.12f} not unit")
        if n.round < 0:
            violations.append(f"node {n.id!r} has negative round {n.round}")
        if n.kind == "feature" and n.round != 0:
            violations.append(f"feature {n.id!r} has nonzero round {n.round}")

    parent_count: dict[str, int] = {n.id: 0 for n in model.nodes}
    for e in model.edges:
        if not model.has_node(e.child):
            violations.append(f"edge child {e.child!r} is not a node")
            continue
        if not model.has_node(e.parent):
            violations.append(f"edge parent {e.parent!r} is not a node")
            continue
        if not math.isfinite(e.weight):
            violations.append(f"edge ({e.child!r}, {e.parent!r}) weight is not finite")
        elif e.weight == 0:
            violations.append(f"edge ({e.child!r}, {e.parent!r}) has zero weight")
        parent_count[e.child] += 1

    for node_id, count in parent_count.items():
        if node_id == model.root:
            if count > 0:
                violations.append(f"root {node_id!r} has a parent")
        elif count > 1:
            violations.append(f"node {node_id!r} has {count} parents")
        elif count == 0:
            inert.append(node_id)

    # Reachability from the root and from inert subtree heads; whatever
    # remains sits on a cycle or a broken chain.
    reachable: set[str] = set()
    stack = [model.root] + [i for i in inert if model.has_node(i)]
    while stack:
        current = stack.pop()
        if current in reachable:
            violations.append(f"cycle detected at {current!r}")
            continue
        reachable.add(current)
        stack.extend(model.children(current))

    for n in model.nodes:
        if n.id in reachable or n.id in inert:
            continue
        violations.append(f"node {n.id!r} unreachable from root (cycle or broken chain)")

    for n in model.nodes:
        if n.id not in reachable:
            continue
        kids = model.children(n.id)
        if n.kind == "feature" and kids:
            violations.append(f"feature {n.id!r} has children {list(kids)}")
        if n.kind == "concept" and len(kids) != 2:
            violations.append(f"concept {n.id!r} has {len(kids)} children, expected 2")
        if n.kind == "root" and n.id != model.root:
            violations.append(f"node {n.id!r} has kind root but is not the root")
        if n.id == model.root and n.kind != "root":
            violations.append(f"root {n.id!r} has kind {n.kind!r}")

    feature_ids = {n.id for n in model.nodes if n.kind == "feature"}
    if set(model.feature_order) != feature_ids:
        violations.append("feature_order does not list exactly the feature nodes")

    return ValidationReport(tuple(violations), tuple(sorted(inert)))


def _node_to_doc(n: ArgumentNode) -> dict:
    doc: dict = {"id": n.id, "kind": n.kind, "label": n.label}
    if n.description is not None:
        doc["description"] = n.description
    if n.meaning is not None:
        doc["meaning"] = list(n.meaning)
    if n.base_score is not None:
        doc["base_score"] = n.base_score
    doc["round"] = n.round
    return doc


def to_document(model: QafModel) -> dict:
    """Serialize to a plain JSON-compatible dict (schema version 1)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "embedding_dim": model.embedding_dim,
        "feature_order": list(model.feature_order),
        "nodes": [_node_to_doc(n) for n in model.nodes],
        "edges": [{"child": e.child, "parent": e.parent, "weight": e.weight} for e in model.edges],
        "root": model.root,
    }


def from_document(doc: dict) -> QafModel:
    """Rebuild a model from its document form; raises SchemaError when malformed."""
    if not isinstance(doc, dict):
        raise SchemaError("model document must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unknown schema version {version!r}")
    for key in ("embedding_dim", "feature_order", "nodes", "edges", "root"):
        if key not in doc:
            raise SchemaError(f"model document missing field {key!r}")
    try:
        nodes = tuple(
            ArgumentNode(
                id=str(nd["id"]),
                kind=str(nd["kind"]),
                label=str(nd["label"]),
                description=nd.get("description"),
                meaning=tuple(nd["meaning"]) if nd.get("meaning") is not None else None,
                base_score=float(nd["base_score"]) if nd.get("base_score") is not None else None,
                round=int(nd.get("round", 0)),
            )
            for nd in doc["nodes"]
        )
        edges = tuple(
            Edge(child=str(ed["child"]), parent=str(ed["parent"]), weight=float(ed["weight"]))
            for ed in doc["edges"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed model document: {exc}") from exc
    return QafModel(
        nodes=nodes,
        edges=edges,
        root=str(doc["root"]),
        embedding_dim=int(doc["embedding_dim"]),
        feature_order=tuple(str(f) for f in doc["feature_order"]),
    )


def dumps(model: QafModel) -> str:
    """Serialize to deterministic JSON text; floats keep full precision."""
    return json.dumps(to_document(model), indent=2)


def loads(text: str) -> QafModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return from_document(doc)


def save(model: QafModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))
        fh.write("\n")


def load(path) -> QafModel:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def iter_bottom_up(model: QafModel) -> Iterable[str]:
    """Node ids, children before parents, deterministic in edge order."""
    order: list[str] = []
    visited: set[str] = set()
    stack: list[tuple[str, bool]] = [(model.root, False)]
    while stack:
        node_id, expanded = stack.pop()
        if expanded:
            order.append(node_id)
            continue
        if node_id in visited:
            continue
        visited.add(node_id)
        stack.append((node_id, True))
        for edge in reversed(model.children_edges(node_id)):
            stack.append((edge.child, False))
    return order
