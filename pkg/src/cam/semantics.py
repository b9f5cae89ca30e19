"""Meaning-vector grouping and concept abstraction.

Frontier nodes are paired greedily by cosine similarity of their meaning
vectors; each kept pair is abstracted into a new concept whose meaning is
the renormalized mean of its children (or, when a human supplies a
description, the embedding of that description). Decisions here use only
vectors; raw text lives on nodes purely for display.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateVectorError, MissingMeaningError, NodeNotFoundError, SchemaError
from .qaf import ArgumentNode, Edge

UNIT_NORM_TOL = 1e-9


@dataclass
class EmbeddingTable:
    """Unit-norm meaning vectors keyed by node id."""

    dim: int
    provenance: str
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean: dict[str, np.ndarray] = {}
        for node_id, vec in self.vectors.items():
            arr = np.asarray(vec, dtype=float)
            if arr.ndim != 1 or len(arr) != self.dim:
                raise SchemaError(f"vector for {node_id!r} has shape {arr.shape}, expected ({self.dim},)")
            norm = float(np.linalg.norm(arr))
            if abs(norm - 1.0) > UNIT_NORM_TOL:
                raise SchemaError(f"vector for {node_id!r} has norm {norm!r}, expected unit")
            clean[node_id] = arr
        self.vectors = clean

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.vectors

    def get(self, node_id: str) -> np.ndarray:
        try:
            return self.vectors[node_id]
        except KeyError:
            raise MissingMeaningError(f"no meaning vector for node {node_id!r}") from None

    def with_vector(self, node_id: str, vector: np.ndarray) -> None:
        arr = np.asarray(vector, dtype=float)
        if len(arr) != self.dim:
            raise SchemaError(f"vector for {node_id!r} has dimension {len(arr)}, expected {self.dim}")
        self.vectors[node_id] = arr

    def to_document(self) -> dict:
        return {
            "dim": self.dim,
            "provenance": self.provenance,
            "vectors": {k: list(map(float, v)) for k, v in self.vectors.items()},
        }

    @classmethod
    def from_document(cls, doc: dict) -> "EmbeddingTable":
        if not isinstance(doc, dict):
            raise SchemaError("embedding table document must be an object")
        for key in ("dim", "provenance", "vectors"):
            if key not in doc:
                raise SchemaError(f"embedding table missing field {key!r}")
        return cls(dim=int(doc["dim"]), provenance=str(doc["provenance"]), vectors=dict(doc["vectors"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_document(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_document(json.load(fh))


@dataclass(frozen=True)
class ConceptCandidate:
    """A proposed pairing of two frontier nodes."""

    id: str
    children: tuple[str, str]
    meaning: tuple[float, ...]
    similarity: float
    label: str


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    """dot(u, v) / (|u| |v|); raises on zero vectors or mismatched dims."""
    ua = np.asarray(u, dtype=float)
    va = np.asarray(v, dtype=float)
    if ua.shape != va.shape:
        raise DegenerateVectorError(f"dimension mismatch: {ua.shape} vs {va.shape}")
    nu = float(np.linalg.norm(ua))
    nv = float(np.linalg.norm(va))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("cosine similarity of a zero vector is undefined")
    return float(np.dot(ua, va) / (nu * nv))


def normalized_mean(vectors: Sequence[np.ndarray]) -> np.ndarray:
    mean = np.mean(np.asarray(vectors, dtype=float), axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        raise DegenerateVectorError("mean of meanings has zero norm")
    return mean / norm


def propose_groups(
    frontier: Sequence[str],
    embeddings: EmbeddingTable,
    threshold: float,
    round_index: int = 1,
) -> list[ConceptCandidate]:
    """Greedy disjoint pairing of frontier nodes by cosine similarity.

    All pairwise similarities are computed; the highest pair at or above
    the threshold is taken first, both members leave the pool, repeat.
    Ties resolve to the lexicographically smallest (min id, max id) pair,
    so the output is independent of frontier order.
    """
    if not (0.0 < threshold <= 1.0):
        raise SchemaError(f"grouping threshold {threshold!r} outside (0, 1]")
    ids = list(frontier)
    if len(set(ids)) != len(ids):
        raise SchemaError(f"duplicate ids in frontier: {ids}")
    for node_id in ids:
        if node_id not in embeddings:
            raise MissingMeaningError(f"no meaning vector for node {node_id!r}")
    if len(ids) < 2:
        return []

    pairs: list[tuple[float, str, str]] = []
    for i, a in enumerate(ids):
        va = embeddings.get(a)
        for b in ids[i + 1 :]:
            sim = cosine_similarity(va, embeddings.get(b))
            if sim >= threshold:
                lo, hi = (a, b) if a < b else (b, a)
                pairs.append((sim, lo, hi))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))

    matched: set[str] = set()
    candidates: list[ConceptCandidate] = []
    for sim, lo, hi in pairs:
        if lo in matched or hi in matched:
            continue
        matched.update((lo, hi))
        cid = f"c{round_index}_{len(candidates)}"
        meaning = normalized_mean([embeddings.get(lo), embeddings.get(hi)])
        candidates.append(
            ConceptCandidate(id=cid, children=(lo, hi), meaning=tuple(meaning), similarity=sim, label=cid)
        )
    return candidates


def abstract_concept(
    candidate: ConceptCandidate,
    round_index: int,
    label_map: Optional[dict[str, dict]] = None,
    embeddings: Optional[EmbeddingTable] = None,
    known_ids: Optional[set[str]] = None,
) -> tuple[ArgumentNode, list[Edge]]:
    """Materialize a candidate as a concept node plus two untrained edges.

    A label_map entry may override label/description; when it supplies a
    description and the embedding table holds a vector for the concept id,
    that vector becomes the meaning instead of the children mean.
    """
    label = candidate.label
    description = None
    meaning = np.asarray(candidate.meaning, dtype=float)
    if label_map and known_ids is not None:
        unknown = sorted(set(label_map) - known_ids - {candidate.id})
        if unknown:
            raise NodeNotFoundError(f"label map references unknown nodes: {unknown}")
    entry = (label_map or {}).get(candidate.id)
    if entry:
        label = entry.get("label", label)
        description = entry.get("description")
        if description and embeddings is not None and candidate.id in embeddings:
            meaning = embeddings.get(candidate.id)
    norm = float(np.linalg.norm(meaning))
    if norm == 0.0:
        raise DegenerateVectorError(f"concept {candidate.id!r} meaning has zero norm")
    meaning = meaning / norm
    node = ArgumentNode(
        id=candidate.id,
        kind="concept",
        label=label,
        description=description,
        meaning=tuple(meaning),
        base_score=0.5,  # placeholder until the field-wise fit instantiates it
        round=round_index,
    )
    edges = [Edge(child=c, parent=candidate.id, weight=math.nan) for c in candidate.children]
    return node, edges
