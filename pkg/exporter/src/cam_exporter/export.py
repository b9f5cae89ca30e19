"""Convert a feature-description table into the engine's embedding file.

Two backends:

* any sentence-transformers model name (the normal path; multilingual
  models recommended), and
* ``hashed-ngram-<dim>``, a dependency-free deterministic bag-of-ngrams
  vectorizer used for committed fixtures and offline environments.

Either way the output is one unit-norm vector per node id, tagged with
the model name as provenance, loadable by the engine's EmbeddingTable.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from hashlib import blake2b

import numpy as np

from cam.errors import SchemaError
from cam.semantics import EmbeddingTable

HASHED_PATTERN = re.compile(r"^hashed-ngram-(\d+)$")

_CLEAN = re.compile(r"[^0-9A-Za-z ]+")
_SPACES = re.compile(r"\s+")


def clean_text(text: str) -> str:
    """Strip special characters and collapse whitespace."""
    return _SPACES.sub(" ", _CLEAN.sub(" ", text)).strip()


@dataclass
class DescriptionTable:
    """Rows of (node id, cleaned description text)."""

    rows: list[tuple[str, str]]

    def __post_init__(self) -> None:
        seen = set()
        for node_id, description in self.rows:
            if not node_id:
                raise SchemaError("empty node id in description table")
            if node_id in seen:
                raise SchemaError(f"duplicate node id {node_id!r} in description table")
            seen.add(node_id)
            if not description:
                raise SchemaError(f"empty description for node {node_id!r}")

    @classmethod
    def from_csv(cls, path) -> "DescriptionTable":
        rows: list[tuple[str, str]] = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: empty CSV") from None
            if len(header) < 2:
                raise SchemaError(f"{path}: expected (id, description) columns")
            for line in reader:
                if not line or not any(cell.strip() for cell in line):
                    continue
                rows.append((line[0].strip(), clean_text(line[1])))
        return cls(rows)

    @property
    def ids(self) -> list[str]:
        return [node_id for node_id, _ in self.rows]


def _hash_token(token: str) -> int:
    return int.from_bytes(blake2b(token.encode("utf-8"), digest_size=8).digest(), "big")


def hashed_ngram_vector(text: str, dim: int) -> np.ndarray:
    """Signed hashed bag of word unigrams and bigrams, L2-normalized."""
    words = clean_text(text).lower().split()
    tokens = list(words)
    tokens += [f"{a} {b}" for a, b in zip(words, words[1:])]
    vec = np.zeros(dim, dtype=float)
    for token in tokens:
        h = _hash_token(token)
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise SchemaError(f"description {text!r} vectorizes to zero")
    return vec / norm


def _encode_hashed(table: DescriptionTable, dim: int) -> np.ndarray:
    return np.vstack([hashed_ngram_vector(desc, dim) for _, desc in table.rows])


def _encode_sbert(table: DescriptionTable, model_name: str) -> np.ndarray:
    from sentence_transformers import SentenceTransformer

    model = SentenceTransformer(model_name)
    vectors = np.asarray(model.encode([desc for _, desc in table.rows]), dtype=float)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise SchemaError("embedding model returned a zero vector")
    return vectors / norms


def export(table: DescriptionTable, model_name: str) -> EmbeddingTable:
    """Embed every description; provenance records the model used."""
    match = HASHED_PATTERN.match(model_name)
    if match:
        vectors = _encode_hashed(table, int(match.group(1)))
    else:
        vectors = _encode_sbert(table, model_name)
    return EmbeddingTable(
        dim=vectors.shape[1],
        provenance=model_name,
        vectors={node_id: vectors[i] for i, (node_id, _) in enumerate(table.rows)},
    )
