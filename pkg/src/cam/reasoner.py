"""Net-based gradual semantics, batch scoring, AUC, and the keep/drop filter.

Strengths propagate bottom-up in a single sweep (the model is a tree):
leaves take their instance coordinate, and every internal node a gets

    s(a) = sigmoid(ln(beta(a) / (1 - beta(a))) + sum_children w * s(child)),

with the children accumulated in edge-insertion order for bit
reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MisalignedInstanceError, SingleClassError
from .learner import logistic
from .qaf import QafModel, iter_bottom_up


@dataclass(frozen=True)
class StrengthAssignment:
    """Per-node strengths for one instance; the reasoning trace."""

    strengths: dict[str, float]
    instance: tuple[float, ...]

    def __getitem__(self, node_id: str) -> float:
        return self.strengths[node_id]


def evaluate(model: QafModel, x) -> StrengthAssignment:
    """Compute every node's strength for one instance vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(model.feature_order),):
        raise MisalignedInstanceError(
            f"instance has shape {x.shape}, feature order has {len(model.feature_order)} entries"
        )
    if len(x) and (x.min() < -1e-12 or x.max() > 1.0 + 1e-12):
        raise MisalignedInstanceError("instance coordinates must lie in [0, 1]")

    strengths: dict[str, float] = {}
    leaf_value = dict(zip(model.feature_order, (float(v) for v in x)))
    for node_id in iter_bottom_up(model):
        node = model.node(node_id)
        if node.kind == "feature":
            strengths[node_id] = leaf_value[node_id]
            continue
        aggregate = 0.0
        for edge in model.children_edges(node_id):
            aggregate += edge.weight * strengths[edge.child]
        beta = node.base_score
        strengths[node_id] = float(logistic(math.log(beta / (1.0 - beta)) + aggregate))

    # Inert subtrees (detached by zero-weight pruning) are evaluated too,
    # so the assignment is defined for every node.
    pending = [n for n in model.nodes if n.id not in strengths]
    while pending:
        progressed = False
        remaining = []
        for node in pending:
            if node.kind == "feature":
                strengths[node.id] = leaf_value[node.id]
                progressed = True
                continue
            edges = model.children_edges(node.id)
            if any(e.child not in strengths for e in edges):
                remaining.append(node)
                continue
            aggregate = sum(e.weight * strengths[e.child] for e in edges)
            beta = node.base_score
            strengths[node.id] = float(logistic(math.log(beta / (1.0 - beta)) + aggregate))
            progressed = True
        if not progressed:
            break  # malformed remainder (cycles); validate() reports these
        pending = remaining
    return StrengthAssignment(strengths=strengths, instance=tuple(float(v) for v in x))


def predict(model: QafModel, x) -> float:
    """Root strength for one instance."""
    return evaluate(model, x)[model.root]


def predict_batch(model: QafModel, matrix: np.ndarray) -> np.ndarray:
    """Root strengths for each row of a transformed matrix.

    Node-wise vectorization over rows; per row the arithmetic (and hence
    every bit of the result) matches evaluate().
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] != len(model.feature_order):
        raise MisalignedInstanceError(
            f"matrix shape {matrix.shape} does not match feature order of {len(model.feature_order)}"
        )
    column = {fid: matrix[:, i] for i, fid in enumerate(model.feature_order)}
    strengths: dict[str, np.ndarray] = {}
    for node_id in iter_bottom_up(model):
        node = model.node(node_id)
        if node.kind == "feature":
            strengths[node_id] = column[node_id]
            continue
        aggregate = np.zeros(len(matrix))
        for edge in model.children_edges(node_id):
            aggregate = aggregate + edge.weight * strengths[edge.child]
        beta = node.base_score
        strengths[node_id] = logistic(math.log(beta / (1.0 - beta)) + aggregate)
    return np.asarray(strengths[model.root], dtype=float)


def auc(scores, labels) -> float:
    """Mann-Whitney AUC with average-rank tie handling."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise SingleClassError(f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors")
    positives = int(np.sum(labels == 1))
    negatives = int(np.sum(labels == 0))
    if positives == 0 or negatives == 0:
        raise SingleClassError(f"need both classes for AUC, got {positives} positives / {negatives} negatives")

    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=float)
    sorted_scores = scores[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average of 1-based ranks i+1..j+1
        i = j + 1
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives)


def filter_concept(auc_candidate: float, auc_org: float) -> bool:
    """Keep a candidate iff attaching it does not lower evaluation AUC."""
    return auc_candidate >= auc_org
