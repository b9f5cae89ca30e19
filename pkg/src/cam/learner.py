"""Field-wise learning: base logistic fit and per-concept net fits.

The base model scores the root from the current frontier,

    S = sigmoid(sum_i w_i a_i + b_g),

minimizing mean binary cross-entropy. A candidate concept c with children
(a_j, a_k) is then fitted with every previously learned parameter frozen:

    S = sigmoid(sum_{i != j,k} w_i a_i + b_g + w_c sigmoid(w'_j a_j + w'_k a_k + b_c)),

where only (w_c, w'_j, w'_k, b_c) move. Gradients are analytic; the
default optimizer is full-batch L-BFGS-B driven to a projected-gradient
tolerance, with a minibatch "epochs" mode available.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import StructureMismatchError
from .qaf import WEIGHT_PRUNE_EPS, ArgumentNode, Edge, QafModel, clamp_base_score


# Bias parameters are boxed to the log-odds window representable by a
# clamped base score in [1e-12, 1 - 1e-12]; |logit| tops out near 27.6.
# Only separable data ever pushes against this.
BIAS_BOUND = 27.0


def logistic(z):
    """Numerically stable sigmoid, scalar or array."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return float(out) if out.ndim == 0 else out


def bce_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with clipped probabilities."""
    p = np.clip(probs, 1e-15, 1.0 - 1e-15)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))


@dataclass
class TrainConfig:
    """Optimizer settings for both fit stages.

    ``exact`` mode runs full-batch L-BFGS-B until the projected-gradient
    inf-norm drops to ``tol``; ``epochs`` mode does fixed-step minibatch
    passes (the fine-tuning schedule).
    """

    mode: str = "exact"
    max_iter: int = 500
    tol: float = 1e-8
    epochs: int = 5
    batch_size: int = 256
    step_size: float = 0.1
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("exact", "epochs"):
            raise ValueError(f"unknown optimizer mode {self.mode!r}")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def to_document(self) -> dict:
        return {
            "mode": self.mode, "max_iter": self.max_iter, "tol": self.tol,
            "epochs": self.epochs, "batch_size": self.batch_size,
            "step_size": self.step_size, "l2": self.l2, "seed": self.seed,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "TrainConfig":
        return cls(**{k: doc[k] for k in cls().to_document() if k in doc})


@dataclass
class BaseFit:
    """Result of the base logistic fit over a frontier."""

    frontier: list[str]
    weights: np.ndarray
    bias: float
    loss_trace: list[float]
    grad_norm: float
    converged: bool

    def forward(self, matrix: np.ndarray) -> np.ndarray:
        return logistic(matrix @ self.weights + self.bias)


@dataclass
class FieldWiseFit:
    """Result of one candidate's net fit with frozen context."""

    frontier: list[str]
    candidate_id: str
    children: tuple[str, str]
    frozen_weights: np.ndarray  # aligned with ``frontier``; children entries unused
    frozen_bias: float
    concept_weight: float  # w_c
    child_weights: tuple[float, float]  # (w'_j, w'_k)
    concept_bias: float  # b_c
    loss_trace: list[float] = field(default_factory=list)
    grad_norm: float = 0.0
    converged: bool = False

    def forward(self, matrix: np.ndarray) -> np.ndarray:
        j, k = (self.frontier.index(c) for c in self.children)
        frozen = np.delete(matrix, [j, k], axis=1) @ np.delete(self.frozen_weights, [j, k]) + self.frozen_bias
        inner = logistic(self.child_weights[0] * matrix[:, j] + self.child_weights[1] * matrix[:, k] + self.concept_bias)
        return logistic(frozen + self.concept_weight * inner)


def base_gradient(
    weights: np.ndarray, bias: float, matrix: np.ndarray, labels: np.ndarray, l2: float = 0.0
) -> tuple[np.ndarray, float]:
    """Analytic gradient of mean BCE for the base model: (d/dw, d/db)."""
    residual = logistic(matrix @ weights + bias) - labels
    grad_w = matrix.T @ residual / len(labels) + 2.0 * l2 * weights
    grad_b = float(np.mean(residual))
    return grad_w, grad_b


def field_wise_gradient(
    params: np.ndarray,
    frozen_z: np.ndarray,
    a_j: np.ndarray,
    a_k: np.ndarray,
    labels: np.ndarray,
    l2: float = 0.0,
) -> np.ndarray:
    """Analytic gradient of mean BCE wrt (w_c, w'_j, w'_k, b_c).

    ``frozen_z`` is the constant contribution sum_{i != j,k} w_i a_i + b_g.
    """
    w_c, w_j, w_k, b_c = params
    inner = logistic(w_j * a_j + w_k * a_k + b_c)
    residual = logistic(frozen_z + w_c * inner) - labels
    n = len(labels)
    chain = residual * w_c * inner * (1.0 - inner)
    return np.array(
        [
            float(residual @ inner / n) + 2.0 * l2 * w_c,
            float(chain @ a_j / n) + 2.0 * l2 * w_j,
            float(chain @ a_k / n) + 2.0 * l2 * w_k,
            float(np.mean(chain)),
        ]
    )


def _field_wise_loss(params, frozen_z, a_j, a_k, labels, l2):
    w_c, w_j, w_k, b_c = params
    inner = logistic(w_j * a_j + w_k * a_k + b_c)
    probs = logistic(frozen_z + w_c * inner)
    penalty = l2 * float(w_c**2 + w_j**2 + w_k**2)
    return bce_loss(probs, labels) + penalty


def _base_loss(params, matrix, labels, l2):
    weights, bias = params[:-1], params[-1]
    penalty = l2 * float(weights @ weights)
    return bce_loss(logistic(matrix @ weights + bias), labels) + penalty


def _projected_grad_norm(x, grad, bounds) -> float:
    projected = np.array(grad, dtype=float)
    for i, (lo, hi) in enumerate(bounds):
        if lo is not None and x[i] <= lo and grad[i] > 0:
            projected[i] = 0.0
        if hi is not None and x[i] >= hi and grad[i] < 0:
            projected[i] = 0.0
    return float(np.max(np.abs(projected))) if len(projected) else 0.0


def _minimize_exact(loss_fn, grad_fn, x0, config: TrainConfig, bounds):
    trace: list[float] = [loss_fn(x0)]
    result = minimize(
        loss_fn,
        x0,
        jac=grad_fn,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": config.max_iter, "gtol": config.tol, "ftol": 1e-15},
        callback=lambda xk: trace.append(loss_fn(xk)),
    )
    grad_norm = _projected_grad_norm(result.x, grad_fn(result.x), bounds)
    converged = bool(grad_norm <= config.tol)
    if not converged:
        warnings.warn(
            f"fit stopped at projected gradient norm {grad_norm:.3e} > tol {config.tol:.0e} "
            f"after {result.nit} iterations",
            RuntimeWarning,
            stacklevel=3,
        )
    return result.x, trace, grad_norm, converged


def _minimize_epochs(loss_fn, grad_fn, x0, n_rows: int, config: TrainConfig, bounds):
    rng = np.random.default_rng(config.seed)
    x = np.array(x0, dtype=float)
    lows = np.array([-np.inf if lo is None else lo for lo, _ in bounds])
    highs = np.array([np.inf if hi is None else hi for _, hi in bounds])
    trace = [loss_fn(x, None)]
    for _ in range(config.epochs):
        order = rng.permutation(n_rows)
        for start in range(0, n_rows, config.batch_size):
            batch = order[start : start + config.batch_size]
            x = np.clip(x - config.step_size * grad_fn(x, batch), lows, highs)
        trace.append(loss_fn(x, None))
    grad_norm = _projected_grad_norm(x, grad_fn(x, None), bounds)
    return x, trace, grad_norm, True


def train_base(
    matrix: np.ndarray,
    labels: np.ndarray,
    config: Optional[TrainConfig] = None,
    frontier: Optional[list[str]] = None,
) -> BaseFit:
    """Fit Eq.-1 weights and bias over frontier strength columns."""
    config = config or TrainConfig()
    matrix = np.asarray(matrix, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if matrix.ndim != 2 or len(matrix) != len(labels):
        raise StructureMismatchError(f"matrix shape {matrix.shape} does not match {len(labels)} labels")
    n_features = matrix.shape[1]
    x0 = np.zeros(n_features + 1)

    def loss(params, batch=None):
        if batch is None:
            return _base_loss(params, matrix, labels, config.l2)
        return _base_loss(params, matrix[batch], labels[batch], config.l2)

    def grad(params, batch=None):
        m, y = (matrix, labels) if batch is None else (matrix[batch], labels[batch])
        gw, gb = base_gradient(params[:-1], params[-1], m, y, config.l2)
        return np.concatenate([gw, [gb]])

    bounds = [(None, None)] * n_features + [(-BIAS_BOUND, BIAS_BOUND)]
    if config.mode == "exact":
        x, trace, grad_norm, converged = _minimize_exact(
            lambda p: loss(p), lambda p: grad(p), x0, config, bounds
        )
    else:
        x, trace, grad_norm, converged = _minimize_epochs(loss, grad, x0, len(labels), config, bounds)
    return BaseFit(
        frontier=list(frontier) if frontier is not None else [],
        weights=x[:-1].copy(), bias=float(x[-1]),
        loss_trace=trace, grad_norm=grad_norm, converged=converged,
    )


def train_field_wise(
    base: BaseFit,
    candidate_id: str,
    children: tuple[str, str],
    frontier: list[str],
    matrix: np.ndarray,
    labels: np.ndarray,
    config: Optional[TrainConfig] = None,
) -> FieldWiseFit:
    """Fit one candidate's block with all base parameters frozen.

    Initialization: w_c = 0, b_c = 0, and the children's new weights warm
    started from their base-fit values, so the initial forward differs
    from the base model only by dropping w_j a_j + w_k a_k.
    """
    config = config or TrainConfig()
    matrix = np.asarray(matrix, dtype=float)
    labels = np.asarray(labels, dtype=float)
    for child in children:
        if child not in frontier:
            raise StructureMismatchError(f"candidate child {child!r} not in frontier {frontier}")
    if matrix.shape[1] != len(frontier):
        raise StructureMismatchError(f"matrix has {matrix.shape[1]} columns for frontier of {len(frontier)}")
    j, k = frontier.index(children[0]), frontier.index(children[1])
    rest = [i for i in range(len(frontier)) if i not in (j, k)]
    frozen_z = matrix[:, rest] @ base.weights[rest] + base.bias
    a_j, a_k = matrix[:, j], matrix[:, k]
    x0 = np.array([0.0, base.weights[j], base.weights[k], 0.0])

    def loss(params, batch=None):
        if batch is None:
            return _field_wise_loss(params, frozen_z, a_j, a_k, labels, config.l2)
        return _field_wise_loss(params, frozen_z[batch], a_j[batch], a_k[batch], labels[batch], config.l2)

    def grad(params, batch=None):
        if batch is None:
            return field_wise_gradient(params, frozen_z, a_j, a_k, labels, config.l2)
        return field_wise_gradient(params, frozen_z[batch], a_j[batch], a_k[batch], labels[batch], config.l2)

    bounds = [(None, None)] * 3 + [(-BIAS_BOUND, BIAS_BOUND)]
    if config.mode == "exact":
        x, trace, grad_norm, converged = _minimize_exact(
            lambda p: loss(p), lambda p: grad(p), x0, config, bounds
        )
    else:
        x, trace, grad_norm, converged = _minimize_epochs(loss, grad, x0, len(labels), config, bounds)

    return FieldWiseFit(
        frontier=list(frontier),
        candidate_id=candidate_id,
        children=children,
        frozen_weights=base.weights.copy(),
        frozen_bias=base.bias,
        concept_weight=float(x[0]),
        child_weights=(float(x[1]), float(x[2])),
        concept_bias=float(x[3]),
        loss_trace=trace,
        grad_norm=grad_norm,
        converged=converged,
    )


def instantiate(model: QafModel, fit, frontier: Optional[list[str]] = None) -> QafModel:
    """Write a fit's parameters onto a structurally matching model.

    BaseFit: sets the weight of each frontier->root edge and the root's
    base score. FieldWiseFit: additionally sets the concept's child edge
    weights, its root edge weight, and its base score. Edges whose new
    weight magnitude falls below the pruning epsilon are dropped.
    """
    if isinstance(fit, BaseFit):
        order = frontier if frontier is not None else fit.frontier
        if len(order) != len(fit.weights):
            raise StructureMismatchError(f"{len(order)} frontier ids for {len(fit.weights)} weights")
        weight_by_child = dict(zip(order, fit.weights))
        new_edges = []
        for e in model.edges:
            if e.parent == model.root:
                if e.child not in weight_by_child:
                    raise StructureMismatchError(f"edge child {e.child!r} not covered by fit")
                new_edges.append(Edge(e.child, e.parent, float(weight_by_child.pop(e.child))))
            else:
                new_edges.append(e)
        if weight_by_child:
            raise StructureMismatchError(f"fit covers absent root children: {sorted(weight_by_child)}")
        new_nodes = [
            ArgumentNode(n.id, n.kind, n.label, n.description, n.meaning,
                         clamp_base_score(logistic(fit.bias)) if n.id == model.root else n.base_score,
                         n.round)
            for n in model.nodes
        ]
    elif isinstance(fit, FieldWiseFit):
        cid = fit.candidate_id
        if not model.has_node(cid):
            raise StructureMismatchError(f"model has no concept node {cid!r}")
        child_w = dict(zip(fit.children, fit.child_weights))
        new_edges = []
        for e in model.edges:
            if e.parent == cid:
                if e.child not in child_w:
                    raise StructureMismatchError(f"edge ({e.child!r}, {cid!r}) not covered by fit")
                new_edges.append(Edge(e.child, e.parent, float(child_w.pop(e.child))))
            elif e.child == cid and e.parent == model.root:
                new_edges.append(Edge(e.child, e.parent, float(fit.concept_weight)))
            else:
                new_edges.append(e)
        if child_w:
            raise StructureMismatchError(f"fit children missing from model: {sorted(child_w)}")
        new_nodes = [
            ArgumentNode(n.id, n.kind, n.label, n.description, n.meaning,
                         clamp_base_score(logistic(fit.concept_bias)) if n.id == cid else n.base_score,
                         n.round)
            for n in model.nodes
        ]
    else:
        raise StructureMismatchError(f"cannot instantiate from {type(fit).__name__}")

    kept_edges = tuple(e for e in new_edges if math.isnan(e.weight) or abs(e.weight) >= WEIGHT_PRUNE_EPS)
    return QafModel(
        nodes=tuple(new_nodes),
        edges=kept_edges,
        root=model.root,
        embedding_dim=model.embedding_dim,
        feature_order=model.feature_order,
    )
