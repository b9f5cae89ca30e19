import math

import numpy as np
import pytest

from cam.errors import StructureMismatchError
from cam.learner import (
    BaseFit,
    TrainConfig,
    base_gradient,
    field_wise_gradient,
    instantiate,
    logistic,
    train_base,
    train_field_wise,
)
from cam.qaf import ArgumentNode, Edge, QafModel, validate
from cam.reasoner import auc, evaluate


def flat_skeleton(names, root="c_g"):
    nodes = [ArgumentNode(f, "feature", f, round=0) for f in names]
    nodes.append(ArgumentNode(root, "root", root, base_score=0.5, round=1))
    edges = [Edge(f, root, math.nan) for f in names]
    return QafModel(nodes=tuple(nodes), edges=tuple(edges), root=root,
                    embedding_dim=0, feature_order=tuple(names))


def interaction_data(seed=3, n=1600):
    """Labels driven by a saturating both-high gate on the last two columns."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, 4))
    inner = logistic(9 * X[:, 2] + 9 * X[:, 3] - 9)
    z = 6.0 * inner + 2.4 * X[:, 0] - 2.4 * X[:, 1] - 4.2
    y = (rng.uniform(0, 1, n) < logistic(z)).astype(float)
    return X, y


def test_logistic_values():
    assert logistic(0.0) == 0.5
    assert logistic(2.0) == 0.8807970779778823
    assert logistic(-1000.0) == 0.0
    assert logistic(1000.0) == 1.0
    assert logistic(700.0) == 1.0
    arr = logistic(np.array([0.0, 2.0]))
    assert arr[0] == 0.5 and arr[1] == 0.8807970779778823


def test_train_base_separable_two_points():
    X = np.array([[0.0], [1.0]])
    y = np.array([0.0, 1.0])
    fit = train_base(X, y, frontier=["a"])
    assert auc(fit.forward(X), y) == 1.0


def test_train_base_zero_column_weight_stays_zero():
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.uniform(0, 1, 50), np.zeros(50)])
    y = (X[:, 0] > 0.5).astype(float)
    fit = train_base(X, y, frontier=["a", "z"])
    assert fit.weights[1] == 0.0  # bitwise: its gradient is identically zero


def test_train_base_loss_trace_nonincreasing_and_converged():
    X, y = interaction_data(seed=5, n=400)
    fit = train_base(X, y, frontier=list("abcd"))
    assert all(a >= b - 1e-12 for a, b in zip(fit.loss_trace, fit.loss_trace[1:]))
    if fit.converged:
        assert fit.grad_norm <= 1e-8


def central_difference(fn, x, h=1e-5):
    grad = np.zeros_like(x)
    for i in range(len(x)):
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (fn(up) - fn(down)) / (2 * h)
    return grad


def bce(p, y):
    p = np.clip(p, 1e-15, 1 - 1e-15)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def test_base_gradient_zero_case():
    X = np.zeros((10, 3))
    y = np.array([0.0, 1.0] * 5)
    gw, gb = base_gradient(np.zeros(3), 0.0, X, y)
    assert np.all(gw == 0.0)
    assert gb == pytest.approx(np.mean(logistic(0.0) - y), abs=0)
    assert gb == 0.0  # balanced labels, constant zero inputs


def test_base_gradient_matches_finite_differences_single_sample():
    rng = np.random.default_rng(4)
    X = rng.uniform(0, 1, (1, 3))
    y = np.array([1.0])
    params = rng.normal(0, 1, 4)

    def loss(p):
        return bce(logistic(X @ p[:-1] + p[-1]), y)

    gw, gb = base_gradient(params[:-1], params[-1], X, y)
    analytic = np.concatenate([gw, [gb]])
    numeric = central_difference(loss, params)
    rel = np.abs(analytic - numeric) / np.maximum(1e-12, np.abs(numeric))
    assert np.max(rel) < 1e-6


def test_field_wise_gradient_chain_term_matches_finite_differences():
    rng = np.random.default_rng(6)
    n = 20
    frozen_z = rng.normal(0, 1, n)
    a_j, a_k = rng.uniform(0, 1, n), rng.uniform(0, 1, n)
    y = rng.integers(0, 2, n).astype(float)
    params = rng.normal(0, 1.5, 4)

    def loss(p):
        inner = logistic(p[1] * a_j + p[2] * a_k + p[3])
        return bce(logistic(frozen_z + p[0] * inner), y)

    analytic = field_wise_gradient(params, frozen_z, a_j, a_k, y)
    numeric = central_difference(loss, params)
    rel = np.abs(analytic - numeric) / np.maximum(1e-12, np.abs(numeric))
    assert np.max(rel) < 1e-6


def test_field_wise_initial_forward_drops_only_children_terms():
    X, y = interaction_data(seed=7, n=200)
    base = train_base(X, y, frontier=list("abcd"))
    j, k = 2, 3
    frozen_z = X[:, [0, 1]] @ base.weights[[0, 1]] + base.bias
    init = np.array([0.0, base.weights[j], base.weights[k], 0.0])
    inner = logistic(init[1] * X[:, j] + init[2] * X[:, k] + init[3])
    forward_init = logistic(frozen_z + init[0] * inner)
    assert np.array_equal(forward_init, logistic(frozen_z))  # w_c = 0 kills the block
    full = base.forward(X)
    assert not np.array_equal(forward_init, full)  # differs exactly by the dropped terms
    assert np.allclose(
        np.log(full / (1 - full)) - np.log(forward_init / (1 - forward_init)),
        X[:, j] * base.weights[j] + X[:, k] * base.weights[k],
        atol=1e-9,
    )


def test_field_wise_freezes_base_parameters_bitwise():
    X, y = interaction_data(seed=8, n=300)
    base = train_base(X, y, frontier=list("abcd"))
    before_w = base.weights.copy()
    before_b = base.bias
    fw = train_field_wise(base, "c1_0", ("c", "d"), list("abcd"), X, y)
    assert np.array_equal(fw.frozen_weights, before_w)
    assert np.array_equal(base.weights, before_w)
    assert fw.frozen_bias == before_b == base.bias


def grid_search_oracle(frozen_z, a_j, a_k, y):
    """Best mean BCE over a coarse grid of the 4 trainable parameters."""
    best = np.inf
    w_cs = np.linspace(-8, 8, 9)
    w_js = np.linspace(-10, 10, 9)
    w_ks = np.linspace(-10, 10, 9)
    b_cs = np.linspace(-10, 10, 9)
    for w_c in w_cs:
        for w_j in w_js:
            inner_j = w_j * a_j
            for w_k in w_ks:
                inner_jk = inner_j + w_k * a_k
                for b_c in b_cs:
                    p = logistic(frozen_z + w_c * logistic(inner_jk + b_c))
                    best = min(best, bce(p, y))
    return best


def test_field_wise_beats_base_on_interaction_data_with_grid_oracle():
    X, y = interaction_data(seed=3)
    train, hold = np.arange(0, 1000), np.arange(1000, len(y))
    base = train_base(X[train], y[train], frontier=list("abcd"))
    fw = train_field_wise(base, "c1_0", ("c", "d"), list("abcd"), X[train], y[train])
    auc_base = auc(base.forward(X[hold]), y[hold])
    auc_fw = auc(fw.forward(X[hold]), y[hold])
    assert auc_fw > auc_base

    # The optimizer should do at least as well as a coarse exhaustive grid
    # on a downsampled split.
    sub = np.arange(0, 240)
    frozen_z = X[sub][:, [0, 1]] @ base.weights[[0, 1]] + base.bias
    small = train_field_wise(base, "c1_0", ("c", "d"), list("abcd"), X[sub], y[sub])
    inner = logistic(small.child_weights[0] * X[sub, 2] + small.child_weights[1] * X[sub, 3] + small.concept_bias)
    trained_loss = bce(logistic(frozen_z + small.concept_weight * inner), y[sub])
    assert trained_loss <= grid_search_oracle(frozen_z, X[sub, 2], X[sub, 3], y[sub]) + 1e-9


def test_train_field_wise_rejects_unknown_children():
    X, y = interaction_data(seed=9, n=100)
    base = train_base(X, y, frontier=list("abcd"))
    with pytest.raises(StructureMismatchError):
        train_field_wise(base, "c1_0", ("c", "zz"), list("abcd"), X, y)


def test_epochs_mode_runs_and_is_seed_deterministic():
    X, y = interaction_data(seed=10, n=300)
    cfg = TrainConfig(mode="epochs", epochs=5, batch_size=64, step_size=0.1, seed=12)
    f1 = train_base(X, y, cfg, frontier=list("abcd"))
    f2 = train_base(X, y, cfg, frontier=list("abcd"))
    assert np.array_equal(f1.weights, f2.weights) and f1.bias == f2.bias
    assert len(f1.loss_trace) == 6  # initial + one entry per epoch


def test_instantiate_base_sets_weights_and_root_score():
    names = ["a", "b"]
    skeleton = flat_skeleton(names)
    fit = BaseFit(frontier=names, weights=np.array([0.7, -0.3]), bias=0.0,
                  loss_trace=[], grad_norm=0.0, converged=True)
    model = instantiate(skeleton, fit)
    assert model.node("c_g").base_score == 0.5  # bias 0 -> 0.5
    weights = {e.child: e.weight for e in model.edges}
    assert weights == {"a": 0.7, "b": -0.3}


def test_instantiate_prunes_zero_weight_edges_and_reports_inert():
    names = ["a", "b"]
    skeleton = flat_skeleton(names)
    fit = BaseFit(frontier=names, weights=np.array([0.7, 0.0]), bias=1.0,
                  loss_trace=[], grad_norm=0.0, converged=True)
    model = instantiate(skeleton, fit)
    assert [e.child for e in model.edges] == ["a"]
    report = validate(model)
    assert report.ok and report.inert_nodes == ("b",)


def test_instantiate_structural_mismatch():
    skeleton = flat_skeleton(["a", "b"])
    fit = BaseFit(frontier=["a"], weights=np.array([0.7]), bias=0.0,
                  loss_trace=[], grad_norm=0.0, converged=True)
    with pytest.raises(StructureMismatchError):
        instantiate(skeleton, fit)


def test_instantiated_model_reproduces_training_forward():
    X, y = interaction_data(seed=13, n=200)
    names = list("abcd")
    fit = train_base(X, y, frontier=names)
    model = instantiate(flat_skeleton(names), fit)
    for row in X[:25]:
        forward = float(logistic(row @ fit.weights + fit.bias))
        assert evaluate(model, row)[model.root] == pytest.approx(forward, abs=1e-9)
