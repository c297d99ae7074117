import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from tensorgcn import spectral as spc
from tensorgcn.errors import MetricError, NumericError, ParameterError, ShapeError
from tensorgcn.model import (
    EdgeSet,
    Params,
    Window,
    class_weights,
    edge_probs,
    evaluate,
    f1_score,
    forward,
    init_params,
    loss_and_grad,
    objective,
    predict_edge,
    softmax,
    weighted_cross_entropy,
)
from tensorgcn.tensor import (
    banded_m,
    frobenius,
    from_shared_slice,
    m_product,
    m_transform,
    transform_slices,
)
from tensorgcn.verify import random_problem

from oracles import central_difference


def test_forward_identity_adjacency_and_weight():
    x_hat = np.random.default_rng(0).standard_normal((3, 2, 2))
    window = Window([sp.identity(3)] * 2, x_hat)
    y = forward(window, Params([np.eye(2)], np.zeros((2, 4))), activation="identity")
    assert np.allclose(y, x_hat)


def test_forward_hand_example():
    window = Window([sp.csr_matrix([[0.5, 0.5], [0.5, 0.5]])], np.eye(2)[:, :, None])
    y = forward(window, Params([np.eye(2)], np.zeros((2, 4))))
    assert np.allclose(y[:, :, 0], [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


def naive_embedding(adj, x, weights, m, act=lambda z: np.maximum(z, 0)):
    """A * act^(A * X * W0) * W1 ... built from explicit M-products."""
    t = m.size
    h = x
    for k, w_hat in enumerate(weights):
        w = from_shared_slice(w_hat, t, m)
        h = m_product(m_product(adj, h, m), w, m)
        if k < len(weights) - 1:
            h = m_transform(act(m_transform(h, m)), m, inverse=True)
    return h


@pytest.mark.parametrize("layers", [[3], [4, 3]])
@pytest.mark.parametrize("seed", range(5))
def test_forward_matches_naive_composition(layers, seed):
    rng = np.random.default_rng(seed)
    n, t, f = 5, 4, 2
    m = banded_m(t, 2 + seed % 3)
    adj = spc.AdjacencyTensor.from_raw([(rng.random((n, n)) < 0.4).astype(float) for _ in range(t)])
    x = rng.random((n, f, t))
    params = init_params(f, layers, 2, seed)
    window = Window(transform_slices(adj.slices, m), m_transform(x, m))
    expected = m_transform(naive_embedding(adj.dense(), x, params.layers, m), m)
    got = forward(window, params)
    assert frobenius(got - expected) <= 1e-9 * frobenius(expected)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_forward_nonfinite_raises():
    window = Window([sp.identity(2)], np.array([[[np.inf], [0.0]], [[0.0], [1.0]]]))
    with pytest.raises(NumericError):
        forward(window, Params([np.eye(2)], np.zeros((2, 4))))


def test_window_shape_mismatch():
    with pytest.raises(ShapeError):
        Window([sp.identity(3)], np.zeros((2, 1, 1)))


def test_weight_sharing_materialized():
    m = banded_m(5, 3)
    w = from_shared_slice(np.random.default_rng(1).standard_normal((2, 3)), 5, m)
    w_hat = m_transform(w, m)
    for t in range(1, 5):
        assert np.allclose(w_hat[:, :, t], w_hat[:, :, 0], atol=1e-13)


# -- classifier and loss --

def test_softmax_examples():
    assert np.allclose(softmax(np.array([1.0, 1.0])), [0.5, 0.5])
    p = softmax(np.array([2.0, 0.0]))
    assert np.allclose(p, [np.exp(2) / (np.exp(2) + 1), 1 / (np.exp(2) + 1)])
    assert p == pytest.approx([0.8808, 0.1192], abs=1e-4)


def test_predict_edge_zero_u_uniform():
    y = np.random.default_rng(2).standard_normal((4, 3, 2))
    assert np.allclose(predict_edge(y, np.zeros((3, 6)), 0, 1, 1), 1 / 3)


def test_predict_edge_source_first():
    y = np.zeros((2, 1, 1))
    y[0, 0, 0] = 1.0
    u = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert predict_edge(y, u, 0, 1, 0)[0] > 0.5
    assert predict_edge(y, u, 1, 0, 0)[0] == pytest.approx(0.5)


def test_predict_edge_out_of_range():
    with pytest.raises(IndexError):
        predict_edge(np.zeros((2, 1, 1)), np.zeros((2, 2)), 0, 2, 0)


def test_edge_probs_matches_predict_edge():
    rng = np.random.default_rng(3)
    y, u = rng.standard_normal((5, 2, 3)), rng.standard_normal((2, 4))
    edges = EdgeSet([0, 2, 1], [1, 4, 0], [3, 0, 0], [0, 1, 1])
    probs = edge_probs(y, u, edges)
    for k in range(3):
        assert np.allclose(probs[k], predict_edge(y, u, edges.src[k], edges.dst[k], edges.t[k]))


def test_loss_hand_value():
    loss = weighted_cross_entropy(np.array([[0.5, 0.5]]), [0], [0.5, 0.5])
    assert loss == pytest.approx(0.5 * np.log(2), abs=1e-12)
    assert loss == pytest.approx(0.34657, abs=1e-5)


def test_loss_perfect_predictions_zero():
    assert weighted_cross_entropy(np.array([[1.0, 0.0], [0.0, 1.0]]), [0, 1], [0.3, 0.7]) == 0.0


def test_loss_clamped():
    loss = weighted_cross_entropy(np.array([[0.0, 1.0]]), [0], [1.0, 0.0])
    assert loss == pytest.approx(-np.log(1e-12))


def test_loss_label_out_of_range():
    with pytest.raises(ParameterError):
        weighted_cross_entropy(np.array([[0.5, 0.5]]), [2], [0.5, 0.5])


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.0, 1.0))
def test_loss_linear_in_alpha(a, b, lam):
    rng = np.random.default_rng(4)
    probs = softmax(rng.standard_normal((7, 2)))
    labels = rng.integers(0, 2, 7)
    va, vb = np.array([a, 1 - a]), np.array([b, 1 - b])
    mix = weighted_cross_entropy(probs, labels, lam * va + (1 - lam) * vb)
    sep = lam * weighted_cross_entropy(probs, labels, va) + (1 - lam) * weighted_cross_entropy(probs, labels, vb)
    assert mix == pytest.approx(sep, rel=1e-12, abs=1e-12)


def test_class_weights_validation():
    assert np.allclose(class_weights([0.8, 0.2], 2), [0.8, 0.2])
    with pytest.raises(ParameterError):
        class_weights([0.5, 0.6])
    with pytest.raises(ParameterError):
        class_weights([0.5, 0.5], 3)


# -- gradients --

@pytest.mark.parametrize("seed", range(10))
def test_gradients_match_central_differences(seed):
    rng = np.random.default_rng(100 + seed)
    n, t = int(rng.integers(3, 7)), int(rng.integers(1, 5))
    c = 2 + seed % 2
    layers = [3] if seed % 2 == 0 else [3, 3]
    activation = "relu" if len(layers) == 1 else "tanh"
    window, edges, params, alpha = random_problem(rng, n, t, 2, layers, c, seed=seed)
    _, grads = loss_and_grad(params, window, edges, alpha, activation)
    numeric = central_difference(lambda: objective(params, window, edges, alpha, activation),
                                 params.arrays())
    a = np.concatenate([g.ravel() for g in grads.arrays()])
    b = np.concatenate([g.ravel() for g in numeric])
    assert np.linalg.norm(a - b) / (np.linalg.norm(a) + np.linalg.norm(b)) <= 1e-5


def test_loss_matches_objective():
    rng = np.random.default_rng(5)
    window, edges, params, alpha = random_problem(rng, 5, 3, 2, [3, 2], 3)
    for red in ("mean", "sum"):
        loss, _ = loss_and_grad(params, window, edges, alpha, "relu", red)
        assert loss == pytest.approx(objective(params, window, edges, alpha, "relu", red), rel=1e-12)


def test_zero_weight_gives_zero_gradient():
    rng = np.random.default_rng(6)
    window, edges, params, _ = random_problem(rng, 4, 2, 2, [3], 2)
    edges = EdgeSet(edges.t, edges.src, edges.dst, np.zeros(len(edges), dtype=int))
    _, grads = loss_and_grad(params, window, edges, [0.0, 1.0])
    assert all(np.all(g == 0) for g in grads.arrays())


def test_loss_empty_edges_rejected():
    rng = np.random.default_rng(7)
    window, _, params, alpha = random_problem(rng, 4, 2, 2, [3], 2)
    with pytest.raises(ParameterError):
        loss_and_grad(params, window, EdgeSet.empty(), alpha)


def test_node_permutation_invariance():
    rng = np.random.default_rng(8)
    n, t = 6, 3
    m = banded_m(t, 2)
    raw = [(rng.random((n, n)) < 0.4).astype(float) for _ in range(t)]
    x = rng.random((n, 2, t))
    params = init_params(2, [3], 2, 0)
    perm = rng.permutation(n)
    inv = np.argsort(perm)

    def embed(raw_slices, feats):
        adj = spc.AdjacencyTensor.from_raw(raw_slices)
        return forward(Window(transform_slices(adj.slices, m), m_transform(feats, m)), params)

    y = embed(raw, x)
    y_perm = embed([a[np.ix_(perm, perm)] for a in raw], x[perm])
    assert np.allclose(y_perm, y[perm], atol=1e-12)
    edges = EdgeSet([0, 1, 2], [0, 3, 5], [1, 2, 4], [0, 1, 0])
    edges_p = EdgeSet(edges.t, inv[edges.src], inv[edges.dst], edges.label)
    assert np.allclose(edge_probs(y, params.u, edges), edge_probs(y_perm, params.u, edges_p), atol=1e-12)


def test_init_params_seeded_and_shaped():
    a, b = init_params(2, [6], 2, 3), init_params(2, [6], 2, 3)
    assert all(np.array_equal(x, y) for x, y in zip(a.arrays(), b.arrays()))
    assert a.layers[0].shape == (2, 6) and a.u.shape == (2, 12)
    s = np.sqrt(6 / 8)
    assert np.all(np.abs(a.layers[0]) <= s)


# -- metrics --

def test_f1_examples():
    assert f1_score([0, 1, 0], [0, 1, 0]) == 1.0
    assert f1_score([1, 1, 1], [0, 1, 0]) == 0.0
    pred = [0, 0, 0, 1, 1]
    label = [0, 0, 1, 0, 1]
    assert f1_score(pred, label) == pytest.approx(2 / 3)


def test_evaluate_all_correct_and_empty():
    y = np.zeros((2, 1, 1))
    y[0, 0, 0] = 1.0
    u = np.array([[1.0, 0.0], [0.0, 0.0]])
    edges = EdgeSet([0], [0], [1], [0])
    assert evaluate(y, u, edges, "f1_negative") == 1.0
    assert evaluate(y, u, edges, "accuracy") == 1.0
    with pytest.raises(MetricError):
        evaluate(y, u, EdgeSet.empty(), "accuracy")


def test_argmax_ties_go_to_lower_class():
    y = np.zeros((2, 1, 1))
    edges = EdgeSet([0], [0], [1], [0])
    assert evaluate(y, np.zeros((2, 2)), edges, "accuracy") == 1.0


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=6))
def test_softmax_sums_to_one(logits):
    p = softmax(np.array(logits))
    assert abs(p.sum() - 1.0) <= 1e-12 and np.all(p >= 0)


@given(st.permutations(list(range(8))))
@settings(max_examples=25, deadline=None)
def test_edge_order_does_not_change_loss_or_grads(perm):
    rng = np.random.default_rng(9)
    window, edges, params, alpha = random_problem(rng, 5, 3, 2, [3, 3], 2, num_edges=8)
    shuffled = EdgeSet(edges.t[perm], edges.src[perm], edges.dst[perm], edges.label[perm])
    loss_a, grads_a = loss_and_grad(params, window, edges, alpha, "tanh")
    loss_b, grads_b = loss_and_grad(params, window, shuffled, alpha, "tanh")
    assert loss_a == loss_b
    assert all(np.array_equal(a, b) for a, b in zip(grads_a.arrays(), grads_b.arrays()))
