"""TensorGCN embedding, edge classifier, loss and analytic gradients.

Everything is computed in the transformed domain. With a weight tensor whose
transformed slices are all equal to one matrix ``W_hat`` and an activation
applied elementwise in the transformed domain, a layer reduces to the
per-slice products ``A_hat_t @ X_hat_t @ W_hat``, and the classifier reads the
transformed embedding directly, so the inverse transform is never needed.

Internally slices are stacked along the *first* axis, ``(T, N, F)``; public
functions that return embeddings use the package-wide ``(N, F, T)`` layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import MetricError, NumericError, ParameterError, ShapeError

PROB_CLAMP = 1e-12


# -- activations ---------------------------------------------------------------

def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z):
    return (z > 0).astype(z.dtype)


def _tanh_grad(z):
    return 1.0 - np.tanh(z) ** 2


ACTIVATIONS = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
    "identity": (lambda z: z, np.ones_like),
}


def _activation(name):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ParameterError(f"unknown activation {name!r}") from None


# -- containers ------------------------------------------------------------------

@dataclass
class Window:
    """Transformed adjacency and feature slices for one sliding window.

    Parameters
    ----------
    a_hat : list of sparse matrices
        ``(A x_3 M)[:, :, t]`` for each of the ``T`` slices.
    x_hat : ndarray, shape (N, F, T)
        Transformed node features.
    """

    a_hat: list
    x_hat: np.ndarray
    _ax: np.ndarray = field(default=None, init=False, repr=False)
    _a_hat_t: list = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.a_hat = [sp.csr_matrix(a, dtype=np.float64) for a in self.a_hat]
        self.x_hat = np.asarray(self.x_hat, dtype=np.float64)
        if self.x_hat.ndim != 3 or len(self.a_hat) != self.x_hat.shape[2]:
            raise ShapeError("x_hat must be (N, F, T) with one adjacency slice per t")
        n = self.x_hat.shape[0]
        for a in self.a_hat:
            if a.shape != (n, n):
                raise ShapeError(f"adjacency slice {a.shape} does not match N={n}")

    @property
    def num_nodes(self):
        return self.x_hat.shape[0]

    @property
    def num_steps(self):
        return self.x_hat.shape[2]

    @property
    def num_features(self):
        return self.x_hat.shape[1]

    @property
    def ax(self) -> np.ndarray:
        """Propagated input features ``A_hat_t @ X_hat_t`` stacked as (T, N, F)."""
        if self._ax is None:
            self._ax = propagate(self.a_hat, np.moveaxis(self.x_hat, 2, 0))
        return self._ax

    @property
    def a_hat_t(self):
        if self._a_hat_t is None:
            self._a_hat_t = [sp.csr_matrix(a.T) for a in self.a_hat]
        return self._a_hat_t


def propagate(slices, h):
    """Per-slice sparse products for ``h`` stacked as (T, N, F)."""
    out = np.empty((h.shape[0], slices[0].shape[0], h.shape[2]))
    for t, a in enumerate(slices):
        out[t] = a @ h[t]
    return out


@dataclass
class EdgeSet:
    """Labeled edges with window-local time indices.

    Edges are kept sorted by ``(t, src, dst)`` so sums over edges always run in
    the same order.
    """

    t: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    label: np.ndarray
    _rows: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        t, src, dst, label = (np.asarray(v, dtype=np.int64).ravel()
                              for v in (self.t, self.src, self.dst, self.label))
        if not (len(t) == len(src) == len(dst) == len(label)):
            raise ShapeError("edge arrays must have equal length")
        order = np.lexsort((label, dst, src, t))
        self.t, self.src, self.dst, self.label = t[order], src[order], dst[order], label[order]

    def __len__(self):
        return len(self.t)

    @classmethod
    def empty(cls):
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, z, z)


@dataclass
class Params:
    """Shared transformed-domain layer slices ``W_hat`` and classifier ``U`` (C x 2F')."""

    layers: list
    u: np.ndarray

    def arrays(self):
        return [*self.layers, self.u]

    @classmethod
    def from_arrays(cls, arrays):
        arrays = [np.array(a, dtype=np.float64) for a in arrays]
        return cls(arrays[:-1], arrays[-1])

    def copy(self):
        return Params.from_arrays(self.arrays())

    def zeros_like(self):
        return Params.from_arrays([np.zeros_like(a) for a in self.arrays()])

    @property
    def num_classes(self):
        return self.u.shape[0]

    def check(self):
        f_prev = None
        for w in self.layers:
            if f_prev is not None and w.shape[0] != f_prev:
                raise ShapeError("consecutive layer shapes do not chain")
            f_prev = w.shape[1]
        if self.u.shape[1] != 2 * f_prev:
            raise ShapeError(f"classifier expects {self.u.shape[1]} inputs, embedding gives 2*{f_prev}")
        if self.num_classes < 2:
            raise ShapeError("need at least two classes")


def glorot(rng, fan_in, fan_out):
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_in, fan_out))


def init_params(num_features, layer_sizes, num_classes, seed) -> Params:
    """Glorot-uniform weights from a seeded generator.

    ``layer_sizes`` lists the output width of each layer, e.g. ``[6]`` for the
    single-layer model.
    """
    rng = np.random.default_rng(seed)
    layers = []
    f_in = num_features
    for f_out in layer_sizes:
        layers.append(glorot(rng, f_in, f_out))
        f_in = f_out
    u = glorot(rng, 2 * f_in, num_classes).T.copy()
    params = Params(layers, u)
    params.check()
    return params


def class_weights(alpha, num_classes=None) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    if num_classes is not None and alpha.size != num_classes:
        raise ParameterError(f"alpha has {alpha.size} entries for {num_classes} classes")
    if np.any(alpha < 0) or abs(alpha.sum() - 1.0) > 1e-12:
        raise ParameterError(f"alpha must be nonnegative and sum to 1, got {alpha}")
    return alpha


# -- forward ---------------------------------------------------------------------

def _hidden_pass(window, params, activation):
    """Run every layer but the last in full; return per-layer caches."""
    act, _ = _activation(activation)
    ps, zs = [], []
    p = window.ax
    for w in params.layers[:-1]:
        z = p @ w
        ps.append(p)
        zs.append(z)
        p = propagate(window.a_hat, act(z))
    return ps, zs, p


def forward(window: Window, params: Params, activation: str = "relu") -> np.ndarray:
    """Transformed embedding ``Y x_3 M`` with shape (N, F', T)."""
    _, _, p_last = _hidden_pass(window, params, activation)
    y = p_last @ params.layers[-1]
    if not np.all(np.isfinite(y)):
        raise NumericError("non-finite value in forward pass")
    return np.moveaxis(y, 0, 2)


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict_edge(y_hat, u, m_node, n_node, t) -> np.ndarray:
    """Class probabilities for the edge ``m -> n`` at window step ``t``.

    Source embedding row comes first in the concatenation.
    """
    y_hat = np.asarray(y_hat)
    n, _, steps = y_hat.shape
    if not (0 <= m_node < n and 0 <= n_node < n and 0 <= t < steps):
        raise IndexError(f"edge ({m_node}, {n_node}, {t}) out of range for {y_hat.shape}")
    feat = np.concatenate([y_hat[m_node, :, t], y_hat[n_node, :, t]])
    return softmax(np.asarray(u) @ feat)


def edge_probs(y_hat, u, edges: EdgeSet) -> np.ndarray:
    """Vectorised :func:`predict_edge` over an edge set, shape (E, C)."""
    y_hat = np.asarray(y_hat)
    feat = np.concatenate([y_hat[edges.src, :, edges.t], y_hat[edges.dst, :, edges.t]], axis=1)
    return softmax(feat @ np.asarray(u).T)


def weighted_cross_entropy(probs, labels, alpha, reduction: str = "sum") -> float:
    """``-sum_e alpha[y_e] log p_e[y_e]`` with probabilities clamped at 1e-12.

    ``reduction="mean"`` divides by the number of edges.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    alpha = np.asarray(alpha, dtype=np.float64)
    c = probs.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ParameterError(f"labels must lie in [0, {c})")
    picked = probs[np.arange(len(labels)), labels]
    total = float(-np.sum(alpha[labels] * np.log(np.maximum(picked, PROB_CLAMP))))
    if reduction == "mean":
        return total / max(len(labels), 1)
    if reduction != "sum":
        raise ParameterError(f"unknown reduction {reduction!r}")
    return total


# -- loss and gradients ------------------------------------------------------------

def _row_index(edges, n):
    """Distinct (t, node) rows touched by ``edges``, cached per node count.

    Returns the row coordinates, each edge's source/destination row, and a
    sparse ``rows x 2E`` matrix that sums per-edge gradients into rows.
    """
    if n not in edges._rows:
        keys = np.concatenate([edges.t * n + edges.src, edges.t * n + edges.dst])
        rows, inv = np.unique(keys, return_inverse=True)
        e = len(edges)
        scatter = sp.csr_matrix((np.ones(2 * e), (inv, np.arange(2 * e))), shape=(len(rows), 2 * e))
        edges._rows[n] = (rows // n, rows % n, inv[:e], inv[e:], scatter)
    return edges._rows[n]


def loss_and_grad(params: Params, window: Window, edges: EdgeSet, alpha,
                  activation: str = "relu", reduction: str = "mean"):
    """Loss on ``edges`` and its gradient with respect to every parameter.

    Only the embedding rows touched by an edge are formed for the last layer,
    which keeps single-layer training cheap.

    Returns
    -------
    loss : float
    grads : Params
        Same shapes as ``params``.
    """
    if len(edges) == 0:
        raise ParameterError("cannot compute a loss on an empty edge set")
    alpha = np.asarray(alpha, dtype=np.float64)
    _, act_grad = _activation(activation)
    ps, zs, p_last = _hidden_pass(window, params, activation)
    w_last = params.layers[-1]
    f_out = w_last.shape[1]
    n = window.num_nodes

    rt, rn, i_src, i_dst, scatter = _row_index(edges, n)
    p_rows = p_last[rt, rn]
    y_rows = p_rows @ w_last
    feat = np.concatenate([y_rows[i_src], y_rows[i_dst]], axis=1)
    probs = softmax(feat @ params.u.T)
    loss = weighted_cross_entropy(probs, edges.label, alpha, reduction)
    if not np.isfinite(loss):
        raise NumericError("loss is not finite")

    scale = 1.0 / len(edges) if reduction == "mean" else 1.0
    dlogits = probs.copy()
    dlogits[np.arange(len(edges)), edges.label] -= 1.0
    dlogits *= (scale * alpha[edges.label])[:, None]

    du = dlogits.T @ feat
    dfeat = dlogits @ params.u
    dy_rows = scatter @ np.concatenate([dfeat[:, :f_out], dfeat[:, f_out:]])
    grads = [None] * len(params.layers)
    grads[-1] = p_rows.T @ dy_rows

    if len(params.layers) > 1:
        dp = np.zeros_like(p_last)
        dp[rt, rn] = dy_rows @ w_last.T
        for layer in range(len(params.layers) - 2, -1, -1):
            dh = propagate(window.a_hat_t, dp)
            dz = dh * act_grad(zs[layer])
            p = ps[layer]
            grads[layer] = p.reshape(-1, p.shape[2]).T @ dz.reshape(-1, dz.shape[2])
            dp = dz @ params.layers[layer].T
    return loss, Params(grads, du)


def objective(params, window, edges, alpha, activation="relu", reduction="mean") -> float:
    """Loss through the full forward pass (used as an independent cross-check)."""
    y_hat = forward(window, params, activation)
    return weighted_cross_entropy(edge_probs(y_hat, params.u, edges), edges.label, alpha, reduction)


# -- metrics ----------------------------------------------------------------------

def predict_labels(probs) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. ties go to the lower class index
    return np.argmax(probs, axis=1)


def f1_score(pred, label, positive_class=0) -> float:
    """F1 treating ``positive_class`` as the class to detect."""
    pred = np.asarray(pred)
    label = np.asarray(label)
    tp = int(np.sum((pred == positive_class) & (label == positive_class)))
    fp = int(np.sum((pred == positive_class) & (label != positive_class)))
    fn = int(np.sum((pred != positive_class) & (label == positive_class)))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def score(pred, label, metric: str) -> float:
    if len(label) == 0:
        raise MetricError("metric undefined on an empty edge set")
    if metric == "f1_negative":
        return f1_score(pred, label, positive_class=0)
    if metric == "accuracy":
        return float(np.mean(np.asarray(pred) == np.asarray(label)))
    raise ParameterError(f"unknown metric {metric!r}")


def evaluate(y_hat, u, edges: EdgeSet, metric: str) -> float:
    """Score argmax predictions on ``edges``; class 0 is the negative class."""
    if len(edges) == 0:
        raise MetricError("metric undefined on an empty edge set")
    c = np.asarray(u).shape[0]
    if metric == "f1_negative" and c != 2:
        raise ParameterError("f1_negative needs a two-class problem")
    return score(predict_labels(edge_probs(y_hat, u, edges)), edges.label, metric)


def evaluate_params(params: Params, window: Window, edges: EdgeSet, metric: str,
                    activation: str = "relu") -> float:
    return evaluate(forward(window, params, activation), params.u, edges, metric)
