"""Executable property suites behind ``tensorgcn verify``.

Each check returns a :class:`CheckResult` holding the worst observed value
over its random trials next to the tolerance it is held to.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as spc
from .data import induced_subgraph, normalized_slices, top_degree_nodes
from .model import EdgeSet, Params, Window, init_params, loss_and_grad, objective
from .tensor import (
    MixingMatrix,
    banded_m,
    facewise,
    frobenius,
    identity_tensor,
    m_product,
    m_transform,
    tensor_transpose,
    transform_slices,
)


@dataclass
class CheckResult:
    name: str
    tolerance: float
    observed: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"[{status}] {self.name:<44s} tol={self.tolerance:.1e} observed={self.observed:.3e}{extra}"


def _rel(a, b):
    return frobenius(a - b) / max(frobenius(b), 1e-300)


def _check(name, tol, values, detail=""):
    worst = float(np.max(values)) if len(values) else 0.0
    return CheckResult(name, tol, worst, bool(worst <= tol), detail)


def random_mixing(rng, t, kind="random"):
    """Well-conditioned random mixing matrix: banded, or dense ``I + noise``."""
    if kind == "banded":
        return banded_m(t, int(rng.integers(1, t + 1)))
    return MixingMatrix(np.eye(t) + 0.3 * rng.standard_normal((t, t)) / np.sqrt(t))


def faulty(m: MixingMatrix, eps=1e-3) -> MixingMatrix:
    """Copy of ``m`` whose cached inverse is perturbed (fault injection)."""
    bad = object.__new__(MixingMatrix)
    object.__setattr__(bad, "m", m.m)
    object.__setattr__(bad, "m_inv", m.m_inv + eps)
    return bad


def algebra_suite(trials=100, seed=0, inject_fault=False):
    rng = np.random.default_rng(seed)
    errs = {k: [] for k in ("round", "assoc", "ident", "comm", "transp", "norm", "rows", "eye")}
    for k in range(trials):
        t = int(rng.integers(1, 7))
        i, j, kk, ll = rng.integers(1, 6, size=4)
        m = random_mixing(rng, t, "banded" if k % 2 else "random")
        if inject_fault:
            m = faulty(m)
        x = rng.standard_normal((i, j, t))
        y = rng.standard_normal((j, kk, t))
        z = rng.standard_normal((kk, ll, t))
        errs["round"].append(frobenius(m_transform(m_transform(x, m), m, inverse=True) - x))
        errs["assoc"].append(_rel(m_product(m_product(x, y, m), z, m), m_product(x, m_product(y, z, m), m)))
        left = m_product(identity_tensor(i, t, m), x, m)
        right = m_product(x, identity_tensor(j, t, m), m)
        errs["ident"].append(max(_rel(left, x), _rel(right, x)))
        a, b = rng.standard_normal((1, 1, t)), rng.standard_normal((1, 1, t))
        errs["comm"].append(_rel(m_product(a, b, m), m_product(b, a, m)))
        lhs = tensor_transpose(m_product(x, y, m), m)
        rhs = m_product(tensor_transpose(y, m), tensor_transpose(x, m), m)
        errs["transp"].append(_rel(lhs, rhs))
        # ||x|| <= ||M^-1||_2 ||x x_3 M||; record the violation margin
        bound = np.linalg.norm(m.m_inv, 2) * frobenius(m_transform(x, m))
        errs["norm"].append(max(frobenius(x) - bound * (1 + 1e-12), 0.0))
        b_m = banded_m(t, int(rng.integers(1, t + 1)))
        errs["rows"].append(float(np.max(np.abs(b_m.m.sum(axis=1) - 1.0))))
        eye = MixingMatrix.identity(t)
        errs["eye"].append(float(np.max(np.abs(m_product(x, y, eye) - facewise(x, y)))))
    return [
        _check("M-transform round trip (abs Frobenius)", 1e-10, errs["round"]),
        _check("M-product associativity (rel)", 1e-9, errs["assoc"]),
        _check("identity laws (rel)", 1e-9, errs["ident"]),
        _check("tubal commutativity (rel)", 1e-9, errs["comm"]),
        _check("transpose anti-homomorphism (rel)", 1e-9, errs["transp"]),
        _check("norm inequality violation", 0.0, errs["norm"]),
        _check("banded M row sums", 1e-15, errs["rows"]),
        _check("M = I product equals facewise (abs)", 1e-12, errs["eye"]),
    ]


def random_symmetric_graphs(rng, n, t, p=0.3):
    """``t`` random symmetric binary adjacency matrices on ``n`` nodes."""
    out = []
    for _ in range(t):
        upper = np.triu((rng.random((n, n)) < p).astype(float), 1)
        out.append(upper + upper.T)
    return out


def spectral_suite(trials=100, seed=0, datasets=None, max_nodes=2000):
    """Spectral properties on random graphs, plus the bound on real datasets.

    ``datasets`` maps a name to a :class:`~tensorgcn.data.DynamicGraph` and a
    training-window length; graphs above ``max_nodes`` nodes are restricted
    to the induced subgraph on their highest-degree nodes.
    """
    rng = np.random.default_rng(seed)
    recon, orth, lo, hi, basis = [], [], [], [], []
    for k in range(trials):
        n, t = int(rng.integers(2, 9)), int(rng.integers(1, 6))
        m = banded_m(t, int(rng.integers(1, t + 1)))
        adj = spc.AdjacencyTensor.from_raw(random_symmetric_graphs(rng, n, t))
        lap = spc.laplacian(adj, m)
        eig = spc.tensor_eig(lap, m)
        recon.append(_rel(eig.reconstruct(), lap) if frobenius(lap) > 0 else frobenius(eig.reconstruct()))
        qt = tensor_transpose(eig.q, m)
        ident = identity_tensor(n, t, m)
        orth.append(max(frobenius(m_product(eig.q, qt, m) - ident), frobenius(m_product(qt, eig.q, m) - ident)))
        rep = spc.spectral_bound_check(adj, m)
        lo.append(-rep.min_eig)
        hi.append(rep.max_eig - 2.0)
        v = rng.standard_normal((n, 1, t))
        coords = m_product(qt, v, m)
        total = sum(m_product(eig.q[:, j:j + 1, :], coords[j:j + 1, :, :], m) for j in range(n))
        basis.append(frobenius(total - v))
    results = [
        _check("eigendecomposition reconstruction (rel)", 1e-7, recon),
        _check("eigenvector orthogonality (abs)", 1e-8, orth),
        _check("transformed Laplacian spectrum >= 0", spc.BOUND_TOL, lo),
        _check("transformed Laplacian spectrum <= 2", spc.BOUND_TOL, hi),
        _check("eigenvector lateral slices span signals", 1e-8, basis),
    ]
    results += polynomial_checks(seed)
    for name, (g, s_train, bandwidth) in (datasets or {}).items():
        results.append(dataset_bound(name, g, s_train, bandwidth, max_nodes))
    return results


def polynomial_checks(seed=0, n=30, t=3):
    rng = np.random.default_rng(seed)
    m = banded_m(t, 2)
    adj = spc.AdjacencyTensor.from_raw(random_symmetric_graphs(rng, n, t, 0.2))
    eig = spc.tensor_eig(spc.laplacian(adj, m), m)
    errs = [spc.fit_tubal_polynomial(lambda v: np.exp(-v), eig, k).error for k in (1, 3, 5)]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    exact = max(spc.fit_tubal_polynomial(lambda v: 1 - 2 * v + 0.5 * v ** 3, eig, k).error for k in (3, 4, 5))
    return [
        CheckResult("exp(-x) fit error decreasing in K=1,3,5", 0.0, float(not decreasing), decreasing,
                    "errors " + ", ".join(f"{e:.2e}" for e in errs)),
        _check("cubic filter represented exactly (K>=3)", 1e-9, [exact]),
    ]


def dataset_bound(name, g, s_train, bandwidth=20, max_nodes=2000):
    note = ""
    if max_nodes and g.num_nodes > max_nodes:
        note = f"(induced subgraph on {max_nodes} highest-degree of {g.num_nodes} nodes)"
        g = induced_subgraph(g, top_degree_nodes(g, max_nodes))
    slices = normalized_slices(g, symmetric=True)[:s_train]
    adj = spc.AdjacencyTensor(slices, normalized=True, symmetrized=True)
    rep = spc.spectral_bound_check(adj, banded_m(s_train, bandwidth), note=note)
    margin = max(-rep.min_eig, rep.max_eig - 2.0, 0.0)
    return CheckResult(f"{name}: spectrum in [0, 2]", spc.BOUND_TOL, margin, rep.passed,
                       f"min={rep.min_eig:.3e} max={rep.max_eig:.10f} {note}".strip())


# -- gradients -------------------------------------------------------------------

def random_problem(rng, n, t, f_in, layer_sizes, c, num_edges=8, seed=0):
    m = random_mixing(rng, t, "banded")
    adj = spc.AdjacencyTensor.from_raw([(rng.random((n, n)) < 0.4).astype(float) for _ in range(t)])
    x = rng.random((n, f_in, t)) * 3
    window = Window(transform_slices(adj.slices, m), m_transform(x, m))
    edges = EdgeSet(rng.integers(0, t, num_edges), rng.integers(0, n, num_edges),
                    rng.integers(0, n, num_edges), rng.integers(0, c, num_edges))
    params = init_params(f_in, layer_sizes, c, seed)
    alpha = rng.random(c) + 0.1
    return window, edges, params, alpha / alpha.sum()


def finite_difference(params: Params, fn, h=1e-6):
    """Central differences of ``fn(params)`` for every parameter entry."""
    grads = []
    for k, arr in enumerate(params.arrays()):
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            plus, minus = params.copy(), params.copy()
            plus.arrays()[k][idx] += h
            minus.arrays()[k][idx] -= h
            g[idx] = (fn(plus) - fn(minus)) / (2 * h)
        grads.append(g)
    return grads


def gradient_rel_error(analytic, numeric):
    a = np.concatenate([g.ravel() for g in analytic])
    b = np.concatenate([g.ravel() for g in numeric])
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-300))


def gradient_suite(seeds=10, seed=0):
    rng = np.random.default_rng(seed)
    errs = []
    for s in range(seeds):
        n, t = int(rng.integers(3, 7)), int(rng.integers(1, 5))
        c = 2 + s % 2
        layers = [3] if s % 2 == 0 else [3, 3]
        window, edges, params, alpha = random_problem(rng, n, t, 2, layers, c, seed=seed + s)
        activation = "tanh" if len(layers) > 1 else "relu"
        _, grads = loss_and_grad(params, window, edges, alpha, activation)
        numeric = finite_difference(params, lambda p: objective(p, window, edges, alpha, activation))
        errs.append(gradient_rel_error(grads.arrays(), numeric))
    return [_check("analytic vs central differences (rel)", 1e-5, errs)]


SUITES = {"algebra": algebra_suite, "spectral": spectral_suite, "gradients": gradient_suite}
