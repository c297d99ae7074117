"""Spectral view of the tensor graph convolution.

Builds normalized adjacency and Laplacian tensors, eigendecomposes them slice
by slice in the transformed space, and provides spectral filtering together
with its tubal-polynomial approximation. The degree-one polynomial filter is
the embedding layer used by :mod:`tensorgcn.model`.

Nothing here is called on the training path; it exists to check the theory
numerically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import FitError, PreconditionError, ShapeError
from .tensor import (
    MixingMatrix,
    densify,
    frobenius,
    identity_tensor,
    m_product,
    m_transform,
    tensor_transpose,
    transform_slices,
    tube_product,
)

SYMMETRY_TOL = 1e-8
BOUND_TOL = 1e-8


def normalize_adjacency(a_raw) -> sp.csr_matrix:
    """Renormalized adjacency ``D^-1/2 (A + I) D^-1/2`` with ``D_ii = 1 + sum_j A_ij``.

    Accepts a dense array or sparse matrix with nonnegative entries. Degrees
    are row sums, so a directed input gives an asymmetric result.
    """
    a = sp.csr_matrix(a_raw, dtype=np.float64)
    n, n2 = a.shape
    if n != n2:
        raise ShapeError(f"adjacency must be square, got {a.shape}")
    if a.nnz and a.data.min() < 0:
        raise PreconditionError("adjacency has negative weights")
    deg = 1.0 + np.asarray(a.sum(axis=1)).ravel()
    scale = sp.diags(1.0 / np.sqrt(deg))
    return sp.csr_matrix(scale @ (a + sp.identity(n, format="csr")) @ scale)


@dataclass
class AdjacencyTensor:
    """Adjacency tensor kept as a list of sparse frontal slices."""

    slices: list
    normalized: bool = False
    symmetrized: bool = False

    @property
    def num_nodes(self) -> int:
        return self.slices[0].shape[0]

    @property
    def num_steps(self) -> int:
        return len(self.slices)

    def dense(self) -> np.ndarray:
        return densify(self.slices)

    @classmethod
    def from_raw(cls, raw_slices, symmetrize: bool = False) -> "AdjacencyTensor":
        slices = []
        for a in raw_slices:
            a = sp.csr_matrix(a, dtype=np.float64)
            if symmetrize:
                a = 0.5 * (a + a.T)
            slices.append(normalize_adjacency(a))
        return cls(slices, normalized=True, symmetrized=symmetrize)


def laplacian(a, m: MixingMatrix) -> np.ndarray:
    """Tensor Laplacian ``I - A`` with ``I`` the M-product identity."""
    if isinstance(a, AdjacencyTensor):
        a = a.dense()
    a = np.asarray(a, dtype=np.float64)
    return identity_tensor(a.shape[0], a.shape[2], m) - a


# -- symmetric eigensolvers ----------------------------------------------------

def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a real symmetric matrix.

    Returns ``(w, v)`` with ascending eigenvalues ``w`` and orthonormal
    columns ``v``. Iterates until the off-diagonal Frobenius norm drops below
    ``tol * ||a||``.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n < 2 or scale == 0.0:
        w = np.diag(a).copy()
        order = np.argsort(w, kind="stable")
        return w[order], v[:, order]
    threshold = tol * scale
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off > threshold:
            raise FloatingPointError("Jacobi iteration did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _fix_signs(v, tol=1e-12):
    # first component with |v| > tol made positive, column by column
    v = v.copy()
    for k in range(v.shape[1]):
        nz = np.flatnonzero(np.abs(v[:, k]) > tol)
        if nz.size and v[nz[0], k] < 0:
            v[:, k] = -v[:, k]
    return v


def _eigh(a, method):
    if method == "lapack":
        return np.linalg.eigh(a)
    if method == "jacobi":
        return jacobi_eigh(a)
    raise ValueError(f"unknown eigensolver {method!r}")


@dataclass(frozen=True)
class TensorEig:
    """``x = q * d * q^T`` with ``q`` orthogonal and ``d`` f-diagonal in transformed space."""

    q: np.ndarray
    d: np.ndarray
    m: MixingMatrix
    eigvals: np.ndarray  # (N, T): diagonal of d x_3 M, ascending per slice

    @property
    def q_hat(self):
        return m_transform(self.q, self.m)

    def reconstruct(self) -> np.ndarray:
        return m_product(m_product(self.q, self.d, self.m), tensor_transpose(self.q, self.m), self.m)


def tensor_eig(x, m: MixingMatrix, method: str = "lapack") -> TensorEig:
    """Tensor eigendecomposition via per-slice symmetric eigensolves.

    Every transformed slice must be symmetric. Eigenvalues are sorted
    ascending and each eigenvector's first nonzero entry is positive, so the
    result is deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    n, n2, t = x.shape
    if n != n2:
        raise ShapeError(f"tensor_eig needs square slices, got {x.shape}")
    x_hat = m_transform(x, m)
    q_hat = np.empty_like(x_hat)
    d_hat = np.zeros_like(x_hat)
    eigvals = np.empty((n, t))
    for k in range(t):
        s = x_hat[:, :, k]
        scale = max(np.max(np.abs(s)), 1.0)
        if np.max(np.abs(s - s.T)) > SYMMETRY_TOL * scale:
            raise PreconditionError(f"transformed slice {k} is not symmetric")
        w, v = _eigh(0.5 * (s + s.T), method)
        q_hat[:, :, k] = _fix_signs(v)
        d_hat[np.arange(n), np.arange(n), k] = w
        eigvals[:, k] = w
    return TensorEig(
        q=m_transform(q_hat, m, inverse=True),
        d=m_transform(d_hat, m, inverse=True),
        m=m,
        eigvals=eigvals,
    )


# -- spectral bound ------------------------------------------------------------

@dataclass
class SpectralBoundReport:
    min_eig: float
    max_eig: float
    asserted: bool
    num_slices: int
    num_nodes: int
    note: str = ""

    @property
    def within_bound(self) -> bool:
        return self.min_eig >= -BOUND_TOL and self.max_eig <= 2.0 + BOUND_TOL

    @property
    def passed(self) -> bool:
        return self.within_bound or not self.asserted

    def __str__(self):
        status = "PASS" if self.within_bound else ("FAIL" if self.asserted else "OUTSIDE (not asserted)")
        return (f"Laplacian transformed spectrum over {self.num_slices} slices, N={self.num_nodes}: "
                f"min={self.min_eig:.3e} max={self.max_eig:.12f} [{status}]"
                + (f" {self.note}" if self.note else ""))


def spectral_bound_check(a: AdjacencyTensor, m: MixingMatrix, note: str = "") -> SpectralBoundReport:
    """Extreme eigenvalues of the transformed Laplacian slices ``I - A_hat_t``.

    The ``[0, 2]`` bound is asserted only when every adjacency slice is
    symmetric and each row of ``M`` has absolute sum at most one; otherwise the
    range is reported without a verdict.
    """
    slices = a.slices
    symmetric = all(abs(s - s.T).max() <= SYMMETRY_TOL if s.nnz else True for s in slices)
    asserted = symmetric and m.max_abs_row_sum() <= 1.0 + 1e-12
    a_hat = transform_slices(slices, m)
    lo, hi = np.inf, -np.inf
    n = a.num_nodes
    for s in a_hat:
        lap = np.eye(n) - s.toarray()
        if symmetric:
            w = np.linalg.eigvalsh(0.5 * (lap + lap.T))
        else:
            w = np.linalg.eigvals(lap).real
        lo = min(lo, float(w.min()))
        hi = max(hi, float(w.max()))
    return SpectralBoundReport(lo, hi, asserted, len(slices), n, note)


# -- Fourier transform and filtering -------------------------------------------

def graph_fourier(x, eig: TensorEig, inverse: bool = False) -> np.ndarray:
    """Tensor graph Fourier transform ``q^T * x`` (or ``q * x`` when inverse)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != eig.q.shape[0] or x.shape[2] != eig.q.shape[2]:
        raise ShapeError(f"signal {x.shape} does not match basis {eig.q.shape}")
    basis = eig.q if inverse else tensor_transpose(eig.q, eig.m)
    return m_product(basis, x, eig.m)


def _per_slice(f, t):
    if callable(f):
        return [f] * t
    f = list(f)
    if len(f) != t:
        raise ShapeError(f"need one function per slice ({t}), got {len(f)}")
    return f


def filter_diagonal(eig: TensorEig, f) -> np.ndarray:
    """``g(d)``: apply ``f`` to the transformed diagonal tubes, zero elsewhere."""
    n, t = eig.eigvals.shape
    fs = _per_slice(f, t)
    g_hat = np.zeros((n, n, t))
    idx = np.arange(n)
    for k in range(t):
        g_hat[idx, idx, k] = np.asarray(fs[k](eig.eigvals[:, k]), dtype=np.float64)
    return m_transform(g_hat, eig.m, inverse=True)


def spectral_filter(x, eig: TensorEig, f) -> np.ndarray:
    """Filter ``q * g(d) * q^T * x``.

    ``f`` is a scalar function applied to transformed eigenvalues, or a
    sequence of ``T`` such functions (one per transformed slice).
    """
    m = eig.m
    g = filter_diagonal(eig, f)
    return m_product(eig.q, m_product(g, graph_fourier(x, eig), m), m)


@dataclass(frozen=True)
class TubalPolynomial:
    """``sum_k L^{*k} * theta[k]`` with tubal coefficients ``theta[k]`` (1 x 1 x T)."""

    coeffs: tuple
    m: MixingMatrix
    error: float = float("nan")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def fit_tubal_polynomial(f, eig: TensorEig, degree: int) -> TubalPolynomial:
    """Least-squares tubal polynomial for the filter ``f`` on ``eig``'s spectrum.

    Each transformed slice ``t`` is fitted independently on its own
    eigenvalues. ``error`` on the result is ``||g(d) - sum_k d^{*k} * theta_k||``
    in the Frobenius norm.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n, t = eig.eigvals.shape
    fs = _per_slice(f, t)
    theta_hat = np.zeros((degree + 1, t))
    resid_hat = np.zeros((n, n, t))
    idx = np.arange(n)
    for k in range(t):
        lam = eig.eigvals[:, k]
        target = np.asarray(fs[k](lam), dtype=np.float64)
        vander = np.vander(lam, degree + 1, increasing=True)
        coef, _, rank, _ = np.linalg.lstsq(vander, target, rcond=None)
        distinct = np.unique(np.round(lam, 12)).size
        if rank < min(degree + 1, distinct):
            raise FitError(f"Vandermonde system for slice {k} is numerically singular "
                           f"(rank {rank} for degree {degree})")
        theta_hat[:, k] = coef
        resid_hat[idx, idx, k] = target - vander @ coef
    m = eig.m
    coeffs = tuple(m_transform(theta_hat[j][None, None, :], m, inverse=True) for j in range(degree + 1))
    error = frobenius(m_transform(resid_hat, m, inverse=True))
    return TubalPolynomial(coeffs, m, error)


def apply_polynomial_filter(x, lap, poly: TubalPolynomial) -> np.ndarray:
    """Evaluate ``(sum_k L^{*k} * theta_k) * x`` by Horner's rule, no eigensolve."""
    m = poly.m
    x = np.asarray(x, dtype=np.float64)
    acc = tube_product(x, poly.coeffs[-1], m)
    for theta in reversed(poly.coeffs[:-1]):
        acc = m_product(lap, acc, m) + tube_product(x, theta, m)
    return acc


def degree_one_filter(a, x, theta, m: MixingMatrix) -> np.ndarray:
    """``a * x * theta``: the degree-one filter with tied coefficients.

    This is exactly one embedding layer with weight tensor ``theta``.
    """
    if isinstance(a, AdjacencyTensor):
        a = a.dense()
    return m_product(m_product(a, x, m), theta, m)
