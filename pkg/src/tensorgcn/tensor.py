"""M-product tensor algebra for dense third-order arrays.

A tensor is a plain :class:`numpy.ndarray` of shape ``(I, J, T)``; the last
axis indexes time (frontal slices ``x[:, :, t]``, tubes ``x[i, j, :]``).
The product is parametrised by an invertible ``T x T`` mixing matrix wrapped
in :class:`MixingMatrix`, which carries its inverse so every transform round
trip uses the same cached factor.

Adjacency tensors are too large to hold densely for the real datasets, so a
few helpers accept a list of ``scipy.sparse`` frontal slices instead.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ParameterError, ShapeError

INVERSE_TOL = 1e-10


def _as_tensor(x, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"{name} must be a third-order tensor, got ndim={x.ndim}")
    return x


@dataclass(frozen=True)
class MixingMatrix:
    """Invertible ``T x T`` matrix defining the M-product.

    The inverse is computed once at construction: forward substitution when
    ``m`` is lower triangular, LU otherwise.
    """

    m: np.ndarray
    m_inv: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        m = np.array(self.m, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ShapeError(f"mixing matrix must be square and non-empty, got {m.shape}")
        eye = np.eye(m.shape[0])
        if self.m_inv is None:
            if np.array_equal(m, np.tril(m)):
                if np.any(np.diag(m) == 0):
                    raise ParameterError("mixing matrix is singular")
                m_inv = scipy.linalg.solve_triangular(m, eye, lower=True)
            else:
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                        lu = scipy.linalg.lu_factor(m, check_finite=True)
                except (ValueError, scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
                    raise ParameterError(f"mixing matrix is not invertible: {exc}") from exc
                m_inv = scipy.linalg.lu_solve(lu, eye)
        else:
            m_inv = np.array(self.m_inv, dtype=np.float64)
        if not np.all(np.isfinite(m_inv)) or np.max(np.abs(m @ m_inv - eye)) > INVERSE_TOL:
            raise ParameterError("mixing matrix is singular or badly conditioned")
        m.setflags(write=False)
        m_inv.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "m_inv", m_inv)

    @property
    def size(self) -> int:
        return self.m.shape[0]

    @classmethod
    def identity(cls, t: int) -> "MixingMatrix":
        return cls(np.eye(t), np.eye(t))

    def is_lower_triangular(self) -> bool:
        return bool(np.array_equal(self.m, np.tril(self.m)))

    def max_abs_row_sum(self) -> float:
        return float(np.max(np.sum(np.abs(self.m), axis=1)))


def banded_m(t: int, b: int) -> MixingMatrix:
    """Lower-triangular banded averaging matrix of bandwidth ``b``.

    Row ``t`` (1-based) averages slices ``max(1, t-b+1) .. t`` with equal
    weights ``1/min(b, t)``, so every row sums to one and ``b = 1`` gives the
    identity.
    """
    if b < 1:
        raise ParameterError(f"bandwidth must be >= 1, got {b}")
    if t < 1:
        raise ParameterError(f"number of slices must be >= 1, got {t}")
    m = np.zeros((t, t))
    for row in range(1, t + 1):
        lo = max(1, row - b + 1)
        m[row - 1, lo - 1:row] = 1.0 / min(b, row)
    return MixingMatrix(m)


def unfold(x) -> np.ndarray:
    """Stack the tubes of ``x`` as columns of a ``T x (I*J)`` matrix.

    Column ``j * I + i`` holds the tube ``x[i, j, :]``.
    """
    x = _as_tensor(x)
    i, j, t = x.shape
    return x.transpose(2, 1, 0).reshape(t, j * i)


def fold(mat, dims) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    mat = np.asarray(mat, dtype=np.float64)
    i, j, t = dims
    if mat.shape != (t, i * j):
        raise ShapeError(f"cannot fold matrix of shape {mat.shape} into {tuple(dims)}")
    return np.ascontiguousarray(mat.reshape(t, j, i).transpose(2, 1, 0))


def m_transform(x, m: MixingMatrix, inverse: bool = False) -> np.ndarray:
    """Mode-3 product ``x x_3 M`` (or ``x x_3 M^-1`` with ``inverse=True``)."""
    x = _as_tensor(x)
    if x.shape[2] != m.size:
        raise ShapeError(f"tensor has {x.shape[2]} slices but M is {m.size}x{m.size}")
    mat = m.m_inv if inverse else m.m
    return np.einsum("tk,ijk->ijt", mat, x)


def facewise(x, y) -> np.ndarray:
    """Slice-by-slice matrix product: ``out[:, :, t] = x[:, :, t] @ y[:, :, t]``."""
    x = _as_tensor(x)
    y = _as_tensor(y, "y")
    if x.shape[2] != y.shape[2]:
        raise ShapeError(f"slice counts differ: {x.shape[2]} vs {y.shape[2]}")
    if x.shape[1] != y.shape[0]:
        raise ShapeError(f"inner dimensions differ: {x.shape} vs {y.shape}")
    return np.einsum("ijt,jkt->ikt", x, y)


def m_product(x, y, m: MixingMatrix) -> np.ndarray:
    """M-product ``x * y = ((x x_3 M) facewise (y x_3 M)) x_3 M^-1``."""
    return m_transform(facewise(m_transform(x, m), m_transform(y, m)), m, inverse=True)


def identity_tensor(n: int, t: int, m: MixingMatrix) -> np.ndarray:
    """Identity of the M-product: all transformed slices equal ``I_n``."""
    if n < 1 or t < 1:
        raise ParameterError("identity tensor needs n, t >= 1")
    eye_hat = np.repeat(np.eye(n)[:, :, None], t, axis=2)
    return m_transform(eye_hat, m, inverse=True)


def tensor_transpose(x, m: MixingMatrix) -> np.ndarray:
    x_hat = m_transform(x, m)
    return m_transform(x_hat.transpose(1, 0, 2), m, inverse=True)


def frobenius(x) -> float:
    return float(np.sqrt(np.sum(np.square(np.asarray(x, dtype=np.float64)))))


def tube_product(x, theta, m: MixingMatrix) -> np.ndarray:
    """Multiply every tube of ``x`` by the tubal scalar ``theta`` (1 x 1 x T)."""
    theta = _as_tensor(theta, "theta")
    if theta.shape[:2] != (1, 1):
        raise ShapeError(f"theta must be 1x1xT, got {theta.shape}")
    x_hat = m_transform(x, m)
    theta_hat = m_transform(theta, m)
    return m_transform(x_hat * theta_hat, m, inverse=True)


def from_shared_slice(w_hat, t: int, m: MixingMatrix) -> np.ndarray:
    """Materialise the tensor whose transformed slices all equal ``w_hat``."""
    w_hat = np.asarray(w_hat, dtype=np.float64)
    return m_transform(np.repeat(w_hat[:, :, None], t, axis=2), m, inverse=True)


# -- sparse frontal slices ---------------------------------------------------

def transform_slices(slices: Sequence[sp.spmatrix], m: MixingMatrix,
                     inverse: bool = False) -> list[sp.csr_matrix]:
    """M-transform a tensor stored as a list of sparse frontal slices."""
    if len(slices) != m.size:
        raise ShapeError(f"got {len(slices)} slices but M is {m.size}x{m.size}")
    mat = m.m_inv if inverse else m.m
    out = []
    for t in range(m.size):
        acc = None
        for k in np.flatnonzero(mat[t]):
            term = slices[k] * mat[t, k]
            acc = term if acc is None else acc + term
        if acc is None:
            acc = sp.csr_matrix(slices[0].shape)
        out.append(sp.csr_matrix(acc))
    return out


def facewise_sparse(slices: Sequence[sp.spmatrix], y) -> np.ndarray:
    """Facewise product of sparse frontal slices with a dense tensor."""
    y = _as_tensor(y, "y")
    if len(slices) != y.shape[2]:
        raise ShapeError(f"slice counts differ: {len(slices)} vs {y.shape[2]}")
    out = np.empty((slices[0].shape[0], y.shape[1], y.shape[2]))
    for t, a in enumerate(slices):
        if a.shape[1] != y.shape[0]:
            raise ShapeError(f"inner dimensions differ: {a.shape} vs {y.shape}")
        out[:, :, t] = a @ y[:, :, t]
    return out


def densify(slices: Sequence[sp.spmatrix]) -> np.ndarray:
    """Stack sparse frontal slices into a dense ``N x N x T`` tensor."""
    return np.stack([s.toarray() for s in slices], axis=2)
