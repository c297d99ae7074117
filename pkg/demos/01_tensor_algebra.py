"""
The M-product in five minutes
=============================

A third-order tensor here is a plain numpy array of shape (I, J, T). The
M-product multiplies two of them by moving into a "transformed" space with
an invertible T x T matrix M, multiplying matching frontal slices, and moving
back with M^-1.
"""
import numpy as np

from tensorgcn import (
    banded_m,
    frobenius,
    identity_tensor,
    m_product,
    m_transform,
    tensor_transpose,
    unfold,
)

rng = np.random.default_rng(0)

# The banded M averages the last b slices; b=2, T=3 gives rows
# [1, 0, 0], [1/2, 1/2, 0], [0, 1/2, 1/2]
m = banded_m(3, 2)
print(m.m)

# mixing a single tube (1, 2, 3) through M
tube = np.array([1.0, 2.0, 3.0]).reshape(1, 1, 3)
print("transformed tube:", m_transform(tube, m).ravel())

# unfold puts every tube in a column; a 4x4x5 tensor becomes 5 x 16
print("unfold shape:", unfold(np.zeros((4, 4, 5))).shape)

x = rng.standard_normal((2, 3, 3))
y = rng.standard_normal((3, 4, 3))
z = rng.standard_normal((4, 2, 3))

# associativity and the identity tensor
lhs = m_product(m_product(x, y, m), z, m)
rhs = m_product(x, m_product(y, z, m), m)
print("associativity error:", frobenius(lhs - rhs))
print("identity error:", frobenius(m_product(identity_tensor(2, 3, m), x, m) - x))

# transpose reverses products, as for matrices
err = frobenius(tensor_transpose(m_product(x, y, m), m)
                - m_product(tensor_transpose(y, m), tensor_transpose(x, m), m))
print("transpose error:", err)

# With M = I the product is just slice-by-slice matmul
from tensorgcn import MixingMatrix, facewise
eye = MixingMatrix.identity(3)
print("M = I matches facewise:", np.allclose(m_product(x, y, eye), facewise(x, y)))
