"""Dynamic graph embeddings with the tensor M-product.

Modules
-------
tensor      M-product algebra on ``(I, J, T)`` arrays
spectral    normalized adjacency, tensor eigendecomposition, spectral filters
model       transformed-domain embedding layers, edge classifier, gradients
training    momentum gradient descent and checkpoints
data        dataset parsing, temporal partitioning, sliding windows
"""
from .tensor import (
    MixingMatrix,
    banded_m,
    facewise,
    fold,
    from_shared_slice,
    frobenius,
    identity_tensor,
    m_product,
    m_transform,
    tensor_transpose,
    tube_product,
    unfold,
)

__all__ = [
    "MixingMatrix",
    "banded_m",
    "facewise",
    "fold",
    "from_shared_slice",
    "frobenius",
    "identity_tensor",
    "m_product",
    "m_transform",
    "tensor_transpose",
    "tube_product",
    "unfold",
]

__version__ = "0.1.0"
