"""
Spectral filters on a dynamic graph
===================================

For a tensor of symmetric adjacency slices the Laplacian L = I - A has an
eigendecomposition L = Q * D * Q^T in M-product arithmetic. Filters act on
the eigenvalues, and polynomials in L approximate them without ever
computing Q.
"""
import numpy as np

from tensorgcn import spectral as spc
from tensorgcn.tensor import banded_m, frobenius, from_shared_slice, m_transform
from tensorgcn.verify import random_symmetric_graphs

rng = np.random.default_rng(1)
n, t = 30, 3
m = banded_m(t, 2)

# three random undirected snapshots, normalized as D^-1/2 (A + I) D^-1/2
adj = spc.AdjacencyTensor.from_raw(random_symmetric_graphs(rng, n, t, p=0.2))
lap = spc.laplacian(adj, m)

eig = spc.tensor_eig(lap, m)
print("reconstruction error:", frobenius(eig.reconstruct() - lap) / frobenius(lap))

# the transformed spectrum lies in [0, 2] for banded M
report = spc.spectral_bound_check(adj, m)
print(report)

# graph Fourier transform and its inverse
x = rng.standard_normal((n, 2, t))
x_freq = spc.graph_fourier(x, eig)
print("round trip:", frobenius(spc.graph_fourier(x_freq, eig, inverse=True) - x))

# heat kernel exp(-lambda), exact and by tubal polynomials of growing degree
exact = spc.spectral_filter(x, eig, lambda v: np.exp(-v))
for k in (1, 3, 5):
    poly = spc.fit_tubal_polynomial(lambda v: np.exp(-v), eig, k)
    approx = spc.apply_polynomial_filter(x, lap, poly)
    print(f"K={k}: fit error {poly.error:.2e}, filter error {frobenius(approx - exact):.2e}")

# degree one with tied coefficients is A * X * Theta, the model's layer
w_hat = rng.standard_normal((2, 6))
y = spc.degree_one_filter(adj, x, from_shared_slice(w_hat, t, m), m)
print("layer output (transformed) shape:", m_transform(y, m).shape)
