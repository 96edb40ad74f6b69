"""
Shrinkage operators
===================

Singular value thresholding, entrywise soft thresholding and the two
projections that appear in the optimality conditions.
"""

import numpy as np
from lrt import prox

rng = np.random.default_rng(0)

# a rank-2 matrix plus a little noise
M = rng.standard_normal((8, 2)) @ rng.standard_normal((2, 8)) + 0.05 * rng.standard_normal((8, 8))
print("singular values of M:", np.round(np.linalg.svd(M, compute_uv=False), 3))

# thresholding at mu removes the noise floor and shifts the rest down by mu
X = prox.svt(M, 0.5)
print("singular values of svt(M, 0.5):", np.round(np.linalg.svd(X, compute_uv=False), 3))
print("numerical rank:", prox.numerical_rank(X))

# entrywise shrinkage keeps only the large entries
E = prox.soft_threshold(M, 1.0)
print("nonzeros kept by soft_threshold(M, 1):", np.count_nonzero(E), "of", M.size)

# Moreau: M = svt(M, mu) + mu * projection of M/mu onto the unit spectral ball
mu = 0.5
gap = M - prox.svt(M, mu) - mu * prox.project_spectral_ball(M / mu, 1.0)
print("Moreau identity gap:", np.abs(gap).max())
