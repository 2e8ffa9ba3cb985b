"""
Graphs, Laplacians and the polynomial dictionary
================================================

Two random graph families drive every experiment: thresholded Gaussian
kernels on points in the unit square, and Barabasi-Albert growth.
"""

# %%
import numpy as np

from grabucb.graph import (connected_components, dictionary_basis, generate_ba, generate_rbf,
                           laplacian, power_sum, spectrum)

# %% [markdown]
# An RBF graph keeps an edge when two points are at most `threshold` apart.
# Raising the threshold adds edges, and the spectrum spreads out with it.

# %%
for thr in (0.1, 0.15, 0.3):
    g = generate_rbf(100, sigma=0.5, threshold=thr, seed=0)
    s = spectrum(laplacian(g))
    print(f"threshold {thr:4}: {g.n_edges:5d} edges, {connected_components(g):2d} components, "
          f"lambda_max {s.lambda_max:6.2f}")

# %% [markdown]
# BA graphs grow from a ring of m0 nodes.  Small m gives a tree-like graph
# with a few hubs.

# %%
for m in (1, 3, 5):
    deg = (generate_ba(200, 10, m, seed=1).weights > 0).sum(axis=1)
    print(f"m={m}: mean degree {deg.mean():5.2f}, max {deg.max():3d}, cv {deg.std() / deg.mean():.2f}")

# %% [markdown]
# The dictionary stacks L^0 ... L^{K-1}.  The power sum d bounds the
# growth of the learner's design matrix.

# %%
g = generate_rbf(50, 0.5, 0.2, seed=3)
L = laplacian(g)
basis = dictionary_basis(L, 4)
s = spectrum(L)
print("basis shape", basis.powers.shape)
print("d for K=1..6:", [round(power_sum(s, K), 1) for K in range(1, 7)])
