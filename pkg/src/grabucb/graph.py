"""Weighted undirected graphs, Laplacians, spectra and Laplacian-power bases."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import BudgetExceededError, InvalidParameterError, NumericalError

# eigenvalues in (-EIG_CLAMP, 0) are treated as roundoff and set to 0
EIG_CLAMP = 1e-10
DEFAULT_MEMORY_BUDGET = 2 * 1024**3  # bytes


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Graph:
    """Undirected graph given by a symmetric, nonnegative, zero-diagonal weight matrix."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidParameterError(f"weights must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise InvalidParameterError("weights must be finite")
        if np.any(w < 0):
            raise InvalidParameterError("weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise InvalidParameterError("self-loops are not supported (nonzero diagonal)")
        if not np.array_equal(w, w.T):
            raise InvalidParameterError("weights must be symmetric")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.weights, 1)))

    def edges(self):
        """Yield ``(i, j, w)`` for every edge with ``i < j``."""
        ii, jj = np.nonzero(np.triu(self.weights, 1))
        for i, j in zip(ii, jj):
            yield int(i), int(j), float(self.weights[i, j])


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


@dataclass(frozen=True)
class DictionaryBasis:
    """Stack of Laplacian powers ``powers[k] = L**k`` for ``k = 0..K-1``."""

    powers: np.ndarray  # shape (K, n, n)
    laplacian: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.powers.shape[0]

    @property
    def n(self) -> int:
        return self.powers.shape[1]


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian ``D - W``."""
    w = g.weights
    return np.diag(w.sum(axis=1)) - w


def generate_ba(n: int, m0: int, m: int, seed=None) -> Graph:
    """Barabasi-Albert preferential attachment graph with unit weights.

    The first ``m0`` nodes form a ring (a single edge when ``m0 == 2``). Every
    later node links to ``m`` distinct existing nodes, drawn one at a time with
    probability proportional to current degree, renormalising after each draw.
    """
    if not (1 <= m <= m0 <= n):
        raise InvalidParameterError(f"need 1 <= m <= m0 <= n, got m={m}, m0={m0}, n={n}")
    rng = np.random.default_rng(seed)
    w = np.zeros((n, n))
    if m0 == 2:
        w[0, 1] = w[1, 0] = 1.0
    elif m0 > 2:
        for i in range(m0):
            j = (i + 1) % m0
            w[i, j] = w[j, i] = 1.0
    degree = w.sum(axis=1)

    for new in range(m0, n):
        p = degree[:new].copy()
        targets = []
        for _ in range(m):
            total = p.sum()
            if total > 0:
                pick = rng.choice(new, p=p / total)
            else:
                # only reachable when m0 == 1: the lone seed node has degree 0
                free = np.setdiff1d(np.arange(new), targets)
                pick = rng.choice(free)
            targets.append(int(pick))
            p[pick] = 0.0
        for t in targets:
            w[new, t] = w[t, new] = 1.0
            degree[t] += 1
        degree[new] = m
    return Graph(w)


def generate_rbf(n: int, sigma: float, threshold: float, seed=None) -> Graph:
    """Random geometric graph in the unit square with thresholded Gaussian weights.

    ``W[i, j] = exp(-dist**2 / (2 * sigma))`` when ``dist <= threshold``.
    """
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    if not (0 < threshold <= math.sqrt(2)):
        raise InvalidParameterError(f"threshold must lie in (0, sqrt(2)], got {threshold}")
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, 1.0, size=(n, 2))
    if n < 2:
        return Graph(np.zeros((n, n)))
    dist = squareform(pdist(coords))
    w = np.where(dist <= threshold, np.exp(-dist**2 / (2 * sigma)), 0.0)
    np.fill_diagonal(w, 0.0)
    return Graph(w)


def spectrum(L: np.ndarray) -> Spectrum:
    L = np.asarray(L, dtype=float)
    if not np.all(np.isfinite(L)):
        raise NumericalError("matrix has non-finite entries")
    if not np.allclose(L, L.T, rtol=0, atol=1e-12 * max(1.0, np.abs(L).max(initial=0))):
        raise InvalidParameterError("spectrum() requires a symmetric matrix")
    try:
        lam, U = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver failed: {exc}") from exc
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(U))):
        raise NumericalError("symmetric eigensolver returned non-finite values")
    lam = np.where((lam < 0) & (lam > -EIG_CLAMP), 0.0, lam)
    return Spectrum(_frozen(lam), _frozen(U))


def power_sum(s: Spectrum, K: int) -> float:
    """``sum_{k<K} sum_l lambda_l**k`` with ``0**0 == 1``."""
    if K < 1:
        raise InvalidParameterError(f"K must be >= 1, got {K}")
    lam = np.asarray(s.eigenvalues, dtype=float)
    # np.power(0.0, 0) is 1.0, which is the convention wanted here
    return float(sum(np.power(lam, k).sum() for k in range(K)))


def dictionary_basis(L: np.ndarray, K: int, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> DictionaryBasis:
    if K < 1:
        raise InvalidParameterError(f"K must be >= 1, got {K}")
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    nbytes = n * n * K * 8
    if nbytes > memory_budget:
        raise BudgetExceededError(f"basis needs {nbytes} bytes, budget is {memory_budget}")
    powers = np.empty((K, n, n))
    powers[0] = np.eye(n)
    for k in range(1, K):
        p = powers[k - 1] @ L
        powers[k] = 0.5 * (p + p.T)
    return DictionaryBasis(_frozen(powers), _frozen(L))


def connected_components(g: Graph) -> int:
    from scipy.sparse.csgraph import connected_components as cc

    return int(cc(g.weights > 0, directed=False)[0])


def write_edge_list(g: Graph, path) -> None:
    lines = [f"n={g.n}"]
    for i, j, w in g.edges():
        lines.append(f"{i} {j} {np.format_float_positional(w, unique=True, trim='-')}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> Graph:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("n="):
        raise InvalidParameterError(f"{path}: first line must be 'n=<int>'")
    n = int(text[0][2:])
    w = np.zeros((n, n))
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InvalidParameterError(f"{path}:{lineno}: expected '<i> <j> <w>'")
        i, j, val = int(parts[0]), int(parts[1]), float(parts[2])
        if not (0 <= i < j < n):
            raise InvalidParameterError(f"{path}:{lineno}: need 0 <= i < j < n")
        w[i, j] = w[j, i] = val
    return Graph(w)
