import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grabucb.errors import BudgetExceededError, InvalidParameterError
from grabucb.graph import (Graph, connected_components, dictionary_basis, generate_ba,
                           generate_rbf, laplacian, power_sum, read_edge_list, spectrum,
                           write_edge_list)

PATH3 = Graph(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float))
K3 = Graph(np.ones((3, 3)) - np.eye(3))


def naive_matmul(a, b):
    n, m, p = a.shape[0], a.shape[1], b.shape[1]
    out = np.zeros((n, p))
    for i in range(n):
        for j in range(p):
            s = 0.0
            for k in range(m):
                s += a[i, k] * b[k, j]
            out[i, j] = s
    return out


def union_find_components(W):
    n = W.shape[0]
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if W[i, j] > 0:
                parent[find(i)] = find(j)
    return len({find(i) for i in range(n)})


def check_graph_invariants(g):
    W = g.weights
    assert np.array_equal(W, W.T)
    assert np.all(np.diag(W) == 0)
    assert np.all(W >= 0)


# --- Graph type -----------------------------------------------------------

def test_graph_rejects_asymmetric():
    W = np.array([[0, 1.0], [0.5, 0]])
    with pytest.raises(InvalidParameterError):
        Graph(W)


def test_graph_rejects_self_loop_and_negative():
    with pytest.raises(InvalidParameterError):
        Graph(np.eye(2))
    with pytest.raises(InvalidParameterError):
        Graph(np.array([[0, -1.0], [-1.0, 0]]))


def test_graph_weights_read_only():
    with pytest.raises(ValueError):
        PATH3.weights[0, 1] = 5.0


# --- laplacian ------------------------------------------------------------

def test_laplacian_path():
    assert np.array_equal(laplacian(PATH3), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


def test_laplacian_edgeless():
    assert np.array_equal(laplacian(Graph(np.zeros((4, 4)))), np.zeros((4, 4)))


def test_laplacian_k3():
    assert np.array_equal(laplacian(K3), [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.floats(0.05, 1.4), st.integers(0, 2**32 - 1))
def test_laplacian_rows_sum_to_zero(n, thr, seed):
    L = laplacian(generate_rbf(n, 0.5, thr, seed))
    assert np.allclose(L.sum(axis=1), 0, atol=1e-12)
    assert np.array_equal(L, L.T)


# --- BA --------------------------------------------------------------------

def test_ba_no_growth_is_core():
    g = generate_ba(10, 10, 3, seed=1)
    deg = (g.weights > 0).sum(axis=1)
    assert np.all(deg == 2)  # ring
    assert connected_components(g) == 1


def test_ba_new_node_degree():
    g = generate_ba(11, 10, 3, seed=7)
    assert (g.weights[10] > 0).sum() == 3


def test_ba_invalid():
    with pytest.raises(InvalidParameterError):
        generate_ba(20, 5, 6, seed=0)
    with pytest.raises(InvalidParameterError):
        generate_ba(5, 10, 3, seed=0)
    with pytest.raises(InvalidParameterError):
        generate_ba(20, 5, 0, seed=0)


def test_ba_deterministic_and_connected():
    a = generate_ba(80, 10, 3, seed=42)
    b = generate_ba(80, 10, 3, seed=42)
    assert np.array_equal(a.weights, b.weights)
    assert connected_components(a) == 1
    check_graph_invariants(a)
    assert set(np.unique(a.weights)) <= {0.0, 1.0}


def test_ba_tail_heavier_for_m1():
    def disp(m):
        vals = []
        for s in range(50):
            deg = (generate_ba(200, 10, m, seed=s).weights > 0).sum(axis=1)
            vals.append(deg.std() / deg.mean())
        return np.mean(vals)
    # coefficient of variation; var/mean is not scale free and grows with m
    assert disp(1) > disp(5)


# --- RBF -------------------------------------------------------------------

def test_rbf_full_threshold_is_complete():
    g = generate_rbf(30, 0.5, math.sqrt(2), seed=3)
    off = g.weights[~np.eye(30, dtype=bool)]
    assert np.all(off > 0)


def test_rbf_tiny_threshold_is_edgeless():
    g = generate_rbf(30, 0.5, 1e-12, seed=3)
    assert g.n_edges == 0


def test_rbf_weights_match_kernel():
    rng = np.random.default_rng(5)
    g = generate_rbf(25, 0.3, 0.5, seed=rng)
    # weights are exp(-d^2 / (2 sigma)) so d^2 = -2 sigma log w must be <= thr^2
    w = g.weights[g.weights > 0]
    d2 = -2 * 0.3 * np.log(w)
    assert np.all(d2 <= 0.25 + 1e-12)


def test_rbf_edge_count_monotone_in_threshold():
    # the cutoff keeps pairs with distance <= threshold, so a larger
    # threshold is denser; 0.987 must have at least the edges of 0.95
    more = 0
    for s in range(20):
        e_lo = generate_rbf(400, 0.5, 0.95, seed=s).n_edges
        e_hi = generate_rbf(400, 0.5, 0.987, seed=s).n_edges
        assert e_hi >= e_lo
        more += e_hi > e_lo
    assert more == 20


def test_rbf_invalid():
    with pytest.raises(InvalidParameterError):
        generate_rbf(10, 0.0, 0.5, seed=0)
    with pytest.raises(InvalidParameterError):
        generate_rbf(10, 0.5, 1.5, seed=0)
    with pytest.raises(InvalidParameterError):
        generate_rbf(10, 0.5, 0.0, seed=0)


# --- spectrum --------------------------------------------------------------

def test_spectrum_zero_matrix():
    s = spectrum(np.zeros((4, 4)))
    assert np.array_equal(s.eigenvalues, np.zeros(4))
    assert np.allclose(s.eigenvectors.T @ s.eigenvectors, np.eye(4))


def test_spectrum_path_and_k3():
    assert np.allclose(spectrum(laplacian(PATH3)).eigenvalues, [0, 1, 3], atol=1e-12)
    assert np.allclose(spectrum(laplacian(K3)).eigenvalues, [0, 3, 3], atol=1e-12)
    # independent oracle: characteristic polynomial roots
    roots = np.sort(np.roots(np.poly(laplacian(PATH3))).real)
    assert np.allclose(roots, [0, 1, 3], atol=1e-8)


@pytest.mark.parametrize("seed", range(25))
def test_spectrum_invariants_and_components(seed):
    rng = np.random.default_rng(seed)
    g = generate_rbf(int(rng.integers(5, 40)), 0.5, float(rng.uniform(0.05, 0.4)), seed=rng)
    L = laplacian(g)
    s = spectrum(L)
    assert np.all(np.diff(s.eigenvalues) >= 0)
    assert np.all(s.eigenvalues >= 0)
    assert abs(s.eigenvalues[0]) <= 1e-8
    U = s.eigenvectors
    rec = (U * s.eigenvalues) @ U.T
    assert np.linalg.norm(rec - L) <= 1e-8 * max(np.linalg.norm(L), 1.0)
    n_zero = int(np.sum(s.eigenvalues <= 1e-8 * max(1.0, s.lambda_max)))
    assert n_zero == union_find_components(g.weights) == connected_components(g)


# --- power sum -------------------------------------------------------------

def test_power_sum_k1_is_n():
    g = generate_rbf(17, 0.5, 0.3, seed=0)
    assert power_sum(spectrum(laplacian(g)), 1) == 17


def test_power_sum_path_k3():
    assert power_sum(spectrum(laplacian(PATH3)), 3) == pytest.approx(17, abs=1e-10)


def test_power_sum_vs_frobenius_on_path():
    # d sums lambda^k; the squared Frobenius norm of the stacked powers sums
    # lambda^(2k).  They differ on the path: 17 versus 3 + 10 + 82 = 95.
    L = laplacian(PATH3)
    basis = dictionary_basis(L, 3)
    frob2 = sum(np.linalg.norm(p, "fro") ** 2 for p in basis.powers)
    assert frob2 == pytest.approx(95)
    assert power_sum(spectrum(L), 3) == pytest.approx(17)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 25), st.integers(0, 2**31), st.integers(1, 8))
def test_power_sum_nondecreasing_in_K(n, seed, K):
    s = spectrum(laplacian(generate_rbf(n, 0.5, 0.4, seed)))
    assert power_sum(s, K + 1) >= power_sum(s, K)


# --- dictionary basis ------------------------------------------------------

def test_basis_small_cases():
    L = laplacian(PATH3)
    b1 = dictionary_basis(L, 1)
    assert np.array_equal(b1.powers[0], np.eye(3))
    b2 = dictionary_basis(L, 2)
    assert np.array_equal(b2.powers[1], L)
    b3 = dictionary_basis(L, 3)
    assert np.allclose(b3.powers[2], naive_matmul(L, L), rtol=0, atol=0)


@pytest.mark.parametrize("seed", range(5))
def test_basis_reassociation(seed):
    L = laplacian(generate_rbf(20, 0.5, 0.4, seed=seed))
    b = dictionary_basis(L, 6)
    for k in range(1, 6):
        p = b.powers[k]
        assert np.array_equal(p, p.T)
        scale = np.linalg.norm(p)
        assert np.linalg.norm(p - b.powers[k - 1] @ L) <= 1e-10 * scale
        assert np.linalg.norm(p - L @ b.powers[k - 1]) <= 1e-10 * scale


def test_basis_memory_budget():
    with pytest.raises(BudgetExceededError):
        dictionary_basis(np.zeros((10, 10)), 5, memory_budget=100)


def test_basis_rejects_K0():
    with pytest.raises(InvalidParameterError):
        dictionary_basis(np.zeros((3, 3)), 0)


# --- edge list round trip --------------------------------------------------

@pytest.mark.parametrize("make", [lambda s: generate_rbf(40, 0.5, 0.3, s),
                                  lambda s: generate_ba(40, 5, 2, s)])
def test_edge_list_round_trip(tmp_path, make):
    g = make(11)
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n=40"
    for line in lines[1:]:
        i, j, _ = line.split()
        assert int(i) < int(j)
    g2 = read_edge_list(path)
    assert np.array_equal(laplacian(g2), laplacian(g))


def test_read_edge_list_rejects_garbage(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("n=3\n0 5 1.0\n")
    with pytest.raises(InvalidParameterError):
        read_edge_list(p)
