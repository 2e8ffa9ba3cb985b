import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grabucb.errors import InvalidParameterError
from grabucb.graph import Graph, dictionary_basis, generate_rbf, laplacian, spectrum
from grabucb.process import (DiffusionKernel, Environment, Mask, PolynomialKernel,
                             aggregated_feature, apply_diffusion, apply_poly_kernel,
                             check_action, diffusion_poly_coefficients, diffusion_poly_fit,
                             feature_matrix, random_mask, unit_features)

PATH3 = Graph(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float))


def setup(g, K, alpha=None, mask=None, sigma_e=0.0, seed=0, tau=None):
    L = laplacian(g)
    spec = spectrum(L)
    basis = dictionary_basis(L, K)
    mask = mask if mask is not None else Mask.full(g.n)
    kernel = DiffusionKernel(tau, spec) if tau is not None else PolynomialKernel(alpha, basis)
    return Environment(g, basis, spec, kernel, mask, sigma_e, seed)


def random_instance(seed, n=12, K=4, frac=0.5):
    rng = np.random.default_rng(seed)
    g = generate_rbf(n, 0.5, 0.5, rng)
    L = laplacian(g)
    basis = dictionary_basis(L, K)
    mask = random_mask(n, frac, rng)
    h = rng.uniform(0, 1, n)
    return rng, basis, mask, h


# --- poly kernel -----------------------------------------------------------

def test_poly_identity_and_zero():
    basis = dictionary_basis(laplacian(PATH3), 3)
    h = np.array([0.2, 1.0, 0.5])
    assert np.array_equal(apply_poly_kernel(basis, [1, 0, 0], h), h)
    assert np.array_equal(apply_poly_kernel(basis, [0, 0, 0], h), np.zeros(3))
    assert np.array_equal(apply_poly_kernel(basis, [0, 1, 0], [0, 1, 0]), [-1, 2, -1])


def test_poly_dimension_mismatch():
    basis = dictionary_basis(laplacian(PATH3), 3)
    with pytest.raises(InvalidParameterError):
        apply_poly_kernel(basis, [1, 0], np.zeros(3))
    with pytest.raises(InvalidParameterError):
        apply_poly_kernel(basis, [1, 0, 0], np.zeros(4))


def test_polynomial_kernel_validation():
    basis = dictionary_basis(laplacian(PATH3), 3)
    with pytest.raises(InvalidParameterError):
        PolynomialKernel(np.array([1.0, 2.0]), basis)
    with pytest.raises(InvalidParameterError):
        PolynomialKernel(np.array([1.0, np.nan, 0]), basis)


# --- diffusion -------------------------------------------------------------

def test_diffusion_small_tau_is_identity():
    s = spectrum(laplacian(PATH3))
    h = np.array([0.0, 1.0, 0.3])
    assert np.linalg.norm(apply_diffusion(s, 1e-8, h) - h) <= 1e-6


def test_diffusion_edgeless_is_identity():
    s = spectrum(np.zeros((5, 5)))
    h = np.linspace(0, 1, 5)
    assert np.allclose(apply_diffusion(s, 7.0, h), h, atol=1e-14)


def test_diffusion_matches_taylor_oracle():
    L = laplacian(PATH3)
    h = np.array([0.0, 1.0, 0.0])
    acc, term = np.zeros(3), h.copy()
    for k in range(31):
        acc += term
        term = -L @ term / (k + 1)
    assert np.allclose(apply_diffusion(spectrum(L), 1.0, h), acc, atol=1e-8)


def test_diffusion_mirror_symmetry():
    s = spectrum(laplacian(PATH3))
    P = np.eye(3)[::-1]
    h = np.array([1.0, 0.2, 0.0])
    assert np.allclose(P @ apply_diffusion(s, 2.0, h), apply_diffusion(s, 2.0, P @ h), atol=1e-12)


def test_diffusion_kernel_rejects_nonpositive_tau():
    with pytest.raises(InvalidParameterError):
        DiffusionKernel(0.0, spectrum(laplacian(PATH3)))


# --- Taylor coefficients and fit --------------------------------------------

def test_diffusion_poly_coefficients():
    assert np.array_equal(diffusion_poly_coefficients(2.0, 1), [1.0])
    assert np.allclose(diffusion_poly_coefficients(1.0, 3), [1, -1, 0.5])
    with pytest.raises(InvalidParameterError):
        diffusion_poly_coefficients(1.0, 0)


def test_taylor_truncation_matches_diffusion():
    # 10-node RBF graph with lambda_max < 3
    for seed in range(200):
        g = generate_rbf(10, 0.5, 0.3, seed)
        s = spectrum(laplacian(g))
        if s.lambda_max < 3:
            break
    assert s.lambda_max < 3
    basis = dictionary_basis(laplacian(g), 20)
    alpha = diffusion_poly_coefficients(0.5, 20)
    rng = np.random.default_rng(0)
    for _ in range(5):
        h = rng.uniform(0, 1, 10)
        ref = apply_diffusion(s, 0.5, h)
        assert np.linalg.norm(apply_poly_kernel(basis, alpha, h) - ref) <= 1e-6 * np.linalg.norm(ref)


def test_poly_fit_interpolates_when_K_covers_spectrum():
    # the path has 3 distinct eigenvalues, so degree 2 interpolates exp(-tau x)
    L = laplacian(PATH3)
    s = spectrum(L)
    a = diffusion_poly_fit(s, 5.0, 3)
    basis = dictionary_basis(L, 3)
    assert np.allclose(np.tensordot(a, basis.powers, axes=1), DiffusionKernel(5.0, s).matrix(), atol=1e-10)


# --- masks -----------------------------------------------------------------

def test_random_mask_counts():
    assert random_mask(100, 0.2, 1).Q == 20
    assert random_mask(200, 0.4, 1).Q == 80
    full = random_mask(37, 1.0, 1)
    assert full.Q == 37 and full.bits.all()


def test_random_mask_deterministic():
    assert np.array_equal(random_mask(50, 0.3, 9).bits, random_mask(50, 0.3, 9).bits)


@pytest.mark.parametrize("frac", [0.0, -0.1, 1.5, 0.001])
def test_random_mask_invalid(frac):
    with pytest.raises(InvalidParameterError):
        random_mask(100, frac, 0)


def test_mask_must_be_nonempty():
    with pytest.raises(InvalidParameterError):
        Mask(np.zeros(4, dtype=bool))


# --- actions ---------------------------------------------------------------

def test_check_action():
    with pytest.raises(InvalidParameterError):
        check_action([0.5, 1.2], 2)
    with pytest.raises(InvalidParameterError):
        check_action([1, 1, 1], 3, T0=2)
    with pytest.raises(InvalidParameterError):
        check_action([1, 1], 3)


# --- observe / mean reward ---------------------------------------------------

def test_observe_noiseless_identity_kernel():
    mask = Mask(np.array([True, False, True]))
    env = setup(PATH3, 3, alpha=[1, 0, 0], mask=mask)
    h = np.array([0.3, 1.0, 0.0])
    obs = env.observe(h)
    assert np.array_equal(obs.y, h)
    assert np.array_equal(obs.w, mask.diag * h)
    assert obs.mean_reward == pytest.approx(0.3)


def test_mean_reward_examples():
    env = setup(PATH3, 3, alpha=[1, 0, 0])
    assert env.mean_reward(np.array([1.0, 0.0, 1.0])) == 2.0
    assert env.mean_reward(np.zeros(3)) == 0.0
    env = setup(PATH3, 3, alpha=[0, 1, 0], mask=Mask(np.array([True, False, False])))
    assert env.mean_reward(np.array([0.0, 1.0, 0.0])) == -1.0


def test_node_rewards_give_mean_reward():
    rng, basis, mask, h = random_instance(3)
    g = generate_rbf(12, 0.5, 0.5, 3)
    env = setup(g, 4, tau=2.0, mask=mask)
    assert env.node_rewards @ h == pytest.approx(env.mean_reward(h), abs=1e-12)


def test_pure_noise_variance():
    env = setup(generate_rbf(20, 0.5, 0.3, 1), 2, alpha=[1, 0], sigma_e=0.3, seed=5)
    ys = np.concatenate([env.observe(np.zeros(20)).y for _ in range(500)])
    assert ys.size == 10_000
    assert abs(ys.var() / 0.09 - 1) <= 0.05


def test_observe_deterministic():
    g = generate_rbf(15, 0.5, 0.4, 2)
    a = setup(g, 3, tau=1.0, sigma_e=0.1, seed=77)
    b = setup(g, 3, tau=1.0, sigma_e=0.1, seed=77)
    h = np.zeros(15)
    h[[1, 4]] = 1
    for _ in range(5):
        oa, ob = a.observe(h), b.observe(h)
        assert np.array_equal(oa.y, ob.y) and np.array_equal(oa.w, ob.w)


def test_environment_validation():
    g = generate_rbf(5, 0.5, 0.4, 0)
    with pytest.raises(InvalidParameterError):
        setup(g, 2, alpha=[1, 0], sigma_e=-1.0)
    with pytest.raises(InvalidParameterError):
        setup(g, 2, alpha=[1, 0], mask=Mask.full(6))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1), st.floats(0, 1))
def test_mean_reward_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    g = generate_rbf(10, 0.5, 0.5, rng)
    env = setup(g, 3, tau=float(rng.uniform(0.1, 5)), mask=random_mask(10, 0.5, rng))
    h1, h2 = rng.uniform(0, 1, 10), rng.uniform(0, 1, 10)
    s = a + b
    if s > 1:
        a, b = a / s, b / s
    lhs = env.observe(a * h1 + b * h2).mean_reward
    rhs = a * env.mean_reward(h1) + b * env.mean_reward(h2)
    assert lhs == pytest.approx(rhs, abs=1e-10)


# --- features --------------------------------------------------------------

def test_feature_matrix_k1_full_mask():
    basis = dictionary_basis(laplacian(PATH3), 1)
    h = np.array([0.1, 0.7, 1.0])
    Z = feature_matrix(basis, Mask.full(3), h)
    assert Z.shape == (3, 1)
    assert np.array_equal(Z[:, 0], h)


@pytest.mark.parametrize("seed", range(10))
def test_feature_matrix_linearity_and_mask(seed):
    rng, basis, mask, h = random_instance(seed)
    Z = feature_matrix(basis, mask, h)
    assert np.all(Z[~mask.bits] == 0)
    for _ in range(20):
        alpha = rng.normal(size=basis.K)
        assert np.allclose(Z @ alpha, mask.diag * apply_poly_kernel(basis, alpha, h), atol=1e-10)
        lhs = mask.diag @ apply_poly_kernel(basis, alpha, h)
        assert aggregated_feature(Z) @ alpha == pytest.approx(lhs, abs=1e-10 * max(1, abs(lhs)))


def test_aggregated_feature_examples():
    assert np.array_equal(aggregated_feature(np.zeros((4, 3))), np.zeros(3))
    assert np.array_equal(aggregated_feature(np.array([[1.0, 2.0, 3.0]])), [1, 2, 3])
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(5, 3))
    for _ in range(10):
        a = rng.normal(size=3)
        assert abs(aggregated_feature(Z) @ a - np.sum(Z @ a)) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_unit_features_rows(seed):
    rng, basis, mask, _ = random_instance(seed)
    A = unit_features(basis, mask)
    for n in range(basis.n):
        e = np.zeros(basis.n)
        e[n] = 1
        assert np.allclose(A[n], aggregated_feature(feature_matrix(basis, mask, e)), atol=1e-10)
