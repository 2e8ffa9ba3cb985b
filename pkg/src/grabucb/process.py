"""Ground-truth network processes, masks, observations and learner features.

An action ``h`` is a plain float array of length ``n`` with entries in [0, 1].
The resultant signal is ``y = g_L(h) + eps`` and the learner sees the masked
signal ``w = M y``.  The scalar mean reward of an action is the noiseless
resultant signal summed over masked-in nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .graph import DictionaryBasis, Graph, Spectrum


def check_action(h, n: int, T0: int | None = None) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (n,):
        raise InvalidParameterError(f"action must have shape ({n},), got {h.shape}")
    if np.any(h < 0) or np.any(h > 1):
        raise InvalidParameterError("action entries must lie in [0, 1]")
    if T0 is not None and np.count_nonzero(h) > T0:
        raise InvalidParameterError(f"action support {np.count_nonzero(h)} exceeds budget {T0}")
    return h


def support(h) -> tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(h))


def binary_action(n: int, idx) -> np.ndarray:
    h = np.zeros(n)
    h[list(idx)] = 1.0
    return h


@dataclass(frozen=True)
class Mask:
    bits: np.ndarray

    def __post_init__(self):
        b = np.array(self.bits, dtype=bool)
        if b.ndim != 1:
            raise InvalidParameterError("mask bits must be a 1-d array")
        if not b.any():
            raise InvalidParameterError("mask must select at least one node")
        b.flags.writeable = False
        object.__setattr__(self, "bits", b)

    @property
    def Q(self) -> int:
        return int(self.bits.sum())

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @property
    def diag(self) -> np.ndarray:
        return self.bits.astype(float)

    @classmethod
    def full(cls, n: int) -> "Mask":
        return cls(np.ones(n, dtype=bool))


def random_mask(n: int, fraction: float, seed=None) -> Mask:
    if not (0 < fraction <= 1):
        raise InvalidParameterError(f"mask fraction must lie in (0, 1], got {fraction}")
    q = int(math.floor(fraction * n + 0.5))
    if q < 1:
        raise InvalidParameterError(f"mask fraction {fraction} selects no node out of {n}")
    rng = np.random.default_rng(seed)
    bits = np.zeros(n, dtype=bool)
    bits[rng.choice(n, size=q, replace=False)] = True
    return Mask(bits)


def apply_poly_kernel(basis: DictionaryBasis, alpha, h) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    h = np.asarray(h, dtype=float)
    if alpha.shape != (basis.K,) or h.shape != (basis.n,):
        raise InvalidParameterError(
            f"dimension mismatch: alpha {alpha.shape}, h {h.shape}, basis K={basis.K} n={basis.n}"
        )
    return alpha @ (basis.powers @ h)


def apply_diffusion(spec: Spectrum, tau: float, h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (spec.n,):
        raise InvalidParameterError(f"dimension mismatch: h {h.shape}, n={spec.n}")
    U = spec.eigenvectors
    return U @ (np.exp(-tau * spec.eigenvalues) * (U.T @ h))


def diffusion_poly_coefficients(tau: float, K: int) -> np.ndarray:
    """Degree ``K-1`` Taylor truncation of ``exp(-tau * L)``."""
    if K < 1:
        raise InvalidParameterError(f"K must be >= 1, got {K}")
    return np.array([(-tau) ** k / math.factorial(k) for k in range(K)])


def diffusion_poly_fit(spec: Spectrum, tau: float, K: int) -> np.ndarray:
    """Coefficients of the degree ``K-1`` polynomial closest to ``exp(-tau x)``
    in least squares over the Laplacian eigenvalues.

    ``sum_k alpha_k L^k`` is then the best polynomial approximation of
    ``exp(-tau L)`` in Frobenius norm among the basis span.
    """
    if K < 1:
        raise InvalidParameterError(f"K must be >= 1, got {K}")
    lam = np.asarray(spec.eigenvalues, dtype=float)
    vander = np.vander(lam, K, increasing=True)
    return np.linalg.lstsq(vander, np.exp(-tau * lam), rcond=None)[0]


def feature_matrix(basis: DictionaryBasis, mask: Mask, h) -> np.ndarray:
    """n x K matrix whose column k is ``M L^k h``."""
    h = np.asarray(h, dtype=float)
    if h.shape != (basis.n,) or mask.n != basis.n:
        raise InvalidParameterError("dimension mismatch between basis, mask and action")
    return (basis.powers @ h).T * mask.diag[:, None]


def aggregated_feature(Z: np.ndarray) -> np.ndarray:
    return np.asarray(Z, dtype=float).sum(axis=0)


def unit_features(basis: DictionaryBasis, mask: Mask) -> np.ndarray:
    """Row n is the aggregated feature of the unit action ``e_n`` (N x K).

    Uses the symmetry of ``L^k``: ``1' M L^k e_n = (L^k m)_n``.
    """
    return (basis.powers @ mask.diag).T


@dataclass(frozen=True)
class PolynomialKernel:
    alpha: np.ndarray
    basis: DictionaryBasis = field(repr=False)

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        if a.shape != (self.basis.K,):
            raise InvalidParameterError(f"alpha has length {a.size}, basis has K={self.basis.K}")
        if not np.all(np.isfinite(a)):
            raise InvalidParameterError("alpha must be finite")
        a.flags.writeable = False
        object.__setattr__(self, "alpha", a)

    def apply(self, h) -> np.ndarray:
        return apply_poly_kernel(self.basis, self.alpha, h)

    def matrix(self) -> np.ndarray:
        return np.tensordot(self.alpha, self.basis.powers, axes=1)


@dataclass(frozen=True)
class DiffusionKernel:
    tau: float
    spectrum: Spectrum = field(repr=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParameterError(f"diffusion time must be positive, got {self.tau}")

    def apply(self, h) -> np.ndarray:
        return apply_diffusion(self.spectrum, self.tau, h)

    def matrix(self) -> np.ndarray:
        U = self.spectrum.eigenvectors
        return (U * np.exp(-self.tau * self.spectrum.eigenvalues)) @ U.T


@dataclass(frozen=True)
class Observation:
    h: np.ndarray
    y: np.ndarray
    w: np.ndarray
    mean_reward: float

    @property
    def realized_reward(self) -> float:
        return float(self.w.sum())


class Environment:
    """Ground-truth process plus the noise stream used to observe it."""

    def __init__(self, graph: Graph, basis: DictionaryBasis, spec: Spectrum, kernel,
                 mask: Mask, sigma_e: float, rng=None):
        if sigma_e < 0:
            raise InvalidParameterError(f"sigma_e must be >= 0, got {sigma_e}")
        if not (graph.n == basis.n == spec.n == mask.n):
            raise InvalidParameterError("graph, basis, spectrum and mask disagree on n")
        self.graph = graph
        self.basis = basis
        self.spectrum = spec
        self.kernel = kernel
        self.mask = mask
        self.sigma_e = float(sigma_e)
        self.rng = np.random.default_rng(rng)
        # per-node contribution to the mean reward; mean_reward is linear in h
        self.node_rewards = kernel.matrix() @ mask.diag

    @property
    def n(self) -> int:
        return self.graph.n

    def signal(self, h) -> np.ndarray:
        return self.kernel.apply(h)

    def mean_reward(self, h) -> float:
        h = check_action(h, self.n)
        return float(self.mask.diag @ self.kernel.apply(h))

    def observe(self, h) -> Observation:
        h = check_action(h, self.n)
        clean = self.kernel.apply(h)
        eps = self.sigma_e * self.rng.standard_normal(self.n)
        y = clean + eps
        w = self.mask.diag * y
        return Observation(h=h, y=y, w=w, mean_reward=float(self.mask.diag @ clean))
