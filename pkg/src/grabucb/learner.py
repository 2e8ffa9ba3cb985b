"""Online ridge estimation of the kernel coefficients and its confidence bounds.

The design matrix ``V_t = mu I + sum Z'Z`` is accumulated explicitly, but the
solves go through an upper-triangular square-root factor ``R`` (``V = R'R``)
updated by QR.  Columns of ``Z`` scale like powers of the Laplacian
eigenvalues, so ``V`` itself is often too badly conditioned for a Cholesky
factorisation while ``R`` only carries the square root of that conditioning.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidParameterError, NumericalError

CONFIDENCE_MODES = ("exact-logdet", "lemma-bound")


@dataclass(frozen=True)
class HyperParams:
    mu: float
    delta: float
    R: float
    S: float
    K: int
    T0: int
    Q: int
    d: float

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidParameterError(f"mu must be > 0, got {self.mu}")
        if not 0 < self.delta < 1:
            raise InvalidParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.R >= 0:
            raise InvalidParameterError(f"R must be >= 0, got {self.R}")
        if not self.S > 0:
            raise InvalidParameterError(f"S must be > 0, got {self.S}")
        for name in ("K", "T0", "Q"):
            if getattr(self, name) < 1:
                raise InvalidParameterError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.d >= 1:
            raise InvalidParameterError(f"d must be >= 1, got {self.d}")


class LearnerState:
    """Regularised least-squares state: ``V``, ``bvec``, ``t`` and ``alpha_hat``."""

    def __init__(self, K: int, mu: float):
        if K < 1 or not mu > 0:
            raise InvalidParameterError(f"need K >= 1 and mu > 0, got K={K}, mu={mu}")
        self.K = K
        self.mu = float(mu)
        self.V = self.mu * np.eye(K)
        self.bvec = np.zeros(K)
        self.t = 0
        self.alpha_hat = np.zeros(K)
        self._R = math.sqrt(self.mu) * np.eye(K)
        self._c = np.zeros(K)

    @classmethod
    def initial(cls, hyper: HyperParams) -> "LearnerState":
        return cls(hyper.K, hyper.mu)

    @property
    def factor(self) -> np.ndarray:
        """Upper-triangular ``R`` with ``R' R == V``."""
        return self._R

    def ingest(self, Z, w) -> "LearnerState":
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        w = np.asarray(w, dtype=float).reshape(-1)
        if Z.shape[1] != self.K or Z.shape[0] != w.shape[0]:
            raise InvalidParameterError(f"Z {Z.shape} and w {w.shape} do not match K={self.K}")
        self.V = self.V + Z.T @ Z
        self.bvec = self.bvec + Z.T @ w
        self.t += 1

        aug = np.block([[self._R, self._c[:, None]], [Z, w[:, None]]])
        r = np.linalg.qr(aug, mode="r")
        R = r[: self.K, : self.K]
        c = r[: self.K, self.K]
        # fix signs so diag(R) > 0
        s = np.where(np.diag(R) < 0, -1.0, 1.0)
        R = s[:, None] * R
        c = s * c
        diag = np.diag(R)
        if not (np.all(np.isfinite(R)) and np.all(diag > 0)):
            raise NumericalError("square-root factor of V lost positive definiteness")
        self._R, self._c = R, c
        self.alpha_hat = solve_triangular(R, c, lower=False)
        if not np.all(np.isfinite(self.alpha_hat)):
            raise NumericalError("ridge solve produced non-finite coefficients")
        return self

    def logdet(self) -> float:
        return float(2.0 * np.log(np.diag(self._R)).sum())

    def solve(self, x) -> np.ndarray:
        """``V^{-1} x`` through the triangular factor."""
        y = solve_triangular(self._R, np.asarray(x, dtype=float), trans="T", lower=False)
        return solve_triangular(self._R, y, lower=False)

    def weighted_norm(self, x) -> float:
        """``||x||_V``."""
        return float(np.linalg.norm(self._R @ np.asarray(x, dtype=float)))

    def inv_weighted_norm(self, x) -> float:
        """``||x||_{V^{-1}}``."""
        y = solve_triangular(self._R, np.asarray(x, dtype=float), trans="T", lower=False)
        return float(np.linalg.norm(y))


def init_state(hyper: HyperParams) -> LearnerState:
    return LearnerState.initial(hyper)


def confidence_radius(state: LearnerState, hyper: HyperParams, mode: str = "exact-logdet") -> float:
    """Radius ``c_t`` of the confidence ellipsoid around ``alpha_hat``.

    ``exact-logdet`` uses the self-normalised bound with the actual
    ``log det V_t``; ``lemma-bound`` replaces it by ``K log(mu + t d Q T0)``.
    Both modes use the ``2 log(1/delta)`` term of the self-normalised bound;
    a ``2 log(mu^{-1/2} delta)`` form would go negative for any delta < 1.
    """
    log_inv_delta = 2.0 * math.log(1.0 / hyper.delta)
    if mode == "exact-logdet":
        arg = state.logdet() - hyper.K * math.log(hyper.mu) + log_inv_delta
    elif mode == "lemma-bound":
        arg = log_lemma1_bound(hyper, state.t) - hyper.K * math.log(hyper.mu) + log_inv_delta
    else:
        raise InvalidParameterError(f"unknown confidence mode {mode!r}; use one of {CONFIDENCE_MODES}")
    # roundoff can leave logdet(V) - K log(mu) a hair below zero at t = 0
    if -1e-9 < arg < 0:
        arg = 0.0
    if arg < 0 or not math.isfinite(arg):
        raise NumericalError(f"confidence radius argument is {arg}; learner state is corrupted")
    return hyper.R * math.sqrt(arg) + math.sqrt(hyper.mu) * hyper.S


def log_lemma1_bound(hyper: HyperParams, t: int) -> float:
    """``K log(mu + t d Q T0)``: log of the determinant bound on ``V_t``."""
    if t < 0:
        raise InvalidParameterError(f"t must be >= 0, got {t}")
    return hyper.K * math.log(hyper.mu + t * hyper.d * hyper.Q * hyper.T0)


def lemma1_bound(hyper: HyperParams, t: int) -> float:
    try:
        return math.exp(log_lemma1_bound(hyper, t))
    except OverflowError:
        return math.inf


def regret_bound(hyper: HyperParams, T: int, c_T: float) -> float:
    if T < 1:
        raise InvalidParameterError(f"horizon must be >= 1, got {T}")
    return 2.0 * (c_T + 1.0) * math.sqrt(
        2.0 * hyper.K * T * math.log1p(hyper.Q * hyper.T0 * hyper.d / hyper.mu)
    )
