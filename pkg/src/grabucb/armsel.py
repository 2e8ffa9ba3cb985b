"""UCB arm selection over sparse binary source placements.

The objective of an action ``h`` is

    J(h) = xbar(h) . alpha_hat + c * ||F xbar(h)||_2,   F'F = V^{-1},

with ``xbar(h) = A' h`` and ``A`` the per-node unit features.  Everything that
does not depend on ``h`` is folded into two arrays at construction time:
``lin = A alpha_hat`` (N,) and ``B = F A'`` (K, N), so that
``J(h) = lin . h + c ||B h||``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import BudgetExceededError, InvalidParameterError, NumericalError
from .learner import HyperParams, LearnerState, confidence_radius
from .process import binary_action

DEFAULT_ENUM_BUDGET = 2_000_000
_ENUM_CHUNK = 65_536


@dataclass(frozen=True)
class ArmSelectConfig:
    T0: int
    max_iter: int = 100

    def __post_init__(self):
        if self.T0 < 1:
            raise InvalidParameterError(f"T0 must be >= 1, got {self.T0}")
        if self.max_iter < 1:
            raise InvalidParameterError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class Selection:
    h: np.ndarray
    value: float
    iterations: int
    path: tuple = ()

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.h))


@dataclass(frozen=True)
class UcbObjective:
    alpha_hat: np.ndarray
    c: float
    A: np.ndarray = field(repr=False)     # (N, K) unit features
    lin: np.ndarray = field(repr=False)   # (N,)
    B: np.ndarray = field(repr=False)     # (K, N)

    @classmethod
    def build(cls, alpha_hat, c: float, A, V=None, factor=None) -> "UcbObjective":
        """Freeze ``(alpha_hat, c, V)`` into an objective.

        Pass either ``V`` or an upper-triangular ``factor`` with
        ``factor' factor == V`` (as kept by :class:`LearnerState`).
        """
        if c < 0:
            raise InvalidParameterError(f"confidence scale must be >= 0, got {c}")
        A = np.asarray(A, dtype=float)
        alpha_hat = np.asarray(alpha_hat, dtype=float)
        if factor is None:
            if V is None:
                raise InvalidParameterError("need V or its factor")
            try:
                factor = cholesky(np.asarray(V, dtype=float), lower=False)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(f"V is not positive definite: {exc}") from exc
        # V = R'R  =>  V^{-1} = F'F with F = R^{-T}
        B = solve_triangular(factor, A.T, trans="T", lower=False)
        return cls(alpha_hat=alpha_hat, c=float(c), A=A, lin=A @ alpha_hat, B=B)

    @classmethod
    def from_state(cls, state: LearnerState, c: float, A) -> "UcbObjective":
        return cls.build(state.alpha_hat, c, A, factor=state.factor)

    @property
    def N(self) -> int:
        return self.lin.shape[0]

    def xbar(self, h) -> np.ndarray:
        return self.A.T @ np.asarray(h, dtype=float)

    def terms(self, h) -> tuple[float, float]:
        """(linear term, bonus term) of ``J(h)``."""
        h = np.asarray(h, dtype=float)
        lin = float(self.lin @ h)
        if self.c == 0:
            return lin, 0.0
        return lin, self.c * float(np.linalg.norm(self.B @ h))

    def value(self, h) -> float:
        a, b = self.terms(h)
        return a + b

    def gradient(self, h) -> np.ndarray:
        """All partial derivatives of ``J`` at ``h``."""
        if self.c == 0:
            return self.lin.copy()
        Bh = self.B @ np.asarray(h, dtype=float)
        nrm = np.linalg.norm(Bh)
        if nrm == 0:
            # one-sided directional derivative of ||B h|| from B h = 0
            return self.lin + self.c * np.linalg.norm(self.B, axis=0)
        return self.lin + self.c * (self.B.T @ Bh) / nrm


def objective_value(obj: UcbObjective, h) -> float:
    return obj.value(h)


def partial_derivative(obj: UcbObjective, h, n: int) -> float:
    if not 0 <= n < obj.N:
        raise IndexError(f"node index {n} out of range for N={obj.N}")
    h = np.asarray(h, dtype=float)
    if obj.c == 0:
        return float(obj.lin[n])
    Bh = obj.B @ h
    nrm = np.linalg.norm(Bh)
    if nrm == 0:
        return float(obj.lin[n] + obj.c * np.linalg.norm(obj.B[:, n]))
    return float(obj.lin[n] + obj.c * (Bh @ obj.B[:, n]) / nrm)


def _top(values: np.ndarray, k: int) -> np.ndarray:
    # stable sort on the negated values: ties go to the lowest index
    return np.sort(np.argsort(-values, kind="stable")[:k])


def grab_arm_light(obj: UcbObjective, cfg: ArmSelectConfig) -> Selection:
    """Vertex walk: start at the T0 best unit actions, then swap one basic and
    one non-basic node per iteration along the gradient until the swap stops
    improving ``J``."""
    N, T0 = obj.N, cfg.T0
    if T0 > N:
        raise InvalidParameterError(f"T0={T0} exceeds N={N}")
    if T0 == N:
        h = np.ones(N)
        return Selection(h, obj.value(h), 0, (obj.value(h),))

    # dJ/dh_n at u_n: lin_n + c ||b_n||
    a = obj.lin + obj.c * np.linalg.norm(obj.B, axis=0) if obj.c else obj.lin
    h = binary_action(N, _top(a, T0))
    J = obj.value(h)
    path = [J]
    visited = {tuple(np.flatnonzero(h))}
    iterations = 0
    for _ in range(cfg.max_iter):
        iterations += 1
        g = obj.gradient(h)
        basic = h > 0
        g_in = np.where(basic, -np.inf, g)
        g_out = np.where(basic, g, np.inf)
        n_in = int(np.argmax(g_in))
        n_out = int(np.argmin(g_out))
        cand = h.copy()
        cand[n_in], cand[n_out] = 1.0, 0.0
        J_new = obj.value(cand)
        if J_new <= J:
            break
        key = tuple(np.flatnonzero(cand))
        if key in visited:
            break
        visited.add(key)
        h, J = cand, J_new
        path.append(J)
    return Selection(h, J, iterations, tuple(path))


def exact_select(obj: UcbObjective, T0: int, budget: int = DEFAULT_ENUM_BUDGET,
                 at_most: bool = False) -> Selection:
    """Exhaustive maximisation of ``J`` over binary actions with ``T0`` ones
    (or ``<= T0`` ones with ``at_most``).  Ties go to the lexicographically
    smallest support."""
    N = obj.N
    if not 1 <= T0 <= N:
        raise InvalidParameterError(f"need 1 <= T0 <= N, got T0={T0}, N={N}")
    sizes = range(1, T0 + 1) if at_most else (T0,)
    total = sum(math.comb(N, s) for s in sizes)
    if total > budget:
        raise BudgetExceededError(f"{total} candidate supports exceed the budget of {budget}")

    best_val, best_sup = -math.inf, None
    for s in sizes:
        combos = itertools.combinations(range(N), s)
        while True:
            flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, _ENUM_CHUNK)),
                               dtype=np.intp)
            if flat.size == 0:
                break
            idx = flat.reshape(-1, s)
            vals = obj.lin[idx].sum(axis=1)
            if obj.c:
                vals = vals + obj.c * np.linalg.norm(obj.B[:, idx].sum(axis=2), axis=0)
            j = int(np.argmax(vals))
            if vals[j] > best_val or (vals[j] == best_val and tuple(idx[j]) < best_sup):
                best_val, best_sup = float(vals[j]), tuple(int(i) for i in idx[j])
    h = binary_action(N, best_sup)
    return Selection(h, obj.value(h), total, (obj.value(h),))


def ucb_select(state: LearnerState, hyper: HyperParams, A, cfg: ArmSelectConfig, *,
               mode: str = "exact-logdet", c: float | None = None, exact: bool = False,
               budget: int = DEFAULT_ENUM_BUDGET) -> tuple[Selection, UcbObjective]:
    """Build the UCB objective from the learner state and maximise it.

    ``A`` is the unit-feature matrix of the (basis, mask) pair, see
    :func:`grabucb.process.unit_features`.  ``c`` overrides the confidence
    radius (``c=0`` gives the greedy ablation).
    """
    if c is None:
        c = confidence_radius(state, hyper, mode)
    obj = UcbObjective.from_state(state, c, A)
    if exact and math.comb(obj.N, cfg.T0) <= budget:
        return exact_select(obj, cfg.T0, budget), obj
    return grab_arm_light(obj, cfg), obj
