"""Simulation harness: Grab-UCB loop, AAL baseline, oracle arm, regret and studies."""
from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .armsel import (DEFAULT_ENUM_BUDGET, ArmSelectConfig, UcbObjective, exact_select,
                     grab_arm_light)
from .errors import BudgetExceededError, InvalidParameterError
from .graph import (DictionaryBasis, Graph, dictionary_basis, generate_ba, generate_rbf,
                    laplacian, power_sum, spectrum)
from .learner import CONFIDENCE_MODES, HyperParams, LearnerState, confidence_radius
from .process import (DiffusionKernel, Environment, Mask, PolynomialKernel, binary_action,
                      diffusion_poly_fit, feature_matrix, random_mask, support,
                      unit_features)

# independent RNG streams per purpose, derived from one run seed
STREAMS = ("graph", "mask", "noise", "actions")


def streams(seed: int) -> dict[str, np.random.Generator]:
    ss = np.random.SeedSequence(seed)
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, ss.spawn(len(STREAMS)))}


@dataclass(frozen=True)
class ExperimentConfig:
    # graph
    graph_model: str = "rbf"
    n: int = 100
    rbf_sigma: float = 0.5
    rbf_threshold: float = 0.15
    ba_m0: int = 10
    ba_m: int = 3
    # process
    kernel: str = "diffusion"
    tau: float = 5.0
    alpha: tuple = ()
    mask_fraction: float = 0.2
    sigma_e: float = 0.1
    # learner
    mu: float = 0.01
    delta: float = 0.01
    R: float | None = None
    noise_bound: str = "sqrt_n"     # rule for R when it is None: sqrt(n)*sigma_e or sigma_e
    S: float | None = None
    K: int = 4
    T0: int = 5
    confidence: str = "exact-logdet"
    # run
    horizon: int = 100
    selector: str = "walk"
    max_iter: int = 100
    aal_lengths: tuple = (10, 20)
    seeds: tuple = (0,)
    enum_budget: int = DEFAULT_ENUM_BUDGET
    oracle_restarts: int = 20

    def __post_init__(self):
        if self.graph_model not in ("rbf", "ba"):
            raise InvalidParameterError(f"graph.model must be 'rbf' or 'ba', got {self.graph_model!r}")
        if self.kernel not in ("diffusion", "polynomial"):
            raise InvalidParameterError(f"process.kernel must be 'diffusion' or 'polynomial', got {self.kernel!r}")
        if self.kernel == "polynomial" and len(self.alpha) != self.K:
            raise InvalidParameterError(f"process.alpha needs K={self.K} entries, got {len(self.alpha)}")
        if self.kernel == "diffusion" and not self.tau > 0:
            raise InvalidParameterError(f"process.tau must be > 0, got {self.tau}")
        if self.confidence not in CONFIDENCE_MODES:
            raise InvalidParameterError(f"learner.confidence must be one of {CONFIDENCE_MODES}")
        if self.selector not in ("walk", "exact"):
            raise InvalidParameterError(f"run.selector must be 'walk' or 'exact', got {self.selector!r}")
        if not 1 <= self.T0 <= self.n:
            raise InvalidParameterError(f"learner.T0 must lie in [1, n], got {self.T0}")
        if self.K < 1 or self.horizon < 1 or self.max_iter < 1:
            raise InvalidParameterError("learner.K, run.horizon and run.max_iter must be >= 1")
        if not self.sigma_e >= 0:
            raise InvalidParameterError(f"process.sigma_e must be >= 0, got {self.sigma_e}")
        if self.noise_bound not in ("sqrt_n", "sigma"):
            raise InvalidParameterError(f"learner.R rule must be 'sqrt_n' or 'sigma', got {self.noise_bound!r}")
        if not self.seeds:
            raise InvalidParameterError("run.seeds must be nonempty")
        if any(not 0 < tl for tl in self.aal_lengths):
            raise InvalidParameterError("run.aal_lengths must be positive")


@dataclass
class Instance:
    """Everything generated from one seed: graph, basis, truth and noise stream."""

    cfg: ExperimentConfig
    seed: int
    graph: Graph
    basis: DictionaryBasis
    env: Environment
    hyper: HyperParams
    A: np.ndarray
    action_rng: np.random.Generator

    @property
    def mask(self) -> Mask:
        return self.env.mask


def make_graph(cfg: ExperimentConfig, rng) -> Graph:
    if cfg.graph_model == "rbf":
        return generate_rbf(cfg.n, cfg.rbf_sigma, cfg.rbf_threshold, rng)
    return generate_ba(cfg.n, cfg.ba_m0, cfg.ba_m, rng)


def build_instance(cfg: ExperimentConfig, seed: int, graph: Graph | None = None) -> Instance:
    rngs = streams(seed)
    g = graph if graph is not None else make_graph(cfg, rngs["graph"])
    L = laplacian(g)
    spec = spectrum(L)
    basis = dictionary_basis(L, cfg.K)
    mask = random_mask(g.n, cfg.mask_fraction, rngs["mask"])
    if cfg.kernel == "diffusion":
        kernel = DiffusionKernel(cfg.tau, spec)
        S = cfg.S if cfg.S is not None else float(np.linalg.norm(diffusion_poly_fit(spec, cfg.tau, cfg.K)))
    else:
        kernel = PolynomialKernel(np.asarray(cfg.alpha, dtype=float), basis)
        S = cfg.S if cfg.S is not None else float(np.linalg.norm(cfg.alpha))
    env = Environment(g, basis, spec, kernel, mask, cfg.sigma_e, rngs["noise"])
    if cfg.R is not None:
        R = cfg.R
    else:
        R = cfg.sigma_e * (math.sqrt(g.n) if cfg.noise_bound == "sqrt_n" else 1.0)
    hyper = HyperParams(mu=cfg.mu, delta=cfg.delta, R=R, S=max(S, 1e-12), K=cfg.K, T0=cfg.T0,
                        Q=mask.Q, d=power_sum(spec, cfg.K))
    return Instance(cfg, seed, g, basis, env, hyper, unit_features(basis, mask), rngs["actions"])


@dataclass
class RunRecord:
    algorithm: str
    seed: int
    supports: list = field(default_factory=list)
    mean_rewards: list = field(default_factory=list)
    realized_rewards: list = field(default_factory=list)
    radii: list = field(default_factory=list)
    objective: list = field(default_factory=list)   # (J, linear, bonus, iterations) per round
    checkpoints: list = field(default_factory=list)  # (t, alpha_hat, c_exact, c_lemma, logdet)
    oracle_support: tuple = ()
    r_star: float = float("nan")
    oracle_exact: bool = True
    timings: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.mean_rewards)

    def instantaneous_regret(self) -> np.ndarray:
        return self.r_star - np.asarray(self.mean_rewards)

    def cumulative_regret(self) -> np.ndarray:
        return cumulative_regret(self, self.r_star)


def cumulative_regret(record: RunRecord, r_star: float) -> np.ndarray:
    return np.cumsum(r_star - np.asarray(record.mean_rewards, dtype=float))


def oracle_best_arm(env: Environment, T0: int, method: str = "walk", *,
                    budget: int = DEFAULT_ENUM_BUDGET, restarts: int = 0, rng=None):
    """Best fixed action under the true mean reward.

    Returns ``(h_star, r_star, exact)``.  The mean reward is linear in ``h``,
    so the walk started from the top-``T0`` unit rewards is already optimal
    and ``exact`` is True for both methods.  ``restarts`` extra walks from
    random supports are kept as a cross-check.
    """
    N = env.n
    if method not in ("enumerate", "walk"):
        raise InvalidParameterError(f"oracle method must be 'enumerate' or 'walk', got {method!r}")
    # c = 0 objective over the true kernel: lin = per-node rewards, no bonus
    obj = UcbObjective(alpha_hat=np.zeros(0), c=0.0, A=np.zeros((N, 0)),
                       lin=np.asarray(env.node_rewards, dtype=float), B=np.zeros((0, N)))
    if method == "enumerate":
        sel = exact_select(obj, T0, budget)
        h = sel.h
    else:
        sel = grab_arm_light(obj, ArmSelectConfig(T0, max_iter=max(100, N)))
        h = sel.h
        if restarts:
            rng = np.random.default_rng(rng)
            for _ in range(restarts):
                start = binary_action(N, rng.choice(N, T0, replace=False))
                cand = _walk_from(obj, start, max(100, N))
                if obj.value(cand) > obj.value(h):
                    h = cand
    return h, env.mean_reward(h), True


def _walk_from(obj: UcbObjective, h: np.ndarray, max_iter: int) -> np.ndarray:
    J = obj.value(h)
    for _ in range(max_iter):
        g = obj.gradient(h)
        basic = h > 0
        n_in = int(np.argmax(np.where(basic, -np.inf, g)))
        n_out = int(np.argmin(np.where(basic, g, np.inf)))
        cand = h.copy()
        cand[n_in], cand[n_out] = 1.0, 0.0
        J_new = obj.value(cand)
        if J_new <= J:
            break
        h, J = cand, J_new
    return h


def _set_oracle(rec: RunRecord, inst: Instance) -> None:
    cfg = inst.cfg
    method = "enumerate" if math.comb(inst.graph.n, cfg.T0) <= cfg.enum_budget else "walk"
    t0 = time.perf_counter()
    h, r, exact = oracle_best_arm(inst.env, cfg.T0, method, budget=cfg.enum_budget)
    rec.timings["oracle_s"] = time.perf_counter() - t0
    rec.oracle_support, rec.r_star, rec.oracle_exact = support(h), r, exact


def _select(inst: Instance, obj: UcbObjective):
    cfg = inst.cfg
    if cfg.selector == "exact" and math.comb(obj.N, cfg.T0) <= cfg.enum_budget:
        return exact_select(obj, cfg.T0, cfg.enum_budget)
    return grab_arm_light(obj, ArmSelectConfig(cfg.T0, cfg.max_iter))


def run_grab_ucb(cfg: ExperimentConfig, seed: int, *, zero_bonus: bool = False,
                 instance: Instance | None = None, callback=None) -> RunRecord:
    """One Grab-UCB run of ``cfg.horizon`` rounds.

    ``zero_bonus`` forces ``c_t = 0`` (greedy ablation).  ``callback(t, state,
    obs)`` is invoked after every ingest.
    """
    inst = instance if instance is not None else build_instance(cfg, seed)
    hyper = inst.hyper
    rec = RunRecord("grab_ucb_c0" if zero_bonus else "grab_ucb", seed)
    _set_oracle(rec, inst)
    state = LearnerState.initial(hyper)
    t_select = t_learn = 0.0
    for t in range(1, cfg.horizon + 1):
        c_exact = confidence_radius(state, hyper, "exact-logdet")
        c_lemma = confidence_radius(state, hyper, "lemma-bound")
        c = 0.0 if zero_bonus else (c_exact if cfg.confidence == "exact-logdet" else c_lemma)
        rec.checkpoints.append((state.t, state.alpha_hat.copy(), c_exact, c_lemma, state.logdet()))

        t0 = time.perf_counter()
        obj = UcbObjective.from_state(state, c, inst.A)
        sel = _select(inst, obj)
        t_select += time.perf_counter() - t0

        obs = inst.env.observe(sel.h)
        t0 = time.perf_counter()
        state.ingest(feature_matrix(inst.basis, inst.mask, sel.h), obs.w)
        t_learn += time.perf_counter() - t0

        lin, bonus = obj.terms(sel.h)
        rec.supports.append(sel.support)
        rec.mean_rewards.append(obs.mean_reward)
        rec.realized_rewards.append(obs.realized_reward)
        rec.radii.append(c)
        rec.objective.append((lin + bonus, lin, bonus, sel.iterations))
        if callback is not None:
            callback(t, state, obs)
    rec.checkpoints.append((state.t, state.alpha_hat.copy(),
                            confidence_radius(state, hyper, "exact-logdet"),
                            confidence_radius(state, hyper, "lemma-bound"), state.logdet()))
    rec.timings.update(select_s=t_select, learn_s=t_learn)
    return rec


def run_aal(cfg: ExperimentConfig, seed: int, T_L: int, *, instance: Instance | None = None) -> RunRecord:
    """Act-After-Learning baseline: ``T_L`` uniformly random supports, one
    ridge fit, then the greedy best arm under the fit for the remaining rounds."""
    if not 0 < T_L < cfg.horizon:
        raise InvalidParameterError(f"need 0 < T_L < horizon, got T_L={T_L}, horizon={cfg.horizon}")
    inst = instance if instance is not None else build_instance(cfg, seed)
    rec = RunRecord(f"aal_{T_L}", seed)
    _set_oracle(rec, inst)
    state = LearnerState.initial(inst.hyper)
    N = inst.graph.n
    for _ in range(T_L):
        h = binary_action(N, inst.action_rng.choice(N, cfg.T0, replace=False))
        obs = inst.env.observe(h)
        state.ingest(feature_matrix(inst.basis, inst.mask, h), obs.w)
        rec.supports.append(support(h))
        rec.mean_rewards.append(obs.mean_reward)
        rec.realized_rewards.append(obs.realized_reward)
        rec.radii.append(0.0)
    obj = UcbObjective.from_state(state, 0.0, inst.A)
    arm = _select(inst, obj).h
    for _ in range(T_L, cfg.horizon):
        obs = inst.env.observe(arm)
        rec.supports.append(support(arm))
        rec.mean_rewards.append(obs.mean_reward)
        rec.realized_rewards.append(obs.realized_reward)
        rec.radii.append(0.0)
    return rec


def run_all(cfg: ExperimentConfig, seed: int) -> dict[str, RunRecord]:
    """Grab-UCB, its zero-bonus ablation and every AAL variant on one seed.

    All algorithms see the same graph and mask; each gets its own fresh noise
    stream so results do not depend on execution order.
    """
    records = {}
    rec = run_grab_ucb(cfg, seed)
    records[rec.algorithm] = rec
    rec = run_grab_ucb(cfg, seed, zero_bonus=True)
    records[rec.algorithm] = rec
    for tl in cfg.aal_lengths:
        rec = run_aal(cfg, seed, tl)
        records[rec.algorithm] = rec
    return records


def summarize_regret(records: list[RunRecord]) -> dict[str, np.ndarray]:
    curves = np.array([r.cumulative_regret() for r in records])
    n = curves.shape[0]
    std = curves.std(axis=0, ddof=1) if n > 1 else np.zeros(curves.shape[1])
    return {"t": np.arange(1, curves.shape[1] + 1), "mean": curves.mean(axis=0), "std": std,
            "stderr": std / math.sqrt(n), "curves": curves}


# --- estimation-error studies ------------------------------------------------

def error_study(cfg: ExperimentConfig, seed: int, n_train: int = 300, n_test: int = 100,
                instance: Instance | None = None) -> float:
    """Normalised test error of a ridge fit on ``n_train`` random actions.

    Returns ``mean_i ||y_i - D_hat h_i||^2 / ||y_i||^2`` over ``n_test`` fresh
    noisy test signals, with ``D_hat = sum_k alpha_hat_k L^k``.  The fit sees
    only masked observations; the test signals are the full resultant signals.
    """
    if n_train < 1 or n_test < 1:
        raise InvalidParameterError("n_train and n_test must be >= 1")
    inst = instance if instance is not None else build_instance(cfg, seed)
    N, T0 = inst.graph.n, cfg.T0
    state = LearnerState.initial(inst.hyper)
    for _ in range(n_train):
        h = binary_action(N, inst.action_rng.choice(N, T0, replace=False))
        obs = inst.env.observe(h)
        state.ingest(feature_matrix(inst.basis, inst.mask, h), obs.w)
    errs = []
    for _ in range(n_test):
        h = binary_action(N, inst.action_rng.choice(N, T0, replace=False))
        y = inst.env.observe(h).y
        pred = state.alpha_hat @ (inst.basis.powers @ h)
        errs.append(float(np.sum((y - pred) ** 2) / np.sum(y**2)))
    return float(np.mean(errs))


STUDY_PARAMETERS = ("ba_m", "rbf_threshold", "T0", "noise_var", "mask_fraction", "K", "tau", "n")


def error_sweep(cfg: ExperimentConfig, parameter: str, levels, seeds=None, *,
                n_train: int = 300, n_test: int = 100,
                observability=("full", "partial"), partial_fraction: float = 0.4) -> list[dict]:
    """:func:`error_study` over a grid of one config field.

    ``noise_var`` sets ``sigma_e = sqrt(level)``.  ``full`` observability uses
    the all-ones mask, ``partial`` a random mask of ``partial_fraction``.
    Rows: ``parameter, level, observability, seed, error``.
    """
    if parameter not in STUDY_PARAMETERS:
        raise InvalidParameterError(f"study.parameter must be one of {STUDY_PARAMETERS}, got {parameter!r}")
    seeds = cfg.seeds if seeds is None else seeds
    rows = []
    for level in levels:
        if parameter == "noise_var":
            if level < 0:
                raise InvalidParameterError(f"study.levels: noise variance must be >= 0, got {level}")
            base = replace(cfg, sigma_e=math.sqrt(level))
        elif parameter in ("ba_m", "T0", "K", "n"):
            base = replace(cfg, **{parameter: int(level)})
        else:
            base = replace(cfg, **{parameter: float(level)})
        for obs in observability:
            if obs not in ("full", "partial"):
                raise InvalidParameterError(f"observability must be 'full' or 'partial', got {obs!r}")
            c = replace(base, mask_fraction=1.0 if obs == "full" else partial_fraction)
            for seed in seeds:
                err = error_study(c, seed, n_train, n_test)
                rows.append(dict(parameter=parameter, level=level, observability=obs,
                                 seed=seed, error=err))
    return rows


# --- solver benchmark --------------------------------------------------------

def _median_time(fn, repeats: int = 3):
    fn()  # warm-up, discarded
    times, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def bench_objective(inst: Instance, warmup_rounds: int = 10) -> UcbObjective:
    """UCB objective after ``warmup_rounds`` random observations."""
    state = LearnerState.initial(inst.hyper)
    N = inst.graph.n
    for _ in range(warmup_rounds):
        h = binary_action(N, inst.action_rng.choice(N, inst.cfg.T0, replace=False))
        state.ingest(feature_matrix(inst.basis, inst.mask, h), inst.env.observe(h).w)
    c = confidence_radius(state, inst.hyper, inst.cfg.confidence)
    return UcbObjective.from_state(state, c, inst.A)


def solver_bench(cfg: ExperimentConfig, sizes, seeds=None, warmup_rounds: int = 10,
                 budget: int | None = None) -> list[dict]:
    """Time exact enumeration against the vertex walk on identical objectives.

    Rows: ``N, seed, method, time_ms, reward, objective, skipped``.  Rewards are
    true mean rewards of the selected action.
    """
    budget = cfg.enum_budget if budget is None else budget
    seeds = cfg.seeds if seeds is None else seeds
    rows = []
    for N in sizes:
        c = replace(cfg, n=N)
        for seed in seeds:
            inst = build_instance(c, seed)
            obj = bench_objective(inst, warmup_rounds)
            walk_cfg = ArmSelectConfig(c.T0, c.max_iter)
            t_walk, sel = _median_time(lambda: grab_arm_light(obj, walk_cfg))
            rows.append(dict(N=N, seed=seed, method="grab_arm_light", time_ms=1e3 * t_walk,
                             reward=inst.env.mean_reward(sel.h), objective=sel.value, skipped=False))
            if math.comb(N, c.T0) <= budget:
                t_ex, ex = _median_time(lambda: exact_select(obj, c.T0, budget))
                rows.append(dict(N=N, seed=seed, method="exact", time_ms=1e3 * t_ex,
                                 reward=inst.env.mean_reward(ex.h), objective=ex.value, skipped=False))
            else:
                rows.append(dict(N=N, seed=seed, method="exact", time_ms=float("nan"),
                                 reward=float("nan"), objective=float("nan"), skipped=True))
    return rows


def loglog_slope(x, y) -> float:
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
