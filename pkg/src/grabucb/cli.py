"""Command-line entry point: ``python -m grabucb <command> [options]``.

Every command reads an optional INI config, applies ``--set section.key=value``
overrides, writes CSV results into ``--out-dir`` and a JSON sidecar
``<command>.json`` with the config echo, seeds, versions, host and timings.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bench import (build_instance, error_sweep, loglog_slope, make_graph, oracle_best_arm,
                    run_aal, run_grab_ucb, solver_bench, streams, summarize_regret)
from .config import LoadedConfig, load_config
from .errors import BudgetExceededError, InvalidParameterError, NumericalError
from .graph import connected_components, write_edge_list
from .learner import log_lemma1_bound, regret_bound

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# default number of seeds per command when the config gives none
DEFAULT_REALIZATIONS = {"run-regret": 100, "run-error-study": 50, "run-solver-bench": 5}


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (tuple, list)):
        return ";".join(_fmt(v) for v in x)
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _metadata(command: str, loaded: LoadedConfig, timings: dict, extra=None) -> dict:
    meta = {
        "command": command,
        "config": loaded.to_dict(),
        "seeds": list(loaded.experiment.seeds),
        "versions": {"grabucb": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "host": {"node": platform.node(), "platform": platform.platform(),
                 "machine": platform.machine()},
        "timings_s": timings,
    }
    if extra:
        meta.update(extra)
    return meta


def _write_json(path: Path, meta: dict) -> None:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not serialisable: {type(o)}")
    path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=default) + "\n")


def _map_seeds(fn, seeds, threads: int):
    """Apply ``fn`` per seed; results come back in seed order."""
    if threads <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seeds))


# --- commands ----------------------------------------------------------------

def cmd_generate_graph(loaded: LoadedConfig, out: Path, threads: int) -> dict:
    cfg = loaded.experiment
    seed = cfg.seeds[0]
    t0 = time.perf_counter()
    g = make_graph(cfg, streams(seed)["graph"])
    path = out / "graph.txt"
    write_edge_list(g, path)
    n_comp = connected_components(g)
    print(f"wrote {path}: n={g.n} edges={g.n_edges} components={n_comp}")
    return {"timings": {"generate_s": time.perf_counter() - t0},
            "extra": {"seed": seed, "n_edges": g.n_edges, "components": n_comp}}


def cmd_best_arm(loaded: LoadedConfig, out: Path, threads: int) -> dict:
    cfg = loaded.experiment
    seed = cfg.seeds[0]
    t0 = time.perf_counter()
    inst = build_instance(cfg, seed)
    method = "enumerate" if math.comb(cfg.n, cfg.T0) <= cfg.enum_budget else "walk"
    h, r_star, exact = oracle_best_arm(inst.env, cfg.T0, method, budget=cfg.enum_budget)
    signal = inst.env.signal(h)
    rows = [(i, int(inst.mask.bits[i]), inst.env.node_rewards[i], int(h[i] > 0), signal[i])
            for i in range(cfg.n)]
    write_csv(out / "best_arm.csv", ["node", "mask", "node_reward", "source", "signal"], rows)
    support = [int(i) for i in np.flatnonzero(h)]
    print(f"best arm {support} r*={r_star!r} method={method}")
    return {"timings": {"oracle_s": time.perf_counter() - t0},
            "extra": {"seed": seed, "support": support, "r_star": r_star, "oracle_method": method,
                      "oracle_exact": exact}}


def _regret_worker(args):
    cfg, seed = args
    recs = [run_grab_ucb(cfg, seed), run_grab_ucb(cfg, seed, zero_bonus=True)]
    recs += [run_aal(cfg, seed, tl) for tl in cfg.aal_lengths]
    inst = build_instance(cfg, seed)
    return recs, inst.hyper


def cmd_run_regret(loaded: LoadedConfig, out: Path, threads: int) -> dict:
    cfg = loaded.experiment
    seeds = list(cfg.seeds)
    t0 = time.perf_counter()
    results = _map_seeds(_regret_worker, [(cfg, s) for s in seeds], threads)
    t_run = time.perf_counter() - t0

    by_alg: dict[str, list] = {}
    for recs, _ in results:
        for r in recs:
            by_alg.setdefault(r.algorithm, []).append(r)

    for alg, recs in by_alg.items():
        summ = summarize_regret(recs)
        header = ["t", "mean_regret", "std_regret", "stderr_regret"] + [f"seed_{s}" for s in seeds]
        rows = [[int(summ["t"][i]), summ["mean"][i], summ["std"][i], summ["stderr"][i],
                 *summ["curves"][:, i]] for i in range(len(summ["t"]))]
        write_csv(out / f"regret_{alg}.csv", header, rows)
        trace = []
        for r in recs:
            inst_reg = r.instantaneous_regret()
            for t in range(r.horizon):
                trace.append([r.seed, t + 1, r.supports[t], r.mean_rewards[t],
                              r.realized_rewards[t], r.radii[t], inst_reg[t]])
        write_csv(out / f"trace_{alg}.csv",
                  ["seed", "t", "support", "mean_reward", "realized_reward", "c_t", "inst_regret"], trace)

    for alg in ("grab_ucb", "grab_ucb_c0"):
        sel_rows, ck_rows = [], []
        for r in by_alg[alg]:
            for t, (J, lin, bonus, iters) in enumerate(r.objective, start=1):
                sel_rows.append([r.seed, t, r.supports[t - 1], J, lin, bonus, iters])
            for (t, a, ce, cl, ld) in r.checkpoints:
                ck_rows.append([r.seed, t, *a, ce, cl, ld])
        write_csv(out / f"selector_{alg}.csv",
                  ["seed", "t", "support", "J", "linear", "bonus", "iterations"], sel_rows)
        write_csv(out / f"checkpoints_{alg}.csv",
                  ["seed", "t", *[f"alpha_{k}" for k in range(cfg.K)], "c_exact", "c_lemma", "logdet"],
                  ck_rows)

    final = []
    for (recs, hyper), seed in zip(results, seeds):
        ucb = recs[0]
        c_T = ucb.checkpoints[-1][2 if cfg.confidence == "exact-logdet" else 3]
        bound = regret_bound(hyper, cfg.horizon, c_T)
        for r in recs:
            final.append([seed, r.algorithm, r.cumulative_regret()[-1], bound, r.r_star,
                          r.oracle_support, int(r.oracle_exact)])
    write_csv(out / "final_regret.csv",
              ["seed", "algorithm", "regret_T", "regret_bound", "r_star", "oracle_support", "oracle_exact"],
              final)

    means = {alg: float(summarize_regret(recs)["mean"][-1]) for alg, recs in by_alg.items()}
    for alg, m in means.items():
        print(f"{alg:12s} mean regret at T={cfg.horizon}: {m:.4f}")
    phase = {"select_s": sum(r.timings.get("select_s", 0.0) for rs in by_alg.values() for r in rs),
             "learn_s": sum(r.timings.get("learn_s", 0.0) for rs in by_alg.values() for r in rs),
             "oracle_s": sum(r.timings.get("oracle_s", 0.0) for rs in by_alg.values() for r in rs)}
    return {"timings": {"run_s": t_run, **phase},
            "extra": {"algorithms": sorted(by_alg), "mean_regret_T": means,
                      "oracle_exact": all(r.oracle_exact for rs in by_alg.values() for r in rs)}}


def _error_worker(args):
    cfg, study, seed = args
    return error_sweep(cfg, study.parameter, study.levels, (seed,), n_train=study.n_train,
                       n_test=study.n_test, observability=study.observability,
                       partial_fraction=study.partial_fraction)


def cmd_run_error_study(loaded: LoadedConfig, out: Path, threads: int) -> dict:
    cfg, study = loaded.experiment, loaded.study
    t0 = time.perf_counter()
    per_seed = _map_seeds(_error_worker, [(cfg, study, s) for s in cfg.seeds], threads)
    rows = [r for chunk in per_seed for r in chunk]
    rows.sort(key=lambda r: (study.levels.index(r["level"]), study.observability.index(r["observability"]),
                             cfg.seeds.index(r["seed"])))
    write_csv(out / "error_study_seeds.csv", ["parameter", "level", "observability", "seed", "error"],
              [[r["parameter"], r["level"], r["observability"], r["seed"], r["error"]] for r in rows])
    summary = []
    for level in study.levels:
        for obs in study.observability:
            errs = np.array([r["error"] for r in rows if r["level"] == level and r["observability"] == obs])
            se = errs.std(ddof=1) / math.sqrt(errs.size) if errs.size > 1 else 0.0
            summary.append([study.parameter, level, obs, errs.mean(), se, errs.size])
            print(f"{study.parameter}={level:g} {obs:8s} mean error {errs.mean():.6g} (se {se:.2g})")
    write_csv(out / "error_study.csv",
              ["parameter", "level", "observability", "mean_error", "stderr_error", "n_seeds"], summary)
    return {"timings": {"run_s": time.perf_counter() - t0}, "extra": {}}


def cmd_run_solver_bench(loaded: LoadedConfig, out: Path, threads: int) -> dict:
    cfg, bench = loaded.experiment, loaded.bench
    t0 = time.perf_counter()
    # timings are serial on purpose: parallel workers would contend for cores
    rows = solver_bench(cfg, bench.sizes, cfg.seeds, bench.warmup_rounds, bench.enum_budget)
    write_csv(out / "solver_bench.csv", ["N", "seed", "method", "time_ms", "reward", "objective", "skipped"],
              [[r["N"], r["seed"], r["method"], r["time_ms"], r["reward"], r["objective"], r["skipped"]]
               for r in rows])
    summary, walk_t = [], []
    for N in bench.sizes:
        for method in ("grab_arm_light", "exact"):
            sel = [r for r in rows if r["N"] == N and r["method"] == method and not r["skipped"]]
            if not sel:
                summary.append([N, method, float("nan"), float("nan"), 0])
                continue
            med = float(np.median([r["time_ms"] for r in sel]))
            summary.append([N, method, med, float(np.mean([r["reward"] for r in sel])), len(sel)])
            if method == "grab_arm_light":
                walk_t.append(med)
            print(f"N={N:4d} {method:15s} median {med:10.3f} ms")
    write_csv(out / "solver_bench_summary.csv", ["N", "method", "time_ms", "reward", "n_seeds"], summary)
    slope = loglog_slope(bench.sizes, walk_t) if len(walk_t) >= 2 else float("nan")
    print(f"grab_arm_light log-log slope: {slope:.3f}")
    return {"timings": {"run_s": time.perf_counter() - t0}, "extra": {"walk_loglog_slope": slope}}


def cmd_show_bounds(loaded: LoadedConfig, out: Path, threads: int) -> dict:
    cfg = loaded.experiment
    seed = cfg.seeds[0]
    t0 = time.perf_counter()
    inst = build_instance(cfg, seed)
    rec = run_grab_ucb(cfg, seed, instance=inst)
    hyper = inst.hyper
    cum = rec.cumulative_regret()
    rows = []
    print(f"{'t':>4} {'c_exact':>10} {'c_lemma':>10} {'logdet':>10} {'log_bound':>10} "
          f"{'regret':>10} {'regret_bound':>12}")
    for (t, _, ce, cl, ld) in rec.checkpoints[1:]:
        c = ce if cfg.confidence == "exact-logdet" else cl
        lb = log_lemma1_bound(hyper, t)
        rb = regret_bound(hyper, t, c)
        rows.append([t, ce, cl, ld, lb, cum[t - 1], rb])
        print(f"{t:4d} {ce:10.4f} {cl:10.4f} {ld:10.3f} {lb:10.3f} {cum[t - 1]:10.4f} {rb:12.4f}")
    write_csv(out / "bounds.csv",
              ["t", "c_exact", "c_lemma", "logdet", "log_lemma1_bound", "cum_regret", "regret_bound"], rows)
    return {"timings": {"run_s": time.perf_counter() - t0},
            "extra": {"seed": seed, "hyper": asdict(hyper)}}


COMMANDS = {
    "generate-graph": cmd_generate_graph,
    "best-arm": cmd_best_arm,
    "run-regret": cmd_run_regret,
    "run-error-study": cmd_run_error_study,
    "run-solver-bench": cmd_run_solver_bench,
    "show-bounds": cmd_show_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grabucb", description="Graph-kernel bandit simulator.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", "-c", help="INI config file")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("--seed", type=int, default=None,
                        help="base seed; runs use run.realizations consecutive seeds from here")
        sp.add_argument("--out-dir", default=".", help="directory for CSV and JSON output")
        sp.add_argument("--threads", type=int, default=1, help="worker processes for seed fan-out")
    return p


def _parse_overrides(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise InvalidParameterError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise InvalidParameterError(f"--threads must be >= 1, got {args.threads}")
        if args.seed is not None and args.seed < 0:
            raise InvalidParameterError(f"--seed must be a nonnegative integer, got {args.seed}")
        loaded = load_config(args.config, _parse_overrides(args.set), args.seed,
                             DEFAULT_REALIZATIONS.get(args.command, 1))
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        res = COMMANDS[args.command](loaded, out, args.threads)
        timings = {**res["timings"], "total_s": time.perf_counter() - t0}
        _write_json(out / f"{args.command}.json", _metadata(args.command, loaded, timings, res["extra"]))
    except (InvalidParameterError, configparser.Error) as exc:
        print(f"grabucb {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, BudgetExceededError) as exc:
        print(f"grabucb {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
