"""
Regret against Act-After-Learning, and estimation error studies
===============================================================
"""

# %%
import numpy as np

from grabucb.bench import ExperimentConfig, error_sweep, run_all, summarize_regret

cfg = ExperimentConfig(n=100, rbf_threshold=0.15, tau=5.0, K=4, T0=5, sigma_e=0.1, R=0.1, horizon=100)
records = {}
for seed in range(10):
    for name, rec in run_all(cfg, seed).items():
        records.setdefault(name, []).append(rec)
for name, recs in records.items():
    s = summarize_regret(recs)
    print(f"{name:12s} regret at T=100: {s['mean'][-1]:6.2f} +- {s['stderr'][-1]:.2f}")

# %% [markdown]
# Estimation error on BA graphs with a polynomial ground truth.  Better
# connected graphs give better conditioned features.

# %%
ba = ExperimentConfig(graph_model="ba", n=200, kernel="polynomial", alpha=(1.0, -0.5, 0.1, -0.01),
                      K=4, T0=25, sigma_e=0.1)
rows = error_sweep(ba, "ba_m", [1, 3, 5], seeds=range(3), n_train=300, n_test=50)
for m in (1, 3, 5):
    for obs in ("full", "partial"):
        e = [r["error"] for r in rows if r["level"] == m and r["observability"] == obs]
        print(f"m={m} {obs:8s} mean error {np.mean(e):.2e}")

# %% [markdown]
# Sparsity: with a diffusion truth the normalised error shrinks as more
# sources are switched on, because the signal energy grows faster than the
# residual.

# %%
diff = ExperimentConfig(n=100, tau=10.0, K=20, mask_fraction=1.0, sigma_e=0.1, R=0.1)
rows = error_sweep(diff, "T0", [5, 30], seeds=range(3), n_train=300, n_test=50, observability=("full",))
for T0 in (5, 30):
    print(f"T0={T0}: mean error {np.mean([r['error'] for r in rows if r['level'] == T0]):.3e}")
