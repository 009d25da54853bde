"""Optimistic controllers against the baselines, with regret curves.

Runs a reduced version of the headline comparison on each drifting
preset, prints seed-averaged cumulative regret, and (when matplotlib is
available) saves regret curves to regret_comparison.png.
"""

import numpy as np

from ltvlqr import OfuConfig, build_ledger, build_environment, run_algorithm

H, K, SEEDS = 60, 30, (0, 1)
cfg = OfuConfig(num_candidates=20, epoch_length=20, window=20)

curves = {}
for preset in ("switching", "frequent", "slow"):
    env = build_environment(preset, H=H, K=K, noise_scale=0.1, seed=0)
    curves[preset] = {}
    print(f"== {preset}")
    for algo in ("r-ofu", "sw-ofu", "oracle-lqr", "zero"):
        cums = []
        for seed in SEEDS:
            rec = run_algorithm(algo, env, cfg, seed)
            cums.append(build_ledger(rec, env).cumulative)
        mean = np.mean(cums, axis=0)
        curves[preset][algo] = mean
        print(f"   {algo:11s} cumulative regret at K={K}: {mean[-1]:12.4g}")
    r, sw = curves[preset]["r-ofu"][-1], curves[preset]["sw-ofu"][-1]
    better = "r-ofu" if r <= sw else "sw-ofu"
    print(f"   -> restarting vs sliding window: {better} wins here")

print()
print("rule of thumb: restarting adapts faster to abrupt jumps, the sliding")
print("window tracks gradual drift more cheaply.")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the plot")
else:
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6), sharex=True)
    for ax, preset in zip(axes, ("switching", "frequent", "slow")):
        for algo, curve in curves[preset].items():
            ax.plot(range(1, K + 1), curve, label=algo, linewidth=1.2)
        ax.set_title(preset)
        ax.set_xlabel("episode")
        ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
    axes[0].set_ylabel("cumulative regret")
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig("regret_comparison.png", dpi=150)
    print("saved regret_comparison.png")
