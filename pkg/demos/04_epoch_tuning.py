"""Choosing the restart epoch length.

The closed-form tuner balances total drift against restart frequency;
this demo prints it for a few budgets and then sweeps the epoch length
empirically on the frequently-switching preset.
"""

import numpy as np

from ltvlqr import (OfuConfig, build_environment, build_ledger,
                    optimal_epoch_length, run_r_ofu, total_variation_budget)

print("closed-form epoch tuner, horizon 100 x 100 episodes:")
for budget in (1.0, 10.0, 100.0, 1000.0):
    print(f"   total drift {budget:7.4g} -> epoch length "
          f"{optimal_epoch_length(100, 100, budget)}")

H, K = 60, 20
env = build_environment("frequent", H=H, K=K, noise_scale=0.1, seed=0)
drift = total_variation_budget(env)
suggestion = optimal_epoch_length(H, K, drift)
print()
print(f"frequent preset, H={H}, K={K}: whole-run drift {drift:.2f}, "
      f"tuner suggests L={suggestion}")
print("empirical sweep (2 seeds each):")
for L in (5, 10, 20, 30, 60):
    finals = []
    for seed in (0, 1):
        cfg = OfuConfig(num_candidates=15, epoch_length=L, window=20)
        led = build_ledger(run_r_ofu(env, cfg, seed), env)
        finals.append(led.cumulative[-1])
    print(f"   L={L:3d}: mean final regret {np.mean(finals):12.4g}")
print()
print("the dynamics here change every 20 steps, so epochs aligned with the")
print("switching period (L=20) discard stale data exactly when it goes bad.")
