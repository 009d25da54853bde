"""Tour of the built-in environments.

Builds each preset, prints its schedule structure and per-episode drift
budget, and rolls out a short noisy trajectory under zero control to show
the raw simulation loop.
"""

import numpy as np

from ltvlqr import build_environment

H, K = 100, 3

for preset in ("lti", "switching", "slow", "frequent"):
    env = build_environment(preset, H=H, K=K, noise_scale=0.1, seed=0)
    print(f"== {preset}: state dim {env.n}, input dim {env.m}, "
          f"H={env.H}, K={env.K}")
    for h in (1, 50, 51, 100):
        th = env.theta(1, h)
        print(f"   step {h:3d}: A row0 {np.round(th.a[0], 2)}  "
              f"B col {np.round(th.b[:, 0], 2)}")
    budgets = [env.variation_budget(k) for k in range(1, K + 1)]
    print(f"   per-episode drift budgets: {np.round(budgets, 3)}")

print()
print("zero-control rollout on the switching preset (episode 1):")
env = build_environment("switching", H=H, K=1, noise_scale=0.1, seed=0)
rng = np.random.default_rng(7)
x = env.initial_state(rng)
total = 0.0
for h in range(1, env.H + 1):
    tr = env.step(1, h, x, np.zeros(env.m), rng)
    total += tr.cost
    if h % 20 == 0:
        print(f"   h={h:3d}  |x|={np.linalg.norm(x):8.3f}  running cost {total:10.2f}")
    x = tr.x_next
print(f"   episode cost without any control: {total:.2f}")
print("   (the drift is why a controller, and an adaptive one, is needed)")
