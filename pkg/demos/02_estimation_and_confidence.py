"""Ridge estimation and the confidence region around it.

Drives the time-invariant preset with a stabilizing gain plus exploratory
dither, watches the restarting and sliding-window estimators converge,
and checks how often the true parameters stay inside the confidence
region across many replays.
"""

import numpy as np

from ltvlqr import RidgeEstimator, backward_recursion, build_environment, shaped_norm

env = build_environment("lti", H=100, K=1, noise_scale=0.1, seed=0)
truth = env.theta(1, 1)
gain = backward_recursion([truth] * env.H, env.Q, env.R, env.H).K_seq[0]

print("single run: estimation error and confidence radius by step")
noise_rng = np.random.default_rng(1)
policy_rng = np.random.default_rng(2)
est = RidgeEstimator(env.n + env.m, env.n, lam=1.0)
x = env.initial_state(noise_rng)
for h in range(1, env.H + 1):
    err = shaped_norm(truth.matrix - est.point_estimate().matrix, est.v)
    radius = est.confidence_radius(0.1, env.noise_scale, 0.0, span=env.H)
    if h in (1, 2, 5, 10, 25, 50, 100):
        flat = np.linalg.norm(truth.matrix - est.point_estimate().matrix)
        print(f"   h={h:3d}  V-norm error {err:7.3f}  radius {radius:7.3f}  "
              f"plain error {flat:6.3f}")
    u = gain @ x + policy_rng.standard_normal(env.m)
    tr = env.step(1, h, x, u, noise_rng)
    est.update(tr)
    x = tr.x_next

print()
print("coverage over 100 replays (both estimator modes, drift budget 0):")
for mode, window in (("restart", None), ("sliding", env.H)):
    inside = total = 0
    for seed in range(100):
        noise_ss, policy_ss = np.random.SeedSequence(seed).spawn(2)
        noise_rng = np.random.default_rng(noise_ss)
        policy_rng = np.random.default_rng(policy_ss)
        est = RidgeEstimator(env.n + env.m, env.n, lam=1.0, mode=mode,
                             window=window)
        x = env.initial_state(noise_rng)
        for h in range(1, env.H + 1):
            err = shaped_norm(truth.matrix - est.point_estimate().matrix, est.v)
            radius = est.confidence_radius(0.1, env.noise_scale, 0.0, span=env.H,
                                           horizon=env.H if mode == "sliding" else None)
            inside += err <= radius
            total += 1
            u = gain @ x + policy_rng.standard_normal(env.m)
            tr = env.step(1, h, x, u, noise_rng)
            est.update(tr)
            x = tr.x_next
    print(f"   {mode:8s}: {inside / total:.3f} of (run, step) pairs covered "
          f"(target: at least 0.90)")
