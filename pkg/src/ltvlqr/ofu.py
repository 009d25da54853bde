"""Optimistic online control loops and baseline controllers.

Per step, both algorithms form a confidence ellipsoid around the current
ridge estimate, sample candidate models inside it, pick the candidate
whose predicted cost over the remaining horizon is smallest, and apply
that candidate's first-step gain.  The `r-ofu` variant discards the
estimator at fixed epoch boundaries; the `sw-ofu` variant slides a
fixed-capacity data window instead.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import Dynamics, Environment
from .estimation import ConfidenceEllipsoid, RidgeEstimator
from .riccati import backward_recursion, constant_cost_and_gain

ALGORITHMS = ("r-ofu", "sw-ofu", "oracle-lqr", "zero", "omniscient")
BASELINES = ("oracle_lqr", "zero_control", "omniscient")
_BASELINE_KIND = {"oracle-lqr": "oracle_lqr", "zero": "zero_control",
                  "omniscient": "omniscient"}


@dataclass(frozen=True)
class OfuConfig:
    num_candidates: int = 50
    perturb_scale: float = 0.5
    epoch_length: int = 20
    window: int = 20
    lam: float = 1.0
    delta: float = 0.1
    evaluate_at_current_state: bool = False

    def __post_init__(self):
        if self.num_candidates < 1:
            raise ValueError("num_candidates must be >= 1")
        if self.perturb_scale < 0:
            raise ValueError("perturb_scale must be >= 0")
        if self.epoch_length < 1:
            raise ValueError("epoch_length must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.lam <= 0:
            raise ValueError("lam must be > 0")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class RunRecord:
    """Full per-step log of one run, plus per-episode totals."""

    algo: str
    seed: int
    episodes: np.ndarray      # (E,) 1-based episode indices
    states: np.ndarray        # (E, H, n) state before each transition
    inputs: np.ndarray        # (E, H, m)
    costs: np.ndarray         # (E, H)
    chosen: np.ndarray        # (E, H) selected candidate index, -1 for baselines
    radii: np.ndarray         # (E, H) confidence radius, nan for baselines
    logdets: np.ndarray       # (E, H) ln det V at decision time, nan for baselines
    opt_costs: np.ndarray     # (E, H) selected model's predicted cost-to-go
    center_costs: np.ndarray  # (E, H) center estimate's predicted cost-to-go
    episode_costs: np.ndarray  # (E,)

    @property
    def initial_states(self) -> np.ndarray:
        return self.states[:, 0]

    def slice_episodes(self, lo: int, hi: int) -> "RunRecord":
        """Sub-record covering episodes lo..hi (1-based, inclusive)."""
        eps = list(self.episodes)
        if lo not in eps or hi not in eps or hi < lo:
            raise ValueError(f"episodes {lo}..{hi} not covered by this record")
        i, j = eps.index(lo), eps.index(hi) + 1
        return replace(self, episodes=self.episodes[i:j], states=self.states[i:j],
                       inputs=self.inputs[i:j], costs=self.costs[i:j],
                       chosen=self.chosen[i:j], radii=self.radii[i:j],
                       logdets=self.logdets[i:j], opt_costs=self.opt_costs[i:j],
                       center_costs=self.center_costs[i:j],
                       episode_costs=self.episode_costs[i:j])


@dataclass(frozen=True, eq=False)
class OptimisticChoice:
    index: int
    theta: Dynamics
    cost: float
    gain: np.ndarray
    center_cost: float


def generate_candidates(ell: ConfidenceEllipsoid, cfg: OfuConfig,
                        rng: np.random.Generator) -> list[Dynamics]:
    """Center plus uniformly perturbed copies, all projected into the region."""
    center = ell.center.matrix
    out = [ell.center]
    extra = cfg.num_candidates - 1
    if extra > 0:
        devs = rng.uniform(-cfg.perturb_scale, cfg.perturb_scale,
                           size=(extra,) + center.shape)
        norms = np.sqrt(np.einsum("cji,jk,cki->c", devs, ell.shaping, devs))
        scale = np.where(norms > ell.radius,
                         ell.radius / np.where(norms > 0, norms, 1.0), 1.0)
        for i in range(extra):
            out.append(Dynamics(center + scale[i] * devs[i]))
    return out


def select_optimistic(candidates, Q, R_cost, horizon_span, x_eval,
                      noise_scale) -> OptimisticChoice:
    """Candidate with the lowest predicted cost-to-go; ties go to the lowest index.

    Candidates whose recursion breaks down are skipped (cost inf).  If every
    candidate is skipped, the first candidate is returned with cost inf and a
    zero gain.
    """
    if len(candidates) == 0:
        raise ValueError("candidate list is empty")
    stacked = np.stack([c.matrix for c in candidates])
    costs, gains = constant_cost_and_gain(stacked, Q, R_cost, horizon_span,
                                          x_eval, noise_scale)
    idx = int(np.argmin(costs))
    if not np.isfinite(costs[idx]):
        return OptimisticChoice(index=0, theta=candidates[0], cost=float("inf"),
                                gain=np.zeros_like(gains[0]),
                                center_cost=float(costs[0]))
    return OptimisticChoice(index=idx, theta=candidates[idx],
                            cost=float(costs[idx]), gain=gains[idx],
                            center_cost=float(costs[0]))


def _spawn_rngs(seed: int):
    # one stream for environment randomness, one for candidate perturbations,
    # so runs with the same seed see identical noise across algorithms
    noise_ss, cand_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(noise_ss), np.random.default_rng(cand_ss)


class _StepLogs:
    def __init__(self, K, H, n, m):
        self.states = np.zeros((K, H, n))
        self.inputs = np.zeros((K, H, m))
        self.costs = np.zeros((K, H))
        self.chosen = np.full((K, H), -1, dtype=int)
        self.radii = np.full((K, H), np.nan)
        self.logdets = np.full((K, H), np.nan)
        self.opt_costs = np.full((K, H), np.nan)
        self.center_costs = np.full((K, H), np.nan)

    def record(self, algo, seed, K):
        return RunRecord(algo=algo, seed=seed, episodes=np.arange(1, K + 1),
                         states=self.states, inputs=self.inputs, costs=self.costs,
                         chosen=self.chosen, radii=self.radii, logdets=self.logdets,
                         opt_costs=self.opt_costs, center_costs=self.center_costs,
                         episode_costs=self.costs.sum(axis=1))


def _run_optimistic(env: Environment, cfg: OfuConfig, seed: int, algo: str) -> RunRecord:
    noise_rng, cand_rng = _spawn_rngs(seed)
    K, H, n, m = env.K, env.H, env.n, env.m
    sliding = algo == "sw-ofu"
    span = cfg.window if sliding else cfg.epoch_length
    logs = _StepLogs(K, H, n, m)
    for ki in range(K):
        k = ki + 1
        x = env.initial_state(noise_rng)
        x_start = x
        budget = env.variation_budget(k)
        if sliding:
            est = RidgeEstimator(n + m, n, cfg.lam, mode="sliding", window=cfg.window)
        else:
            est = RidgeEstimator(n + m, n, cfg.lam, mode="restart")
        for hi in range(H):
            h = hi + 1
            if not sliding and hi % cfg.epoch_length == 0:
                est.reset()
            ell = est.ellipsoid(cfg.delta, env.noise_scale, budget, span,
                                horizon=H if sliding else None)
            cands = generate_candidates(ell, cfg, cand_rng)
            x_eval = x if cfg.evaluate_at_current_state else x_start
            choice = select_optimistic(cands, env.Q, env.R, H - h + 1,
                                       x_eval, env.noise_scale)
            u = choice.gain @ x
            tr = env.step(k, h, x, u, noise_rng)
            logs.states[ki, hi] = x
            logs.inputs[ki, hi] = u
            logs.costs[ki, hi] = tr.cost
            logs.chosen[ki, hi] = choice.index
            logs.radii[ki, hi] = ell.radius
            logs.logdets[ki, hi] = est.logdet()
            logs.opt_costs[ki, hi] = choice.cost
            logs.center_costs[ki, hi] = choice.center_cost
            est.update(tr)
            x = tr.x_next
    return logs.record(algo, seed, K)


def run_r_ofu(env: Environment, cfg: OfuConfig, seed: int) -> RunRecord:
    """Epoch-restarting optimistic control: estimator reset every epoch_length steps."""
    return _run_optimistic(env, cfg, seed, "r-ofu")


def run_sw_ofu(env: Environment, cfg: OfuConfig, seed: int) -> RunRecord:
    """Sliding-window optimistic control: estimator keeps the last `window` steps."""
    return _run_optimistic(env, cfg, seed, "sw-ofu")


def run_baseline(env: Environment, which: str, seed: int) -> RunRecord:
    """Reference controllers sharing the noise stream of the optimistic runs.

    oracle_lqr plans once per episode against the episode's step-1 dynamics
    held constant, so it cannot adapt to within-episode variation.
    omniscient plays the optimal time-varying policy from the true schedule.
    zero_control applies u = 0 throughout.
    """
    if which not in BASELINES:
        raise ValueError(f"unknown baseline {which!r}, expected one of {BASELINES}")
    noise_rng, _ = _spawn_rngs(seed)
    K, H, n, m = env.K, env.H, env.n, env.m
    logs = _StepLogs(K, H, n, m)
    label = {v: k for k, v in _BASELINE_KIND.items()}[which]
    for ki in range(K):
        k = ki + 1
        x = env.initial_state(noise_rng)
        if which == "oracle_lqr":
            sol = backward_recursion([env.theta(k, 1)] * H, env.Q, env.R, H)
        elif which == "omniscient":
            sol = backward_recursion([env.theta(k, h) for h in range(1, H + 1)],
                                     env.Q, env.R, H)
        for hi in range(H):
            u = np.zeros(m) if which == "zero_control" else sol.K_seq[hi] @ x
            tr = env.step(k, hi + 1, x, u, noise_rng)
            logs.states[ki, hi] = x
            logs.inputs[ki, hi] = u
            logs.costs[ki, hi] = tr.cost
            x = tr.x_next
    return logs.record(label, seed, K)


def run_algorithm(label: str, env: Environment, cfg: OfuConfig, seed: int) -> RunRecord:
    """Dispatch on the stable algorithm labels used by the experiment harness."""
    if label == "r-ofu":
        return run_r_ofu(env, cfg, seed)
    if label == "sw-ofu":
        return run_sw_ofu(env, cfg, seed)
    if label in _BASELINE_KIND:
        return run_baseline(env, _BASELINE_KIND[label], seed)
    raise ValueError(f"unknown algorithm {label!r}, expected one of {ALGORITHMS}")
