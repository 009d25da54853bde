"""Dynamic-regret accounting against the time-varying optimal policy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Environment
from .ofu import RunRecord
from .riccati import backward_recursion, optimal_cost


@dataclass
class RegretLedger:
    """Per-episode realized vs. optimal cost and the running regret sum.

    Per-episode regret may be negative on a single noise realization; the
    cumulative sequence is the plain prefix sum, never clamped.
    """

    algo: str = ""
    env_name: str = ""
    seed: int = 0
    episodes: list = field(default_factory=list)
    realized: list = field(default_factory=list)
    optimal: list = field(default_factory=list)
    cumulative: list = field(default_factory=list)

    @property
    def regrets(self) -> np.ndarray:
        return np.asarray(self.realized) - np.asarray(self.optimal)


def _episode_value(env: Environment, k: int):
    """Cached (first value matrix, trace sum) of the true schedule for episode k."""
    if k not in env._episode_values:
        thetas = [env.theta(k, h) for h in range(1, env.H + 1)]
        sol = backward_recursion(thetas, env.Q, env.R, env.H)
        traces = float(np.trace(sol.P_seq[1:], axis1=1, axis2=2).sum())
        env._episode_values[k] = (sol.P_seq[0].copy(), traces)
    return env._episode_values[k]


def episode_optimal_cost(env: Environment, k: int, x1) -> float:
    """Expected cost of the optimal policy for episode k started at x1."""
    x1 = np.asarray(x1, dtype=float)
    p_first, traces = _episode_value(env, k)
    return float(x1 @ p_first @ x1) + env.noise_scale ** 2 * traces


def accumulate(ledger: RegretLedger, record: RunRecord, env: Environment) -> RegretLedger:
    """Append one regret row per episode covered by the record.

    The record must continue the ledger's episode sequence (a fresh ledger
    starts at episode 1), so regret over 1..K can equivalently be built from
    consecutive sub-records.
    """
    expected = ledger.episodes[-1] + 1 if ledger.episodes else 1
    if len(record.episodes) == 0 or record.episodes[0] != expected:
        raise ValueError(f"record starts at episode "
                         f"{record.episodes[0] if len(record.episodes) else '<none>'}, "
                         f"expected {expected}")
    if record.episodes[-1] > env.K:
        raise ValueError(f"record covers episode {record.episodes[-1]} "
                         f"but the environment has K={env.K}")
    if not ledger.algo:
        ledger.algo = record.algo
        ledger.env_name = env.name
        ledger.seed = record.seed
    total = ledger.cumulative[-1] if ledger.cumulative else 0.0
    for i, k in enumerate(record.episodes):
        realized = float(record.episode_costs[i])
        optimal = episode_optimal_cost(env, int(k), record.initial_states[i])
        total += realized - optimal
        ledger.episodes.append(int(k))
        ledger.realized.append(realized)
        ledger.optimal.append(optimal)
        ledger.cumulative.append(total)
    return ledger


def build_ledger(record: RunRecord, env: Environment) -> RegretLedger:
    return accumulate(RegretLedger(), record, env)


def total_variation_budget(env: Environment) -> float:
    """Whole-horizon drift: within-episode budgets plus episode-boundary jumps."""
    total = sum(env.variation_budget(k) for k in range(1, env.K + 1))
    for k in range(1, env.K):
        jump = env.theta(k + 1, 1).matrix - env.theta(k, env.H).matrix
        total += float(np.linalg.norm(jump))
    return total


def optimal_epoch_length(H: int, K: int, total_variation: float) -> int:
    """Epoch length balancing drift against restart frequency over H*K steps."""
    if total_variation <= 0:
        raise ValueError("total_variation must be > 0")
    raw = (H * K) ** (2.0 / 3.0) * total_variation ** (-2.0 / 3.0)
    return int(min(max(round(raw), 1), H * K))


def growth_exponent(cumulative) -> float:
    """Log-log slope of the cumulative sequence over its second half.

    Near 1.0 means linear growth; 2/3 matches a k^(2/3) law.
    """
    arr = np.asarray(cumulative, dtype=float)
    if arr.ndim != 1 or len(arr) < 10:
        raise ValueError("need a flat sequence of length >= 10")
    ks = np.arange(1, len(arr) + 1)
    half = len(arr) // 2
    tail = arr[half:]
    if (tail <= 0).all():
        raise ValueError("cumulative tail is entirely non-positive")
    eps = 1e-9
    slope, _ = np.polyfit(np.log(ks[half:]), np.log(np.maximum(tail, eps)), 1)
    return float(slope)
