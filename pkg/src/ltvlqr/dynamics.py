"""Linear time-varying environments with quadratic step costs.

An environment is a per-(episode, step) schedule of system matrices
(A, B) together with fixed cost matrices, a Gaussian disturbance law and
an initial-state law.  Environments are immutable after construction and
can be shared freely between concurrent runs; every run owns its private
random generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRESETS = ("switching", "slow", "frequent", "lti", "custom")

# Double-integrator style configurations used by the built-in presets.
_A1 = np.array([[1.0, 0.5], [0.0, 1.0]])
_B1 = np.array([[0.0], [1.2]])
_A2 = np.array([[1.0, 1.5], [0.0, 1.0]])
_B2 = np.array([[0.0], [0.9]])

# The frequently-switching preset draws uniformly from these four pairs.
_FREQUENT_CONFIGS = ((_A1, _B1), (_A2, _B2), (_A1, -_B1), (_A2, -_B2))
_FREQUENT_BLOCK = 20


@dataclass(frozen=True, eq=False)
class Dynamics:
    """Stacked system parameter of shape (n+m, n): the transpose of [A | B]."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[1] < 1 or mat.shape[0] <= mat.shape[1]:
            raise ValueError(f"stacked parameter must be (n+m, n) with n, m >= 1, got {mat.shape}")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_matrices(cls, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be square, got {a.shape}")
        if b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise ValueError(f"B must have {a.shape[0]} rows, got {b.shape}")
        return cls(np.vstack([a.T, b.T]))

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def m(self) -> int:
        return self.matrix.shape[0] - self.matrix.shape[1]

    @property
    def a(self) -> np.ndarray:
        return self.matrix[: self.n].T

    @property
    def b(self) -> np.ndarray:
        return self.matrix[self.n :].T

    def predict(self, z: np.ndarray) -> np.ndarray:
        """Mean next state for a stacked state/input vector z."""
        return self.matrix.T @ z


@dataclass(frozen=True, eq=False)
class Transition:
    """One observed step: regressor z = [x; u], realized next state, step cost."""

    z: np.ndarray
    x_next: np.ndarray
    cost: float


def _check_spd(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(mat).min() <= 0:
        raise ValueError(f"{name} must be positive definite")
    return mat


class Environment:
    """Episodic LTV system x' = A_{k,h} x + B_{k,h} u + w with cost x'Qx + u'Ru."""

    def __init__(self, thetas, Q=None, R=None, noise_scale=0.1,
                 initial_state_law="ball", name="custom"):
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim != 4:
            raise ValueError("thetas must have shape (K, H, n+m, n)")
        K, H, d, n = thetas.shape
        if H < 2 or K < 1 or d <= n:
            raise ValueError(f"invalid schedule shape {thetas.shape}")
        if noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        self._thetas = thetas
        self.K = K
        self.H = H
        self.n = n
        self.m = d - n
        self.Q = _check_spd(np.eye(n) if Q is None else Q, "Q")
        self.R = _check_spd(np.eye(self.m) if R is None else R, "R")
        if self.Q.shape[0] != n or self.R.shape[0] != self.m:
            raise ValueError("cost matrix dimensions do not match the schedule")
        if isinstance(initial_state_law, str) and initial_state_law not in ("ball", "zero"):
            raise ValueError(f"unknown initial state law {initial_state_law!r}")
        self.noise_scale = float(noise_scale)
        self.initial_state_law = initial_state_law
        self.name = name
        self._budgets = {}
        self._episode_values = {}

    def _index(self, k: int, h: int):
        if not (1 <= k <= self.K and 1 <= h <= self.H):
            raise ValueError(f"(k={k}, h={h}) outside schedule [1,{self.K}] x [1,{self.H}]")
        return k - 1, h - 1

    def theta(self, k: int, h: int) -> Dynamics:
        i, j = self._index(k, h)
        return Dynamics(self._thetas[i, j].copy())

    def episode_schedule(self, k: int) -> np.ndarray:
        """Stacked parameters for episode k, shape (H, n+m, n)."""
        i, _ = self._index(k, 1)
        return self._thetas[i]

    def step(self, k: int, h: int, x, u, rng: np.random.Generator) -> Transition:
        i, j = self._index(k, h)
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if x.shape != (self.n,) or u.shape != (self.m,):
            raise ValueError(f"expected x of shape ({self.n},) and u of shape ({self.m},), "
                             f"got {x.shape} and {u.shape}")
        theta = self._thetas[i, j]
        w = rng.standard_normal(self.n) * self.noise_scale
        z = np.concatenate([x, u])
        x_next = theta.T @ z + w
        cost = float(x @ self.Q @ x + u @ self.R @ u)
        return Transition(z=z, x_next=x_next, cost=cost)

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        law = self.initial_state_law
        if law == "zero":
            return np.zeros(self.n)
        if law == "ball":
            # direction uniform on the sphere, radius uniform on [0, 1]
            v = rng.standard_normal(self.n)
            norm = np.linalg.norm(v)
            while norm == 0.0:
                v = rng.standard_normal(self.n)
                norm = np.linalg.norm(v)
            return (rng.uniform() / norm) * v
        x = np.asarray(law(rng), dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"initial state law returned shape {x.shape}, expected ({self.n},)")
        if np.linalg.norm(x) > 1 + 1e-12:
            raise ValueError("initial state law must return a vector with norm <= 1")
        return x

    def variation_budget(self, k: int) -> float:
        """Total parameter drift sum_h ||theta_{k,h+1} - theta_{k,h}||_F within episode k."""
        i, _ = self._index(k, 1)
        if i not in self._budgets:
            diffs = np.diff(self._thetas[i], axis=0)
            self._budgets[i] = float(np.sqrt((diffs ** 2).sum(axis=(1, 2))).sum())
        return self._budgets[i]


def build_environment(preset, H=100, K=100, noise_scale=0.1, seed=0,
                      initial_state_law="ball", Q=None, R=None, schedule=None):
    """Construct one of the named presets, or a custom schedule.

    switching: (A1, B1) for the first half of each episode, (A2, B2) after.
    slow:      fixed A with the input column growing as h/20.
    frequent:  a fresh uniform draw among four configurations every 20 steps,
               re-randomized per episode from `seed`.
    lti:       (A1, B1) throughout.
    custom:    `schedule` gives the stacked parameters, either (H, n+m, n)
               applied to every episode or a full (K, H, n+m, n) array.
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}, expected one of {PRESETS}")
    if H < 2:
        raise ValueError("H must be >= 2")
    if K < 1:
        raise ValueError("K must be >= 1")

    if preset == "custom":
        if schedule is None:
            raise ValueError("custom preset requires a schedule")
        schedule = np.asarray(schedule, dtype=float)
        if schedule.ndim == 3:
            thetas = np.broadcast_to(schedule, (K,) + schedule.shape).copy()
        elif schedule.ndim == 4:
            thetas = schedule.copy()
        else:
            raise ValueError("schedule must have shape (H, n+m, n) or (K, H, n+m, n)")
        if thetas.shape[:2] != (K, H):
            raise ValueError(f"schedule covers {thetas.shape[:2]}, expected ({K}, {H})")
    elif preset == "frequent":
        if H < _FREQUENT_BLOCK:
            raise ValueError(f"frequent preset requires H >= {_FREQUENT_BLOCK}")
        rng = np.random.default_rng(seed)
        stacked = [Dynamics.from_matrices(a, b).matrix for a, b in _FREQUENT_CONFIGS]
        n_blocks = -(-H // _FREQUENT_BLOCK)
        thetas = np.empty((K, H, 3, 2))
        for i in range(K):
            picks = rng.integers(0, len(stacked), size=n_blocks)
            for j in range(H):
                thetas[i, j] = stacked[picks[j // _FREQUENT_BLOCK]]
    else:
        row = np.empty((H, 3, 2))
        if preset == "switching":
            first = Dynamics.from_matrices(_A1, _B1).matrix
            second = Dynamics.from_matrices(_A2, _B2).matrix
            for j in range(H):
                row[j] = first if (j + 1) <= H / 2 else second
        elif preset == "slow":
            a = np.array([[1.0, 1.0], [0.0, 1.0]])
            for j in range(H):
                row[j] = Dynamics.from_matrices(a, np.array([[0.0], [(j + 1) / 20.0]])).matrix
        else:  # lti
            row[:] = Dynamics.from_matrices(_A1, _B1).matrix
        thetas = np.broadcast_to(row, (K,) + row.shape).copy()

    return Environment(thetas, Q=Q, R=R, noise_scale=noise_scale,
                       initial_state_law=initial_state_law, name=preset)
