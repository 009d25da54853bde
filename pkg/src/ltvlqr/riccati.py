"""Finite-horizon backward Riccati recursion and LQR gain synthesis.

`backward_recursion` is the reference implementation used for oracle
policies and per-episode optimal costs.  `constant_cost_and_gain` is a
compiled batch variant that evaluates many candidate models at once with
a constant parameter over the remaining horizon; it is the hot path of
the optimistic model search and is tested against the reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import cho_factor, cho_solve


class CandidateIllConditioned(Exception):
    """The value recursion broke down for a candidate model."""


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Value matrices and gains for a finite-horizon quadratic problem.

    P_seq[i] is the value matrix with span - i steps to go; P_seq[-1] = 0 is
    the terminal condition (costs beyond the horizon are zero).  K_seq[i] is
    the gain applied at the i-th step of the span.
    """

    P_seq: np.ndarray  # (span + 1, n, n)
    K_seq: np.ndarray  # (span, m, n)
    horizon_span: int


def backward_recursion(thetas, Q, R_cost, horizon_span=None) -> RiccatiSolution:
    """Backward value recursion for a (possibly time-varying) parameter list.

    thetas[i] is the model in force at the i-th step of the span.  The
    terminal value matrix is zero.  Each P is symmetrized after the update;
    (R + B'PB) is handled through its Cholesky factor, never inverted.
    """
    thetas = list(thetas)
    if horizon_span is None:
        horizon_span = len(thetas)
    if horizon_span < 1:
        raise ValueError("horizon_span must be >= 1")
    if len(thetas) != horizon_span:
        raise ValueError(f"expected {horizon_span} parameters, got {len(thetas)}")
    n = thetas[0].n
    m = thetas[0].m
    Q = np.asarray(Q, dtype=float)
    R_cost = np.asarray(R_cost, dtype=float)

    P_seq = np.zeros((horizon_span + 1, n, n))
    K_seq = np.zeros((horizon_span, m, n))
    P = np.zeros((n, n))
    # divergence shows up as overflow and is reported explicitly below
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(horizon_span - 1, -1, -1):
            a, b = thetas[i].a, thetas[i].b
            PA = P @ a
            BTPA = b.T @ PA
            G = R_cost + b.T @ P @ b
            if not (np.isfinite(G).all() and np.isfinite(BTPA).all()):
                raise CandidateIllConditioned(f"value matrix diverged at span index {i}")
            try:
                K = -cho_solve(cho_factor(G, lower=True), BTPA)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise CandidateIllConditioned(
                    f"gain solve failed at span index {i}") from exc
            P = Q + a.T @ PA + BTPA.T @ K
            P = 0.5 * (P + P.T)
            if not np.isfinite(P).all():
                raise CandidateIllConditioned(f"value matrix diverged at span index {i}")
            P_seq[i] = P
            K_seq[i] = K
    return RiccatiSolution(P_seq=P_seq, K_seq=K_seq, horizon_span=horizon_span)


def optimal_cost(sol: RiccatiSolution, x1, noise_scale: float) -> float:
    """Expected cost-to-go from x1: quadratic term plus the noise trace sum."""
    x1 = np.asarray(x1, dtype=float)
    quad = float(x1 @ sol.P_seq[0] @ x1)
    traces = float(np.trace(sol.P_seq[1:], axis1=1, axis2=2).sum())
    return quad + noise_scale ** 2 * traces


def gain_control(K, x) -> np.ndarray:
    """Linear state feedback u = K x."""
    K = np.asarray(K, dtype=float)
    x = np.asarray(x, dtype=float)
    if K.ndim != 2 or x.shape != (K.shape[1],):
        raise ValueError(f"gain {K.shape} does not match state {x.shape}")
    return K @ x


@njit(cache=True)
def _constant_recursion_batch(A, B, Q, R, span, x, sigma2):
    # Explicit scalar loops: tiny matrices, no allocations in the inner loop.
    c = A.shape[0]
    n = A.shape[1]
    mm = B.shape[2]
    costs = np.empty(c)
    gains = np.zeros((c, mm, n))
    P = np.empty((n, n))
    Pn = np.empty((n, n))
    PA = np.empty((n, n))
    PB = np.empty((n, mm))
    G = np.empty((mm, mm))
    L = np.empty((mm, mm))
    BTPA = np.empty((mm, n))
    Y = np.empty((mm, n))
    Kg = np.empty((mm, n))
    for i in range(c):
        for a in range(n):
            for b in range(n):
                P[a, b] = 0.0
        for a in range(mm):
            for b in range(n):
                Kg[a, b] = 0.0
        tr = 0.0
        ok = True
        for _ in range(span):
            for d in range(n):
                tr += P[d, d]
            for a in range(n):
                for b in range(n):
                    s = 0.0
                    for d in range(n):
                        s += P[a, d] * A[i, d, b]
                    PA[a, b] = s
                for b in range(mm):
                    s = 0.0
                    for d in range(n):
                        s += P[a, d] * B[i, d, b]
                    PB[a, b] = s
            for a in range(mm):
                for b in range(mm):
                    s = R[a, b]
                    for d in range(n):
                        s += B[i, d, a] * PB[d, b]
                    G[a, b] = s
                for b in range(n):
                    s = 0.0
                    for d in range(n):
                        s += B[i, d, a] * PA[d, b]
                    BTPA[a, b] = s
            # Kg = -G^{-1} BTPA via an in-place Cholesky of G (G is SPD for
            # any finite P >= 0 because R is SPD).
            if mm == 1:
                g = G[0, 0]
                if not (g > 0.0 and np.isfinite(g)):
                    ok = False
                    break
                for b in range(n):
                    Kg[0, b] = -BTPA[0, b] / g
            else:
                bad = False
                for a in range(mm):
                    for b in range(a + 1):
                        s = G[a, b]
                        for d in range(b):
                            s -= L[a, d] * L[b, d]
                        if a == b:
                            if not (s > 0.0 and np.isfinite(s)):
                                bad = True
                                break
                            L[a, a] = np.sqrt(s)
                        else:
                            L[a, b] = s / L[b, b]
                    if bad:
                        break
                if bad:
                    ok = False
                    break
                for col in range(n):
                    for a in range(mm):
                        s = BTPA[a, col]
                        for d in range(a):
                            s -= L[a, d] * Y[d, col]
                        Y[a, col] = s / L[a, a]
                    for a in range(mm - 1, -1, -1):
                        s = Y[a, col]
                        for d in range(a + 1, mm):
                            s -= L[d, a] * Kg[d, col]
                        Kg[a, col] = s / L[a, a]
                for a in range(mm):
                    for b in range(n):
                        Kg[a, b] = -Kg[a, b]
            for a in range(n):
                for b in range(n):
                    s = Q[a, b]
                    for d in range(n):
                        s += A[i, d, a] * PA[d, b]
                    for d in range(mm):
                        s += BTPA[d, a] * Kg[d, b]
                    Pn[a, b] = s
            for a in range(n):
                for b in range(n):
                    P[a, b] = 0.5 * (Pn[a, b] + Pn[b, a])
        if ok:
            s = 0.0
            for a in range(n):
                for b in range(n):
                    s += x[a] * P[a, b] * x[b]
            costs[i] = s + sigma2 * tr
            for a in range(mm):
                for b in range(n):
                    gains[i, a, b] = Kg[a, b]
        else:
            costs[i] = np.inf
    return costs, gains


def constant_cost_and_gain(stacked, Q, R_cost, span, x_eval, noise_scale):
    """Expected cost-to-go and first-step gain for a batch of constant models.

    stacked: (c, n+m, n) array of stacked parameters.  Returns (costs, gains)
    with costs[i] = inf where the recursion broke down; such candidates are
    skipped by the optimistic selection.
    """
    stacked = np.asarray(stacked, dtype=float)
    if stacked.ndim != 3:
        raise ValueError("expected a (c, n+m, n) batch of stacked parameters")
    if span < 1:
        raise ValueError("span must be >= 1")
    n = stacked.shape[2]
    A = np.ascontiguousarray(stacked[:, :n, :].transpose(0, 2, 1))
    B = np.ascontiguousarray(stacked[:, n:, :].transpose(0, 2, 1))
    x_eval = np.ascontiguousarray(x_eval, dtype=float)
    Q = np.ascontiguousarray(Q, dtype=float)
    R_cost = np.ascontiguousarray(R_cost, dtype=float)
    costs, gains = _constant_recursion_batch(A, B, Q, R_cost, int(span),
                                             x_eval, float(noise_scale) ** 2)
    bad = ~np.isfinite(costs) | ~np.isfinite(gains).all(axis=(1, 2))
    if bad.any():
        costs = np.where(bad, np.inf, costs)
        gains = np.where(bad[:, None, None], 0.0, gains)
    return costs, gains
