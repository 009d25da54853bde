"""Ridge regression sufficient statistics and confidence ellipsoids.

Two forgetting schemes are supported: `restart`, which discards all data
when `reset` is called (the caller owns the epoch schedule), and
`sliding`, which keeps only the most recent `window` transitions by
subtracting evicted contributions.  Both maintain the regularized Gram
matrix V and cross moment U, from which the point estimate solves
V theta = U through a Cholesky factorization.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import log, sqrt

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .dynamics import Dynamics, Transition

MODES = ("restart", "sliding")


def shaped_norm(mat: np.ndarray, shaping: np.ndarray) -> float:
    """Weighted Frobenius norm sqrt(trace(M' S M))."""
    return float(np.sqrt(np.einsum("ji,jk,ki->", mat, shaping, mat)))


class RidgeEstimator:
    def __init__(self, dim_in: int, dim_out: int, lam: float,
                 mode: str = "restart", window: int | None = None):
        if lam <= 0:
            raise ValueError("lam must be > 0")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if mode == "sliding":
            if window is None or window < 1:
                raise ValueError("sliding mode requires window >= 1")
        elif window is not None:
            raise ValueError("window only applies to sliding mode")
        self.dim_in = dim_in
        self.dim_out = dim_out
        self.lam = float(lam)
        self.mode = mode
        self.window = window
        self.v = lam * np.eye(dim_in)
        self.cross = np.zeros((dim_in, dim_out))
        self.count = 0
        self.queue: deque[Transition] = deque()

    def update(self, t: Transition) -> None:
        z = np.asarray(t.z, dtype=float)
        xn = np.asarray(t.x_next, dtype=float)
        if z.shape != (self.dim_in,) or xn.shape != (self.dim_out,):
            raise ValueError(f"transition dims {z.shape}/{xn.shape} do not match "
                             f"({self.dim_in},)/({self.dim_out},)")
        self.v += np.outer(z, z)
        self.cross += np.outer(z, xn)
        self.count += 1
        if self.mode == "sliding":
            self.queue.append(t)
            if len(self.queue) > self.window:
                old = self.queue.popleft()
                self.v -= np.outer(old.z, old.z)
                self.cross -= np.outer(old.z, old.x_next)
                self.count -= 1

    def reset(self) -> None:
        if self.mode != "restart":
            raise ValueError("reset is only defined for restart mode")
        self.v = self.lam * np.eye(self.dim_in)
        self.cross = np.zeros((self.dim_in, self.dim_out))
        self.count = 0

    def _factor(self):
        try:
            return cho_factor(self.v, lower=True)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("gram matrix is numerically singular") from exc

    def point_estimate(self) -> Dynamics:
        return Dynamics(cho_solve(self._factor(), self.cross))

    def logdet(self) -> float:
        """ln det(V), computed from the Cholesky diagonal."""
        factor, _ = self._factor()
        return 2.0 * float(np.log(np.diag(factor)).sum())

    def logdet_ratio(self) -> float:
        """ln det(V) - ln det(lam I); never goes through raw determinants."""
        return self.logdet() - self.dim_in * log(self.lam)

    def confidence_radius(self, delta: float, noise_scale: float,
                          variation_budget: float, span: int,
                          horizon: int | None = None) -> float:
        """High-probability radius: regularization + noise + drift terms.

        The restart form uses ln(2/delta); the sliding form needs the episode
        horizon and uses ln(2H/delta).  `span` is the epoch length (restart)
        or the window capacity (sliding).
        """
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if span < 1:
            raise ValueError("span must be >= 1")
        if self.mode == "sliding":
            if horizon is None or horizon < 1:
                raise ValueError("sliding mode requires the episode horizon")
            log_term = log(2.0 * horizon / delta)
        else:
            log_term = log(2.0 / delta)
        noise_term = noise_scale * sqrt(2.0 * log_term + self.dim_out * self.logdet_ratio())
        drift_term = sqrt(span * self.dim_in) / sqrt(self.lam) * variation_budget
        return sqrt(self.lam) + noise_term + drift_term

    def ellipsoid(self, delta: float, noise_scale: float, variation_budget: float,
                  span: int, horizon: int | None = None) -> "ConfidenceEllipsoid":
        radius = self.confidence_radius(delta, noise_scale, variation_budget,
                                        span, horizon)
        return ConfidenceEllipsoid(center=self.point_estimate(),
                                   shaping=self.v.copy(), radius=radius)


@dataclass(frozen=True, eq=False)
class ConfidenceEllipsoid:
    """Region {theta : ||theta - center||_shaping <= radius}."""

    center: Dynamics
    shaping: np.ndarray
    radius: float

    # projections land on the boundary up to rounding, so membership
    # tolerates a small relative slack
    _REL_TOL = 1e-9

    def deviation_norm(self, theta: Dynamics) -> float:
        return shaped_norm(theta.matrix - self.center.matrix, self.shaping)

    def membership(self, theta: Dynamics) -> bool:
        return self.deviation_norm(theta) <= self.radius * (1.0 + self._REL_TOL)

    def project(self, theta: Dynamics) -> Dynamics:
        dev = theta.matrix - self.center.matrix
        norm = shaped_norm(dev, self.shaping)
        if norm <= self.radius:
            return theta
        return Dynamics(self.center.matrix + (self.radius / norm) * dev)
