"""Closed-form two-objective test problem.

Both objectives are squared distances to fixed anchor points a and b, so the
Pareto set is the segment [a, b] and every optimum is known analytically.
Used by tests and the CLI self-test to validate the optimizers end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Array = np.ndarray


@dataclass
class BiQuadratic:
    """L1 = ||theta - a||^2, L2 = ||theta - b||^2."""

    a: Array
    b: Array

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)

    @property
    def n_params(self) -> int:
        return self.a.size

    def init_theta(self, seed: int) -> Array:
        rng = np.random.default_rng(seed)
        return rng.uniform(-2.0, 2.0, size=self.n_params)

    def losses(self, theta: Array) -> tuple[float, float]:
        da = theta - self.a
        db = theta - self.b
        return float(da @ da), float(db @ db)

    def losses_and_grads(self, theta: Array):
        da = theta - self.a
        db = theta - self.b
        return float(da @ da), float(db @ db), 2.0 * da, 2.0 * db

    def validation_loss(self, theta: Array) -> float:
        # no held-out physics points; zero keeps threshold selection on the
        # final epoch
        return 0.0

    # closed-form geometry, used as test oracles ------------------------------

    def ws_minimizer(self, alpha: float) -> Array:
        """Minimizer of alpha * L1 + (1 - alpha) * L2."""
        return alpha * self.a + (1.0 - alpha) * self.b

    def distance_to_segment(self, theta: Array) -> float:
        d = self.a - self.b
        denom = float(d @ d)
        if denom == 0.0:
            return float(np.linalg.norm(theta - self.a))
        s = float(np.clip((theta - self.b) @ d / denom, 0.0, 1.0))
        return float(np.linalg.norm(theta - (self.b + s * d)))

    def front_points(self, n: int = 512) -> Array:
        """Dense sampling of the exact front image."""
        s = np.linspace(0.0, 1.0, n)
        gap = float((self.a - self.b) @ (self.a - self.b))
        return np.column_stack([(1.0 - s) ** 2 * gap, s ** 2 * gap])
