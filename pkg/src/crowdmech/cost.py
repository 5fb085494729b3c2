"""Worker cost models.

Every downstream computation touches a cost model only through ``cost``,
``marginal_cost`` and ``inverse_marginal``, so any convex, increasing model
with ``cost(0) > 0`` can be swapped in for :class:`QuadraticCost`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

GRID_POINTS = 101
ASSUMPTION_TOL = 1e-9


def _check_quality(q):
    arr = np.asarray(q, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"quality must lie in [0, 1], got {q!r}")


@dataclass(frozen=True)
class QuadraticCost:
    """c(q) = (q + lam)^2 / (lam + 1)^2, normalised so that c(1) = 1.

    Smaller ``lam`` makes the cost more sensitive to quality.
    """

    lam: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise DomainError(f"lambda must be positive, got {self.lam!r}")

    @property
    def _scale(self) -> float:
        return (self.lam + 1.0) ** 2

    def cost(self, q):
        _check_quality(q)
        out = (np.asarray(q, dtype=float) + self.lam) ** 2 / self._scale
        return float(out) if out.ndim == 0 else out

    def marginal_cost(self, q):
        _check_quality(q)
        out = 2.0 * (np.asarray(q, dtype=float) + self.lam) / self._scale
        return float(out) if out.ndim == 0 else out

    def inverse_marginal(self, m):
        """Quality whose marginal cost is ``m``, clamped to [0, 1]."""
        q = self._scale * np.asarray(m, dtype=float) / 2.0 - self.lam
        q = np.clip(q, 0.0, 1.0)
        return float(q) if q.ndim == 0 else q


def check_assumptions(model, n: int = GRID_POINTS, tol: float = ASSUMPTION_TOL) -> None:
    """Raise DomainError unless ``model`` is convex and increasing with c(0) > 0.

    The checks run on an ``n``-point uniform grid over [0, 1]: a second
    difference test for convexity, positivity of the marginal cost, and
    positivity of the cost at zero.
    """
    q = np.linspace(0.0, 1.0, n)
    c = np.array([model.cost(x) for x in q])
    h = q[1] - q[0]
    second = c[2:] - 2.0 * c[1:-1] + c[:-2]
    if np.any(second < -tol):
        raise DomainError("cost function is not convex on [0, 1]")
    m = np.array([model.marginal_cost(x) for x in q])
    if np.any(m <= 0):
        raise DomainError("marginal cost must be positive on [0, 1]")
    fd = (c[2:] - c[:-2]) / (2 * h)
    if np.any(np.abs(fd - m[1:-1]) > max(1e-3, 10 * h * np.max(np.abs(m)))):
        raise DomainError("marginal_cost disagrees with the finite-difference slope of cost")
    if not model.cost(0.0) > 0:
        raise DomainError("cost of zero quality must be positive")
