"""Exact efficient frontier of the long-only, fully invested Markowitz model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data_io import AssetUniverse, FrontierRecord
from .errors import DomainError
from .model import pareto_filter, portfolio_stats

GAP_TOL = 1e-10
MAX_ITER = 100_000
STANDARD_TAG = "STD"


class QPSolution(NamedTuple):
    weights: np.ndarray
    gap: float
    iterations: int


def solve_qp_simplex(universe: AssetUniverse, lam: float, tol: float = GAP_TOL,
                     max_iter: int = MAX_ITER) -> QPSolution:
    """Minimise ``lam x'Sx - (1 - lam) mu'x`` over the unit simplex.

    Frank-Wolfe with away steps and exact line search, started from equal
    weights. Plain Frank-Wolfe only approaches faces of the simplex
    sublinearly; away steps remove mass from the worst active vertex and
    drop it to exactly zero, which gives linear convergence here. Stops
    when the Frank-Wolfe duality gap ``g'(x - s)`` falls to ``tol``.
    """
    if not 0.0 <= lam <= 1.0 or not np.isfinite(lam):
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    S = universe.covariance
    mu = universe.mean_returns
    n = universe.n
    if lam == 0.0:
        # linear objective: one full step lands on the best vertex, and the
        # gap there is exactly zero (ties go to the lowest index)
        x = np.zeros(n)
        x[int(np.argmax(mu))] = 1.0
        return QPSolution(x, 0.0, 1)
    x = np.full(n, 1.0 / n)
    Sx = S @ x
    gap = np.inf
    for it in range(max_iter + 1):
        g = 2.0 * lam * Sx - (1.0 - lam) * mu
        s = int(np.argmin(g))
        gx = float(g @ x)
        gap = gx - g[s]
        if gap <= tol or it == max_iter:
            break
        support = np.flatnonzero(x > 0)
        v = int(support[np.argmax(g[support])])
        away_gap = g[v] - gx
        if away_gap > gap and x[v] < 1.0:
            d = x.copy()
            d[v] -= 1.0
            Sd = Sx - S[:, v]
            step_max = x[v] / (1.0 - x[v])
            slope = -away_gap
        else:
            v = -1
            d = -x
            d[s] += 1.0
            Sd = S[:, s] - Sx
            step_max = 1.0
            slope = -gap
        curvature = 2.0 * lam * float(d @ Sd)
        if curvature <= 1e-18:
            step = step_max if slope < 0 else 0.0
        else:
            step = min(max(-slope / curvature, 0.0), step_max)
        x = x + step * d
        Sx = Sx + step * Sd
        if v >= 0 and step == step_max:
            x[v] = 0.0
            Sx = S @ x
        np.maximum(x, 0.0, out=x)
    return QPSolution(x, float(gap), it)


@dataclass(frozen=True)
class StandardFrontier:
    """Non-dominated exact solutions, sorted by ascending variance."""

    points: tuple[FrontierRecord, ...]
    lambda_count: int
    gaps: tuple[float, ...] = ()
    iterations: tuple[int, ...] = ()

    @property
    def variances(self) -> np.ndarray:
        return np.array([p.variance for p in self.points])

    @property
    def returns(self) -> np.ndarray:
        return np.array([p.mean_return for p in self.points])

    @property
    def max_gap(self) -> float:
        return max(self.gaps) if self.gaps else 0.0


def trace_standard_frontier(universe: AssetUniverse, lambda_count: int) -> StandardFrontier:
    """Solve on ``lambda_j = j / (lambda_count - 1)`` and keep the non-dominated points."""
    if lambda_count < 2:
        raise DomainError(f"need at least 2 lambda values, got {lambda_count}")
    records, gaps, iters = [], [], []
    for j in range(lambda_count):
        lam = j / (lambda_count - 1)
        sol = solve_qp_simplex(universe, lam)
        ret, var = portfolio_stats(universe, sol.weights)
        weights = tuple((int(i), float(sol.weights[i])) for i in np.flatnonzero(sol.weights > 0))
        records.append(FrontierRecord(lam, ret, var, lam * var - (1.0 - lam) * ret, STANDARD_TAG, weights))
        gaps.append(sol.gap)
        iters.append(sol.iterations)
    return StandardFrontier(tuple(pareto_filter(records)), lambda_count, tuple(gaps), tuple(iters))


def frontier_from_records(records) -> StandardFrontier:
    """Wrap records read back from CSV as a reference frontier."""
    pts = tuple(pareto_filter(records))
    return StandardFrontier(pts, len(records))
