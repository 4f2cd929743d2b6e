"""The bounded, cardinality-constrained mean-variance model and Pareto dominance."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .data_io import AssetUniverse, FrontierRecord
from .errors import DomainError

# variances in (-NEG_VARIANCE_TOL, 0) are rounding noise from a PSD matrix
NEG_VARIANCE_TOL = 1e-12
FEASIBILITY_TOL = 1e-9


def _dense(universe: AssetUniverse, weights) -> np.ndarray:
    x = np.asarray(weights, dtype=float)
    if x.shape != (universe.n,):
        raise DomainError(f"weights must have {universe.n} entries, got shape {x.shape}")
    return x


def portfolio_stats(universe: AssetUniverse, weights) -> tuple[float, float]:
    """Return ``(mean_return, variance)`` of a dense weight vector."""
    x = _dense(universe, weights)
    ret = float(universe.mean_returns @ x)
    var = float(x @ universe.covariance @ x)
    if var < 0:
        if var < -NEG_VARIANCE_TOL:
            raise DomainError(f"negative portfolio variance {var}: covariance is not PSD")
        var = 0.0
    return ret, var


def objective(universe: AssetUniverse, lam: float, weights) -> float:
    """``lam * variance - (1 - lam) * mean_return`` for dense weights."""
    ret, var = portfolio_stats(universe, weights)
    return lam * var - (1.0 - lam) * ret


def dominates(a, b) -> bool:
    """True when ``a = (variance, return)`` Pareto-dominates ``b``."""
    va, ra = a
    vb, rb = b
    return va <= vb and ra >= rb and (va < vb or ra > rb)


def pareto_filter(points: Iterable[FrontierRecord]) -> list[FrontierRecord]:
    """Non-dominated records sorted by ascending variance.

    Records sharing an exact ``(variance, return)`` collapse to the first one
    encountered.
    """
    # stable sort keeps input order among exact duplicates
    ordered = sorted(points, key=lambda p: (p.variance, -p.mean_return))
    kept = []
    best = -np.inf
    for p in ordered:
        if p.mean_return > best:
            kept.append(p)
            best = p.mean_return
    return kept


@dataclass(frozen=True, eq=False)
class PortfolioProblem:
    universe: AssetUniverse
    lam: float
    k: int
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        n = self.universe.n
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if not 0.0 <= self.lam <= 1.0:
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam}")
        if not 1 <= self.k <= n:
            raise DomainError(f"K must satisfy 1 <= K <= {n}, got {self.k}")
        if np.any(lo < 0) or np.any(hi > 1) or np.any(lo > hi):
            raise DomainError("bounds must satisfy 0 <= eps_i <= delta_i <= 1")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, universe, lam, k, eps=0.01, delta=1.0):
        return cls(universe, lam, k, np.full(universe.n, eps), np.full(universe.n, delta))

    @property
    def n(self) -> int:
        return self.universe.n

    def with_lambda(self, lam: float) -> "PortfolioProblem":
        return replace(self, lam=lam)


@dataclass(frozen=True, eq=False)
class Portfolio:
    """Selected assets (the ``z_i = 1`` set) and their proportions."""

    selection: tuple[int, ...]
    weights: np.ndarray
    stats: Optional[tuple[float, float, float]] = None  # (mean_return, variance, objective)

    def dense(self, n: int) -> np.ndarray:
        x = np.zeros(n)
        x[list(self.selection)] = self.weights
        return x

    @property
    def objective(self) -> float:
        if self.stats is None:
            raise ValueError("portfolio has not been evaluated")
        return self.stats[2]

    def evaluated(self, problem: PortfolioProblem) -> "Portfolio":
        x = self.dense(problem.n)
        ret, var = portfolio_stats(problem.universe, x)
        obj = problem.lam * var - (1.0 - problem.lam) * ret
        return replace(self, stats=(ret, var, obj))

    def to_record(self, problem: PortfolioProblem, source: str = "") -> FrontierRecord:
        p = self if self.stats is not None else self.evaluated(problem)
        ret, var, obj = p.stats
        weights = tuple((int(i), float(w)) for i, w in zip(p.selection, p.weights) if w > 0)
        return FrontierRecord(problem.lam, ret, var, obj, source, weights)


def validate(problem: PortfolioProblem, portfolio: Portfolio, tol: float = FEASIBILITY_TOL) -> list[str]:
    """Names of the violated constraints; empty when the portfolio is feasible."""
    violations = []
    sel = np.asarray(portfolio.selection, dtype=int)
    w = np.asarray(portfolio.weights, dtype=float)
    if abs(w.sum() - 1.0) > tol:
        violations.append("budget")
    if len(set(sel.tolist())) != problem.k or sel.size != problem.k:
        violations.append("cardinality")
    for i, wi in zip(sel.tolist(), w.tolist()):
        if wi < problem.lower[i] - tol:
            violations.append(f"lower-bound {i}")
        if wi > problem.upper[i] + tol:
            violations.append(f"upper-bound {i}")
    return violations


def records_from_points(points: Sequence[tuple[float, float]], source: str = "") -> list[FrontierRecord]:
    """Bare (variance, return) pairs as records, for tests and quick comparisons."""
    return [FrontierRecord(0.0, float(r), float(v), 0.0, source) for v, r in points]
