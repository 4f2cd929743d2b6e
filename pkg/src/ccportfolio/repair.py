"""Greedy rescaling of selected-asset weights onto the budget and bounds."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, InfeasibleError
from .model import PortfolioProblem

_SLACK = 1e-12


def _shares(raw: np.ndarray) -> np.ndarray:
    total = raw.sum()
    if total > 0:
        return raw / total
    # all-zero input: equal shares keep the result symmetric
    return np.full(raw.size, 1.0 / raw.size)


def repair(problem: PortfolioProblem, selection, raw_weights) -> np.ndarray:
    """Map nonnegative raw weights of the selected assets to feasible proportions.

    Every selected asset first receives its lower bound plus a share of the
    remaining free mass proportional to its raw weight. Assets that end up
    above their upper bound are then pinned to it, and the others are
    reassigned from the original raw weights with the reduced free mass,
    until no asset exceeds its upper bound.

    Returns the weights aligned with ``selection``.
    """
    sel = np.asarray(selection, dtype=int)
    raw = np.asarray(raw_weights, dtype=float)
    if sel.ndim != 1 or raw.shape != sel.shape or sel.size == 0:
        raise DomainError("selection and raw_weights must be equal-length non-empty vectors")
    if not np.all(np.isfinite(raw)) or np.any(raw < 0):
        raise DomainError("raw weights must be finite and nonnegative")
    lo = problem.lower[sel]
    hi = problem.upper[sel]
    if lo.sum() > 1 + _SLACK or hi.sum() < 1 - _SLACK:
        raise InfeasibleError(
            f"no feasible weights: sum of lower bounds {lo.sum():.6g} and upper bounds "
            f"{hi.sum():.6g} must bracket 1"
        )

    x = lo + _shares(raw) * (1.0 - lo.sum())
    fixed = np.zeros(sel.size, dtype=bool)
    while True:
        over = ~fixed & (x > hi)
        if not over.any():
            break
        fixed |= over
        free = ~fixed
        if not free.any():
            x = hi.copy()
            break
        free_mass = 1.0 - hi[fixed].sum() - lo[free].sum()
        assert free_mass >= -1e-9, free_mass
        x = np.where(fixed, hi, x)
        x[free] = lo[free] + _shares(raw[free]) * max(free_mass, 0.0)
    return x
