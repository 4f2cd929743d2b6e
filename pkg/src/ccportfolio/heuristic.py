"""Annealed Hopfield heuristic tracing the cardinality-constrained frontier.

For every lambda on a grid a population of random K-asset portfolios is
evaluated, then ``T`` rounds of ``R`` candidates are generated: a random
population member is lifted into a full network, relaxed and pruned down to
K neurons, repaired, archived and swapped in for the worst member. The gain
grows by ``1 / gain_divisor`` after every round.
"""

from __future__ import annotations

import bisect
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import hopfield
from .data_io import AssetUniverse, FrontierRecord
from .errors import DomainError
from .model import Portfolio, PortfolioProblem
from .repair import repair

SOURCE_TAG = "NN"
ZERO_OBJECTIVE_GAIN = 100.0


@dataclass(frozen=True)
class HeuristicConfig:
    delta_lambda: float = 0.1
    pop_size: int = 40
    repetitions: int = 1
    seed: int = 0
    gain_divisor: float = 0.95
    inner_T: Optional[int] = None
    inner_R: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.delta_lambda <= 1:
            raise DomainError(f"delta_lambda must lie in (0, 1], got {self.delta_lambda}")
        if self.pop_size < 2:
            raise DomainError(f"population size must be >= 2, got {self.pop_size}")
        if self.repetitions < 1:
            raise DomainError("repetitions must be >= 1")
        if not 0 < self.gain_divisor < 1:
            raise DomainError(f"gain_divisor must lie in (0, 1), got {self.gain_divisor}")
        for name in ("inner_T", "inner_R"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise DomainError(f"{name} must be >= 0")

    def rounds(self) -> int:
        return self.pop_size // 2 if self.inner_T is None else self.inner_T

    def candidates_per_round(self, n: int) -> int:
        return 2 * n if self.inner_R is None else self.inner_R

    def evaluations_per_lambda(self, n: int) -> int:
        return self.pop_size + self.rounds() * self.candidates_per_round(n)

    def lambdas(self) -> list[float]:
        # index-built grid so float drift never drops the lambda = 1 endpoint
        steps = math.ceil(1.0 / self.delta_lambda - 1e-9)
        return [min(j * self.delta_lambda, 1.0) for j in range(steps + 1)]


@dataclass
class ParetoArchive:
    """Non-dominated records, kept sorted by variance (and hence by return)."""

    points: list[FrontierRecord] = field(default_factory=list)
    evaluations: int = 0
    sweeps: int = 0
    truncated: int = 0

    def __post_init__(self):
        self._variances = [p.variance for p in self.points]

    def insert(self, rec: FrontierRecord) -> bool:
        """Add ``rec`` unless it is dominated or duplicates a point; drop what it dominates."""
        v, r = rec.variance, rec.mean_return
        vs = self._variances
        hi = bisect.bisect_right(vs, v)
        if hi > 0 and self.points[hi - 1].mean_return >= r:
            return False
        lo = bisect.bisect_left(vs, v)
        end = hi
        while end < len(self.points) and self.points[end].mean_return <= r:
            end += 1
        self.points[lo:end] = [rec]
        vs[lo:end] = [v]
        return True

    def merge(self, other: "ParetoArchive") -> "ParetoArchive":
        for p in other.points:
            self.insert(p)
        self.evaluations += other.evaluations
        self.sweeps += other.sweeps
        self.truncated += other.truncated
        return self

    def best(self, lam: float) -> FrontierRecord:
        """Archived point minimising the objective at ``lam``."""
        return min(self.points, key=lambda p: lam * p.variance - (1 - lam) * p.mean_return)


def starting_gain(f_min: float) -> float:
    """Initial sigmoid gain ``floor(10 / |f_min|)``, at least 1."""
    if f_min == 0:
        return ZERO_OBJECTIVE_GAIN
    return float(max(1, math.floor(10.0 / abs(f_min))))


def evaluate_into_archive(problem: PortfolioProblem, portfolio: Portfolio, archive: ParetoArchive) -> Portfolio:
    """Repair the raw weights of ``portfolio``, evaluate it and offer it to the archive."""
    weights = repair(problem, portfolio.selection, portfolio.weights)
    evaluated = Portfolio(tuple(int(i) for i in portfolio.selection), weights).evaluated(problem)
    archive.evaluations += 1
    archive.insert(evaluated.to_record(problem, SOURCE_TAG))
    return evaluated


def initialise_population(problem: PortfolioProblem, size: int, rng: np.random.Generator,
                          archive: Optional[ParetoArchive] = None) -> list[Portfolio]:
    """``size`` random K-asset portfolios with uniform raw weights, repaired.

    When ``archive`` is given every member is also evaluated into it.
    """
    if size < 1:
        raise DomainError("population size must be >= 1")
    population = []
    for _ in range(size):
        sel = np.sort(rng.choice(problem.n, size=problem.k, replace=False))
        raw = Portfolio(tuple(int(i) for i in sel), rng.random(problem.k))
        if archive is None:
            w = repair(problem, raw.selection, raw.weights)
            population.append(Portfolio(raw.selection, w).evaluated(problem))
        else:
            population.append(evaluate_into_archive(problem, raw, archive))
    return population


def run_lambda(problem: PortfolioProblem, config: HeuristicConfig, rng: np.random.Generator,
               archive: Optional[ParetoArchive] = None) -> ParetoArchive:
    """One lambda of the heuristic; returns ``archive`` (a new one if omitted)."""
    if archive is None:
        archive = ParetoArchive()
    size = config.pop_size
    population = initialise_population(problem, size, rng, archive)
    objectives = np.array([p.objective for p in population])
    gain = starting_gain(float(objectives.min()))
    coeffs = hopfield.coefficients(problem)

    for _ in range(config.rounds()):
        for _ in range(config.candidates_per_round(problem.n)):
            member = population[int(rng.integers(size))]
            # non-members enter the full network at their lower bound
            state = problem.lower.copy()
            state[list(member.selection)] = member.weights
            seed = int(rng.integers(0, 2**32))
            sel, states, sweeps, ok = hopfield.descend(problem, state, gain, seed, coeffs=coeffs)
            archive.sweeps += sweeps
            archive.truncated += not ok
            candidate = evaluate_into_archive(problem, Portfolio(tuple(sel.tolist()), states), archive)
            worst = int(np.argmax(objectives))
            population[worst] = candidate
            objectives[worst] = candidate.objective
        gain /= config.gain_divisor
    return archive


def _cell_rng(seed: int, repetition: int, lam_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, repetition, lam_index]))


def _run_cell(args) -> ParetoArchive:
    universe, k, lower, upper, config, rep, j, lam = args
    problem = PortfolioProblem(universe, lam, k, lower, upper)
    return run_lambda(problem, config, _cell_rng(config.seed, rep, j))


def run(universe: AssetUniverse, k: int, lower, upper, config: HeuristicConfig,
        workers: int = 1) -> ParetoArchive:
    """Full lambda sweep, repeated ``config.repetitions`` times, into one archive.

    Each (repetition, lambda) cell has its own random stream and archive;
    cell archives are folded in grid order, so the result does not depend
    on ``workers``.
    """
    # validates bounds and K once, before any work is spent
    PortfolioProblem(universe, 0.0, k, lower, upper)
    cells = [
        (universe, k, lower, upper, config, rep, j, lam)
        for rep in range(config.repetitions)
        for j, lam in enumerate(config.lambdas())
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_cell, cells))
    else:
        parts = [_run_cell(c) for c in cells]
    archive = ParetoArchive()
    for part in parts:
        archive.merge(part)
    return archive
