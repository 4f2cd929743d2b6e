"""Cardinality-constrained mean-variance portfolio selection.

Traces efficient frontiers of the bounded, cardinality-constrained Markowitz
model with an annealed Hopfield network, computes the unconstrained frontier
exactly, and compares frontiers with persistence, distance and occupancy
metrics.
"""

from .data_io import (
    AssetUniverse,
    FrontierRecord,
    parse_frontier,
    parse_orlib,
    read_orlib,
    serialize_frontier,
)
from .errors import DomainError, IncompleteDataError, InfeasibleError, ParseError, PortfolioError
from .exact_frontier import StandardFrontier, solve_qp_simplex, trace_standard_frontier
from .heuristic import HeuristicConfig, ParetoArchive, run, run_lambda
from .model import Portfolio, PortfolioProblem, dominates, objective, pareto_filter, portfolio_stats, validate
from .repair import repair

__version__ = "0.1.0"

__all__ = [
    "AssetUniverse",
    "DomainError",
    "FrontierRecord",
    "HeuristicConfig",
    "IncompleteDataError",
    "InfeasibleError",
    "ParetoArchive",
    "ParseError",
    "Portfolio",
    "PortfolioError",
    "PortfolioProblem",
    "StandardFrontier",
    "dominates",
    "objective",
    "pareto_filter",
    "parse_frontier",
    "parse_orlib",
    "portfolio_stats",
    "read_orlib",
    "repair",
    "run",
    "run_lambda",
    "serialize_frontier",
    "solve_qp_simplex",
    "trace_standard_frontier",
    "validate",
]
