"""Continuous Hopfield network whose energy equals the portfolio objective.

Weights ``w_ij = -2 lam sigma_ij`` and biases ``b_i = (1 - lam) mu_i`` make
the network energy ``-1/2 x'Wx - b'x`` identical to
``lam x'Sigma x - (1 - lam) mu'x``. Neurons are bounded sigmoids over each
asset's ``[eps_i, delta_i]`` and are updated one at a time with a damped
(relaxed) rule, which rules out period-2 cycles for symmetric weights when
the damping factor satisfies ``w_ii > -(2 - alpha_i) / (alpha_i beta)``.

The sweep loops are compiled with numba. ``descend`` runs a whole
prune-and-relax cascade in compiled code over the full weight matrix;
the object-level functions (``relax``, ``prune_worst``) exist for direct
use and testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import DomainError
from .model import PortfolioProblem

RELAX_TOL = 1e-6
MAX_SWEEPS = 100
ALPHA_SAFETY = 0.9


@njit(cache=True)
def _activation(y, lo, hi, beta):
    z = -beta * y
    if z > 700.0:
        return lo
    if z < -700.0:
        return hi
    return lo + (hi - lo) / (1.0 + math.exp(z))


@njit(cache=True)
def _alpha(w_ii, beta):
    if w_ii >= 0.0:
        return 1.0
    return min(1.0, ALPHA_SAFETY * 2.0 / (1.0 + beta * -w_ii))


@njit(cache=True)
def _field(W, b, x, idx, m, i):
    s = b[i]
    for q in range(m):
        j = idx[q]
        s += W[j, i] * x[j]
    return s


@njit(cache=True)
def _residual(W, b, lo, hi, alpha, beta, x, idx, m):
    worst = 0.0
    for p in range(m):
        i = idx[p]
        g = _activation(_field(W, b, x, idx, m, i), lo[i], hi[i], beta)
        r = alpha[i] * abs(x[i] - g)
        if r > worst:
            worst = r
    return worst


@njit(cache=True)
def _sweep(W, b, lo, hi, alpha, beta, x, idx, m, order):
    """One asynchronous pass visiting ``idx[order[p]]`` in turn; returns max change."""
    biggest = 0.0
    for p in range(m):
        i = idx[order[p]]
        g = _activation(_field(W, b, x, idx, m, i), lo[i], hi[i], beta)
        new = (1.0 - alpha[i]) * x[i] + alpha[i] * g
        change = abs(new - x[i])
        if change > biggest:
            biggest = change
        x[i] = new
    return biggest


@njit(cache=True)
def _relax(W, b, lo, hi, alpha, beta, x, idx, m, tol, max_sweeps):
    # caller seeds numba's generator; permutations come from it
    order = np.arange(m)
    for sweep in range(1, max_sweeps + 1):
        np.random.shuffle(order)
        if _sweep(W, b, lo, hi, alpha, beta, x, idx, m, order) <= tol:
            if _residual(W, b, lo, hi, alpha, beta, x, idx, m) <= tol:
                return sweep, True
    return max_sweeps, False


@njit(cache=True)
def _relax_seeded(W, b, lo, hi, alpha, beta, x, idx, m, tol, max_sweeps, seed):
    np.random.seed(seed)
    return _relax(W, b, lo, hi, alpha, beta, x, idx, m, tol, max_sweeps)


@njit(cache=True)
def _prune_position(x, idx, m):
    """Position in ``idx[:m]`` of the smallest state; lowest asset index wins ties."""
    best = 0
    for p in range(1, m):
        i = idx[p]
        j = idx[best]
        if x[i] < x[j] or (x[i] == x[j] and i < j):
            best = p
    return best


@njit(cache=True)
def _descend(W, b, lo, hi, beta, x, k_target, tol, max_sweeps, seed):
    """Relax, prune the weakest neuron, repeat until ``k_target`` remain, relax again.

    ``x`` is the full-size state and is updated in place. Returns the
    surviving asset indices (ascending), the total sweep count and whether
    every relaxation converged.
    """
    np.random.seed(seed)
    n = b.size
    alpha = np.empty(n)
    for i in range(n):
        alpha[i] = _alpha(W[i, i], beta)
    idx = np.arange(n)
    m = n
    sweeps = 0
    all_converged = True
    while True:
        s, ok = _relax(W, b, lo, hi, alpha, beta, x, idx, m, tol, max_sweeps)
        sweeps += s
        all_converged = all_converged and ok
        if m <= k_target:
            break
        p = _prune_position(x, idx, m)
        for q in range(p, m - 1):
            idx[q] = idx[q + 1]
        m -= 1
    return idx[:m].copy(), sweeps, all_converged


def activation(y, lower, upper, gain):
    """Bounded sigmoid ``lower + (upper - lower) / (1 + exp(-gain * y))``."""
    return _activation(float(y), float(lower), float(upper), float(gain))


def compute_alpha(w_ii: float, beta: float) -> float:
    """Largest safe damping factor (with a 0.9 margin) for self-weight ``w_ii``."""
    if not beta > 0:
        raise DomainError(f"gain must be > 0, got {beta}")
    return _alpha(float(w_ii), float(beta))


@dataclass(eq=False)
class HopfieldNetwork:
    active: np.ndarray
    weights: np.ndarray
    biases: np.ndarray
    gain: float
    alphas: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    state: np.ndarray
    lam: float = 0.0

    @property
    def size(self) -> int:
        return self.active.size

    def position(self, asset: int) -> int:
        hits = np.flatnonzero(self.active == asset)
        if hits.size == 0:
            raise DomainError(f"asset {asset} is not an active neuron")
        return int(hits[0])

    def field(self, asset: int) -> float:
        p = self.position(asset)
        return float(self.weights[:, p] @ self.state + self.biases[p])

    def with_gain(self, gain: float) -> "HopfieldNetwork":
        alphas = np.array([compute_alpha(w, gain) for w in np.diag(self.weights)])
        return replace(self, gain=float(gain), alphas=alphas)


def build_network(problem: PortfolioProblem, active, initial_state, gain: float) -> HopfieldNetwork:
    """Network over the ``active`` assets of ``problem`` at the problem's lambda."""
    active = np.asarray(sorted(int(a) for a in active), dtype=np.int64)
    if active.size == 0:
        raise DomainError("a network needs at least one active neuron")
    if active[0] < 0 or active[-1] >= problem.n or np.unique(active).size != active.size:
        raise DomainError("active set must hold distinct asset indices")
    if not gain > 0:
        raise DomainError(f"gain must be > 0, got {gain}")
    state = np.array(initial_state, dtype=float)
    if state.shape != active.shape:
        raise DomainError(f"initial state needs {active.size} entries")
    lo = problem.lower[active].copy()
    hi = problem.upper[active].copy()
    if np.any(state < lo) or np.any(state > hi):
        raise DomainError("initial state outside the per-asset bounds")
    lam = problem.lam
    sub = problem.universe.covariance[np.ix_(active, active)]
    weights = -2.0 * lam * sub
    biases = (1.0 - lam) * problem.universe.mean_returns[active]
    alphas = np.array([compute_alpha(w, gain) for w in np.diag(weights)])
    return HopfieldNetwork(active, weights, biases, float(gain), alphas, lo, hi, state, lam)


def step_async(network: HopfieldNetwork, asset: int) -> float:
    """Damped update of one neuron in place; returns its new state."""
    p = network.position(asset)
    g = activation(network.field(asset), network.lower[p], network.upper[p], network.gain)
    a = network.alphas[p]
    network.state[p] = (1.0 - a) * network.state[p] + a * g
    return float(network.state[p])


def fixed_point_residual(network: HopfieldNetwork) -> float:
    """``max_i alpha_i |x_i - G(field_i)|``: how far one more update would move."""
    m = network.size
    return float(
        _residual(
            network.weights, network.biases, network.lower, network.upper, network.alphas,
            network.gain, network.state, np.arange(m), m,
        )
    )


class RelaxResult(NamedTuple):
    state: np.ndarray
    converged: bool
    sweeps: int
    residual: float


def relax(network: HopfieldNetwork, rng: np.random.Generator, tol: float = RELAX_TOL,
          max_sweeps: int = MAX_SWEEPS) -> RelaxResult:
    """Asynchronous sweeps in random order until the state settles.

    Each sweep updates every neuron once in a fresh random permutation. The
    run stops once a sweep moves no neuron by more than ``tol`` and the
    fixed-point residual is also within ``tol``, or after ``max_sweeps``.
    The network state is updated in place.
    """
    m = network.size
    seed = int(rng.integers(0, 2**32))
    sweeps, ok = _relax_seeded(
        network.weights, network.biases, network.lower, network.upper, network.alphas,
        network.gain, network.state, np.arange(m), m, tol, max_sweeps, seed,
    )
    return RelaxResult(network.state.copy(), bool(ok), int(sweeps), fixed_point_residual(network))


def energy(network: HopfieldNetwork, state=None) -> float:
    x = network.state if state is None else np.asarray(state, dtype=float)
    if x.shape != network.biases.shape:
        raise DomainError(f"state needs {network.size} entries")
    return float(-0.5 * x @ network.weights @ x - network.biases @ x)


def prune_worst(network: HopfieldNetwork) -> HopfieldNetwork:
    """Copy of the network without its smallest-output neuron."""
    m = network.size
    if m < 2:
        raise DomainError("cannot prune a network with fewer than two neurons")
    # active is ascending, so the first minimum is the lowest asset index
    drop = int(np.argmin(network.state))
    keep = np.delete(np.arange(m), drop)
    return replace(
        network,
        active=network.active[keep],
        weights=network.weights[np.ix_(keep, keep)],
        biases=network.biases[keep],
        alphas=network.alphas[keep],
        lower=network.lower[keep],
        upper=network.upper[keep],
        state=network.state[keep],
    )


def coefficients(problem: PortfolioProblem) -> tuple[np.ndarray, np.ndarray]:
    """Full-size synaptic weights and biases for the problem's lambda."""
    lam = problem.lam
    return -2.0 * lam * problem.universe.covariance, (1.0 - lam) * problem.universe.mean_returns


def descend(problem: PortfolioProblem, state, gain: float, seed: int,
            tol: float = RELAX_TOL, max_sweeps: int = MAX_SWEEPS, coeffs=None):
    """Prune-and-relax a full ``n``-neuron network down to ``problem.k`` neurons.

    ``state`` is the dense starting state (one entry per asset) and is
    updated in place. Returns ``(selection, states, sweeps, converged)``.
    """
    W, b = coefficients(problem) if coeffs is None else coeffs
    x = np.asarray(state, dtype=float)
    idx, sweeps, ok = _descend(W, b, problem.lower, problem.upper, float(gain), x, problem.k,
                               tol, max_sweeps, seed)
    return idx, x[idx].copy(), int(sweeps), bool(ok)
