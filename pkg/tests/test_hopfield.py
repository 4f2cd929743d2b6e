import math

import numpy as np
import pytest

from conftest import random_universe
from ccportfolio import AssetUniverse, PortfolioProblem
from ccportfolio.errors import DomainError
from ccportfolio.hopfield import (
    _sweep,
    activation,
    build_network,
    compute_alpha,
    descend,
    energy,
    fixed_point_residual,
    prune_worst,
    relax,
    step_async,
)
from ccportfolio.model import objective


def sigmoid_ref(y, lo, hi, beta):
    return lo + (hi - lo) / (1 + math.exp(-beta * y))


class TestActivation:
    def test_midpoint(self):
        for beta in (0.1, 1.0, 50.0):
            assert activation(0.0, 0.01, 1.0, beta) == pytest.approx(0.505, abs=1e-15)

    def test_saturation(self):
        assert activation(1e6, 0.01, 1.0, 10.0) == 1.0
        assert activation(-1e6, 0.01, 1.0, 10.0) == 0.01
        assert activation(float("inf"), 0.01, 1.0, 10.0) == 1.0

    def test_scalar_value(self):
        # 0.01 + 0.99 / (1 + e^-2)
        assert activation(1.0, 0.01, 1.0, 2.0) == pytest.approx(0.8819891071981035, abs=1e-15)
        assert activation(1.0, 0.01, 1.0, 2.0) == pytest.approx(sigmoid_ref(1, 0.01, 1, 2), abs=1e-15)

    def test_monotone(self):
        ys = np.linspace(-5, 5, 201)
        vals = [activation(y, 0.05, 0.8, 3.0) for y in ys]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


class TestAlpha:
    def test_nonnegative_self_weight(self):
        assert compute_alpha(0.0, 50.0) == 1.0

    def test_hand_values(self):
        assert compute_alpha(-0.1, 10.0) == pytest.approx(0.9, abs=1e-15)
        assert compute_alpha(-0.1, 100.0) == pytest.approx(1.8 / 11, abs=1e-15)

    def test_satisfies_stability_condition(self, rng):
        for _ in range(1000):
            w = -float(rng.exponential(1.0))
            beta = float(rng.exponential(100.0)) + 1e-3
            a = compute_alpha(w, beta)
            assert 0 < a <= 1
            assert w > -(2 - a) / (a * beta)

    def test_rejects_bad_gain(self):
        with pytest.raises(DomainError):
            compute_alpha(-0.1, 0.0)


def _net(universe, lam, gain=10.0, eps=0.01, delta=1.0, active=None, state=None):
    p = PortfolioProblem.uniform(universe, lam, 1, eps, delta)
    active = range(universe.n) if active is None else active
    k = len(list(active))
    state = np.full(k, (eps + delta) / 2) if state is None else state
    return build_network(p, active, state, gain)


class TestBuild:
    def test_substitution(self):
        u = AssetUniverse([0.1, 0.2], [[0.1, 0.04], [0.04, 0.2]])
        net = _net(u, 0.5)
        assert net.weights[0, 1] == pytest.approx(-0.04)
        assert net.biases[0] == pytest.approx(0.05)
        assert np.array_equal(net.weights, net.weights.T)

    def test_lambda_extremes(self, u3):
        net0 = _net(u3, 0.0)
        assert np.all(net0.weights == 0)
        np.testing.assert_array_equal(net0.biases, u3.mean_returns)
        assert np.all(_net(u3, 1.0).biases == 0)

    def test_errors(self, u3):
        with pytest.raises(DomainError):
            _net(u3, 0.5, active=[], state=[])
        with pytest.raises(DomainError):
            _net(u3, 0.5, state=[0.001, 0.5, 0.5])


class TestStep:
    def _isolated(self, alpha_half=False):
        u = AssetUniverse([0.0], [[0.0]])
        net = _net(u, 0.5, state=[0.1])
        if alpha_half:
            net.alphas[:] = 0.5
        return net

    def test_zero_field_alpha_one(self):
        net = self._isolated()
        assert step_async(net, 0) == pytest.approx(0.505, abs=1e-15)

    def test_zero_field_alpha_half(self):
        net = self._isolated(alpha_half=True)
        assert step_async(net, 0) == pytest.approx(0.5 * 0.1 + 0.5 * 0.505, abs=1e-15)

    def test_fixed_point_unchanged(self, u3):
        net = _net(u3, 0.0)
        net.state[:] = [sigmoid_ref(m, 0.01, 1, 10) for m in u3.mean_returns]
        for i in range(3):
            before = net.state[i]
            assert step_async(net, i) == pytest.approx(before, abs=1e-15)

    def test_only_target_moves_and_stays_in_range(self, rng):
        u = random_universe(rng, 6)
        net = _net(u, 0.7, gain=30.0, eps=0.02, delta=0.6)
        for _ in range(200):
            i = int(rng.integers(6))
            before = net.state.copy()
            step_async(net, i)
            mask = np.arange(6) != i
            np.testing.assert_array_equal(net.state[mask], before[mask])
            assert 0.02 <= net.state[i] <= 0.6

    def test_compiled_sweep_matches_step_sequence(self, rng):
        u = random_universe(rng, 5)
        a = _net(u, 0.4, gain=20.0)
        b = _net(u, 0.4, gain=20.0)
        order = rng.permutation(5)
        for i in order:
            step_async(a, int(i))
        _sweep(b.weights, b.biases, b.lower, b.upper, b.alphas, b.gain, b.state, np.arange(5), 5, order)
        np.testing.assert_allclose(a.state, b.state, atol=1e-14)


class TestRelax:
    def test_decoupled_lambda_zero(self, u3, rng):
        net = _net(u3, 0.0, gain=10.0)
        res = relax(net, rng)
        assert res.converged
        assert res.sweeps == 2  # one sweep to land, one to confirm
        expected = [sigmoid_ref(m, 0.01, 1.0, 10.0) for m in u3.mean_returns]
        np.testing.assert_allclose(res.state, expected, atol=1e-15)
        assert res.state[2] == pytest.approx(0.9530483855542, abs=1e-12)

    def test_fixed_point_converges_in_one_sweep(self, u3, rng):
        net = _net(u3, 0.0)
        net.state[:] = [sigmoid_ref(m, 0.01, 1, 10) for m in u3.mean_returns]
        before = net.state.copy()
        res = relax(net, rng)
        assert res.converged and res.sweeps == 1
        np.testing.assert_allclose(res.state, before, atol=1e-15)

    def test_min_variance_residual(self, u3, rng):
        net = _net(u3, 1.0, gain=10.0)
        res = relax(net, rng)
        assert res.converged
        assert res.residual <= 1e-6

    def test_deterministic(self, rng):
        u = random_universe(rng, 8)
        traj = []
        for _ in range(2):
            net = _net(u, 0.6, gain=200.0)
            traj.append(relax(net, np.random.default_rng(99)))
        np.testing.assert_array_equal(traj[0].state, traj[1].state)
        assert traj[0].sweeps == traj[1].sweeps


class TestEnergy:
    def test_zero_network(self):
        u = AssetUniverse([0.0, 0.0], np.zeros((2, 2)))
        assert energy(_net(u, 0.3), [0.2, 0.7]) == 0.0

    def test_min_variance_value(self, u3):
        net = _net(u3, 1.0, eps=0.0)
        x = np.full(3, 1 / 3)
        assert energy(net, x) == pytest.approx(0.1 / 3, abs=1e-15)
        assert energy(net, x) == pytest.approx(objective(u3, 1.0, x), abs=1e-15)

    def test_equals_objective(self, rng):
        for _ in range(100):
            u = random_universe(rng, int(rng.integers(1, 15)))
            lam = float(rng.random())
            net = _net(u, lam, eps=0.0)
            x = rng.random(u.n)
            assert energy(net, x) == pytest.approx(objective(u, lam, x), abs=1e-12)

    def test_dimension_mismatch(self, u3):
        with pytest.raises(DomainError):
            energy(_net(u3, 0.5), [0.5, 0.5])


class TestPrune:
    def test_drops_smallest(self, u3):
        net = _net(u3, 0.5, state=[0.5, 0.02, 0.3])
        pruned = prune_worst(net)
        assert pruned.active.tolist() == [0, 2]

    def test_tie_goes_to_lowest_index(self, u3):
        net = _net(u3, 0.5, state=[0.5, 0.02, 0.02])
        assert prune_worst(net).active.tolist() == [0, 2]

    def test_structure(self, rng):
        u = random_universe(rng, 7)
        net = _net(u, 0.5, gain=40.0, state=rng.uniform(0.01, 1, 7))
        while net.size > 1:
            smaller = prune_worst(net)
            assert smaller.size == net.size - 1
            keep = np.isin(net.active, smaller.active)
            np.testing.assert_array_equal(smaller.weights, net.weights[np.ix_(keep, keep)])
            assert np.array_equal(smaller.weights, smaller.weights.T)
            d = np.diag(smaller.weights)
            assert np.all(d > -(2 - smaller.alphas) / (smaller.alphas * smaller.gain))
            net = smaller
        with pytest.raises(DomainError):
            prune_worst(net)


class TestDescend:
    def test_compiled_cascade_matches_object_path_selection(self, rng):
        # same starting point and a decoupled (lambda = 0) network: order does not matter
        u = random_universe(rng, 9)
        p = PortfolioProblem.uniform(u, 0.0, 3, 0.01, 1.0)
        sel, states, _, ok = descend(p, np.full(9, 0.01), 10.0, seed=5)
        assert ok
        top3 = np.sort(np.argsort(u.mean_returns)[-3:])
        assert sel.tolist() == top3.tolist()
        np.testing.assert_allclose(states, [sigmoid_ref(u.mean_returns[i], 0.01, 1, 10) for i in sel], atol=1e-12)

    def test_k_equals_n_runs_no_pruning(self, rng):
        u = random_universe(rng, 4)
        p = PortfolioProblem.uniform(u, 0.5, 4, 0.01, 1.0)
        sel, states, _, _ = descend(p, np.full(4, 0.2), 20.0, seed=1)
        assert sel.tolist() == [0, 1, 2, 3]
        assert np.all((states >= 0.01) & (states <= 1.0))

    def test_residual_after_converged_cascade(self, rng):
        u = random_universe(rng, 10)
        p = PortfolioProblem.uniform(u, 0.7, 4, 0.01, 1.0)
        x = np.full(10, 0.3)
        sel, states, _, ok = descend(p, x, 15.0, seed=3)
        assert ok
        net = build_network(p, sel, states, 15.0)
        assert fixed_point_residual(net) <= 1e-6
