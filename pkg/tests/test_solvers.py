import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landscape_ising.core import ProblemInstance, hamiltonian
from landscape_ising.instances import generate_random_qubo
from landscape_ising.solvers import TabuParams, best_known, brute_force, tabu_search


def enumerate_min(inst):
    """Plain itertools enumeration; returns (min energy, lexicographically first minimizer)."""
    best, arg = None, None
    # bit i = 1 means s_i = -1, node 0 most significant: product order over (+1, -1)
    for s in itertools.product((1, -1), repeat=inst.n):
        h = hamiltonian(inst, s)
        if best is None or h < best:
            best, arg = h, s
    return best, list(arg)


def chain(n, w):
    J = np.zeros((n, n), dtype=int)
    for i in range(n - 1):
        J[i, i + 1] = J[i + 1, i] = w
    return ProblemInstance(J)


class TestBruteForce:
    def test_ferro_pair(self):
        res = brute_force(ProblemInstance(np.array([[0, 15], [15, 0]])))
        assert res.best_energy == -15
        assert res.best_config.tolist() == [1, 1]
        assert res.method == "brute"

    def test_antiferro_pair_tie_break(self):
        res = brute_force(ProblemInstance(np.array([[0, -15], [-15, 0]])))
        assert res.best_config.tolist() == [1, -1]

    def test_zero_matrix(self):
        res = brute_force(ProblemInstance(np.zeros((6, 6), dtype=int)))
        assert res.best_energy == 0
        assert res.best_config.tolist() == [1] * 6

    def test_triangle(self):
        J = -(np.ones((3, 3), dtype=int) - np.eye(3, dtype=int))
        assert brute_force(ProblemInstance(J)).best_energy == -1

    def test_too_large(self):
        with pytest.raises(ValueError, match="tabu"):
            brute_force(generate_random_qubo(25, 0.5, seed=0))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 10), st.floats(0.1, 1.0), st.integers(0, 10**6))
    def test_matches_enumeration(self, n, d, seed):
        inst = generate_random_qubo(n, d, seed=seed)
        res = brute_force(inst)
        best, arg = enumerate_min(inst)
        assert res.best_energy == best
        assert res.best_config.tolist() == arg
        assert res.bitstring == "".join("1" if s > 0 else "0" for s in arg)


class TestTabu:
    params = TabuParams(tenure=8, max_iterations=5000, restarts=10, seed=0)

    def test_zero_matrix(self):
        assert tabu_search(ProblemInstance(np.zeros((8, 8), dtype=int)), self.params).best_energy == 0

    def test_ferro_chain(self):
        inst = chain(10, 15)
        assert 9 * 15 == 135
        assert brute_force(inst).best_energy == -135
        res = tabu_search(inst, self.params)
        assert res.best_energy == -135
        assert abs(res.best_config.sum()) == 10

    def test_matches_brute_force(self):
        hits = 0
        for seed in range(100):
            inst = generate_random_qubo(16, 0.5, seed=seed)
            exact = brute_force(inst).best_energy
            found = tabu_search(inst, self.params).best_energy
            assert exact <= found
            hits += exact == found
        assert hits >= 95

    def test_deterministic(self):
        inst = generate_random_qubo(40, 0.5, seed=2)
        p = TabuParams(tenure=10, max_iterations=500, restarts=3, seed=4)
        a, b = tabu_search(inst, p), tabu_search(inst, p)
        assert a.best_energy == b.best_energy
        assert np.array_equal(a.best_config, b.best_config)

    def test_monotone_incumbent(self):
        inst = generate_random_qubo(48, 0.5, seed=6)
        res = tabu_search(inst, TabuParams(tenure=12, max_iterations=800, restarts=4), keep_history=True)
        assert res.history.shape == (4, 800)
        assert np.all(np.diff(res.history, axis=1) <= 0)
        assert res.history[:, -1].min() == res.best_energy

    def test_params_validation(self):
        with pytest.raises(ValueError):
            TabuParams(tenure=0)
        with pytest.raises(ValueError):
            tabu_search(generate_random_qubo(32, 0.5), TabuParams(max_iterations=10))

    def test_generous_budget(self):
        p = TabuParams.generous(64, seed=1)
        assert (p.tenure, p.max_iterations, p.restarts, p.seed) == (16, 6400, 20, 1)


def test_best_known_dispatch():
    assert best_known(generate_random_qubo(12, 0.5, seed=1)).method == "brute"
    big = best_known(generate_random_qubo(40, 0.5, seed=1))
    assert big.method == "tabu"
    assert hamiltonian(generate_random_qubo(40, 0.5, seed=1), big.best_config) == big.best_energy
