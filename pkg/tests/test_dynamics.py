import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landscape_ising.core import ProblemInstance, hamiltonian
from landscape_ising.dynamics import (
    DynamicsConfig,
    LfsrState,
    MachineState,
    anneal_many,
    descent_violations,
    euler_step,
    init_spins,
    lfsr_next,
    lfsr_states,
    node_derivative,
    quantize_spin,
    run_anneal,
    run_anneal_reference,
)
from landscape_ising.instances import generate_random_qubo
from landscape_ising.perturbation import PerturbationSchedule
from landscape_ising.solvers import brute_force

NS = 1e-9
RHO_SPEC_EXAMPLE = 0.02 / 1e-6  # 0.02 V/us in V/s


def pair(J12):
    return ProblemInstance(np.array([[0, J12], [J12, 0]]))


class TestQuantizeSpin:
    @pytest.mark.parametrize("v, s", [(0.2, -1), (0.5, 1), (1.0, 1), (0.0, -1), (0.4999999, -1)])
    def test_threshold(self, v, s):
        assert quantize_spin(v) == s

    @pytest.mark.parametrize("v", [math.nan, math.inf])
    def test_non_finite(self, v):
        with pytest.raises(ValueError):
            quantize_spin(v)


class TestNodeDerivative:
    def test_single_coupling(self):
        assert node_derivative([0, 3], [1, 1], 1.0) == 3.0

    def test_cancellation(self):
        assert node_derivative([0, 5, -5], [1, 1, 1], 1.0) == 0.0

    def test_full_strength_row(self):
        row = [0] + [15] * 63
        expected = sum(15 * RHO_SPEC_EXAMPLE for _ in range(63))
        assert expected == pytest.approx(18.9e6)
        assert node_derivative(row, [1] * 64, RHO_SPEC_EXAMPLE) == pytest.approx(18.9e6, rel=1e-12)

    def test_non_integer_row(self):
        assert node_derivative([0, 0.5, 0.25], [1, -1, 1], 2.0) == pytest.approx(-0.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            node_derivative([0, 1], [1, 1, 1], 1.0)


class TestEulerStep:
    cfg = DynamicsConfig(rho=RHO_SPEC_EXAMPLE, dt=1 * NS)

    def test_zero_derivative(self):
        state = MachineState(np.array([0.3, 0.9]), t=5 * NS, flips=2)
        out = euler_step(state, np.zeros((2, 2)), self.cfg)
        assert np.array_equal(out.v, state.v)
        assert out.t == pytest.approx(6 * NS)
        assert out.flips == 2

    def test_clamp_at_rail(self):
        out = euler_step(MachineState(np.array([1.0, 1.0])), np.array([[0, 15], [15, 0]]), self.cfg)
        assert np.array_equal(out.v, [1.0, 1.0])

    def test_one_step_arithmetic(self):
        out = euler_step(MachineState(np.array([1.0, 0.0])), np.array([[0, 15], [15, 0]]), self.cfg)
        assert 15 * 0.02 * 0.001 == pytest.approx(0.0003)
        np.testing.assert_allclose(out.v, [0.9997, 0.0003], rtol=0, atol=1e-12)
        assert out.flips == 0

    def test_counts_flips(self):
        cfg = DynamicsConfig(rho=1e9, dt=1 * NS)
        out = euler_step(MachineState(np.array([0.6, 0.2])), np.array([[0, 1], [1, 0]]), cfg)
        # node 0 is driven down by spin 1 (-1) past the threshold, node 1 up past it
        assert out.flips == 2
        assert out.spins.tolist() == [-1, 1]

    def test_shape_check(self):
        with pytest.raises(ValueError):
            euler_step(MachineState(np.zeros(2)), np.zeros((3, 3)), self.cfg)

    def test_machine_state_rails(self):
        with pytest.raises(ValueError):
            MachineState(np.array([1.2]))


def bit_reference_next(bits):
    """Independent list-of-bits shift for x^64 + x^63 + x^61 + x^60 + 1.

    ``bits[0]`` is the output end; stage k of the polynomial sits at list
    position 64 - k.
    """
    fb = 0
    for k in (64, 63, 61, 60):
        fb ^= bits[64 - k]
    return bits[1:] + [fb]


def to_bits(reg):
    return [(reg >> i) & 1 for i in range(64)]


def from_bits(bits):
    return sum(b << i for i, b in enumerate(bits))


def gf2_mulmod(a, b, mod, deg):
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if (a >> deg) & 1:
            a ^= mod
    return out


def gf2_powmod(base, e, mod, deg):
    result = 1
    while e:
        if e & 1:
            result = gf2_mulmod(result, base, mod, deg)
        base = gf2_mulmod(base, base, mod, deg)
        e >>= 1
    return result


class TestLfsr:
    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            LfsrState(0)

    def test_next_from_one(self):
        assert lfsr_next(LfsrState(1)).reg == 1 << 63
        assert lfsr_next(LfsrState(1)).reg == from_bits(bit_reference_next(to_bits(1)))

    @settings(max_examples=200)
    @given(st.integers(1, 2**64 - 1))
    def test_matches_bit_reference(self, reg):
        assert lfsr_next(LfsrState(reg)).reg == from_bits(bit_reference_next(to_bits(reg)))

    def test_no_repeat_in_a_million_steps(self):
        seen = set()
        s = LfsrState(0xACE1)
        for _ in range(1_000_000):
            assert s.reg not in seen
            seen.add(s.reg)
            s = lfsr_next(s)

    @pytest.mark.parametrize(
        "poly",
        [
            (1 << 64) | (1 << 63) | (1 << 61) | (1 << 60) | 1,
            (1 << 64) | (1 << 4) | (1 << 3) | (1 << 1) | 1,  # reciprocal, the output recurrence
        ],
    )
    def test_polynomial_is_primitive(self, poly):
        order = 2**64 - 1
        factors = [3, 5, 17, 257, 641, 65537, 6700417]
        prod = 1
        for q in factors:
            prod *= q
        assert prod == order
        x = 0b10
        assert gf2_powmod(x, order, poly, 64) == 1
        for q in factors:
            assert gf2_powmod(x, order // q, poly, 64) != 1

    def test_output_obeys_recurrence(self):
        out = [s.reg & 1 for s in lfsr_states(0xACE1, 500)]
        for t in range(len(out) - 64):
            assert out[t + 64] == out[t] ^ out[t + 1] ^ out[t + 3] ^ out[t + 4]


class TestInitSpins:
    def test_low_bits_set(self):
        assert init_spins(LfsrState(0xFFFF), 16).tolist() == [1.0] * 16

    def test_alternating(self):
        assert init_spins(LfsrState(0b0101), 4).tolist() == [1.0, 0.0, 1.0, 0.0]

    def test_too_many_spins(self):
        with pytest.raises(ValueError):
            init_spins(LfsrState(1), 65)

    @given(st.integers(1, 2**64 - 1))
    def test_spins_follow_bits(self, reg):
        v = init_spins(LfsrState(reg), 64)
        assert [quantize_spin(x) for x in v] == [1 if (reg >> i) & 1 else -1 for i in range(64)]


class TestRunAnneal:
    cfg = DynamicsConfig()

    def test_zero_matrix(self):
        inst = ProblemInstance(np.zeros((5, 5), dtype=int))
        init = np.array([1.0, 0.0, 0.0, 1.0, 1.0])
        r = run_anneal(inst, self.cfg, None, init)
        assert r.spins.tolist() == [1, -1, -1, 1, 1]
        assert r.energy == 0 and r.flips == 0

    def test_aligned_ferro_pair_is_stable(self):
        r = run_anneal(pair(15), self.cfg, None, [1.0, 1.0])
        assert r.spins.tolist() == [1, 1]
        assert r.energy == -15
        assert r.voltages.tolist() == [1.0, 1.0]

    def test_symmetric_frustrated_pair_oscillates(self):
        # both nodes see identical drives, so synchronous updates never break the tie
        r = run_anneal(pair(-15), self.cfg, None, [1.0, 1.0], trace=True)
        assert r.spins[0] == r.spins[1]
        assert r.energy == 15
        assert r.flips > 100
        assert set(r.flip_trace[r.flip_trace > 0].tolist()) == {2}
        ref = run_anneal_reference(pair(-15), self.cfg, None, [1.0, 1.0])
        assert ref.flips == r.flips and ref.energy == r.energy

    def test_asymmetric_start_settles_anti_aligned(self):
        r = run_anneal(pair(-15), self.cfg, None, [1.0, 0.99])
        assert r.spins.tolist() == [1, -1]
        assert r.energy == -15

    def test_scalar_step_through(self):
        # independent scalar integration of the two-node antiferromagnet
        cfg = DynamicsConfig(rho=2e5, dt=0.5 * NS, anneal_time=1000 * NS)
        v = [0.9, 0.7]
        for _ in range(cfg.n_steps):
            s = [1 if x >= 0.5 else -1 for x in v]
            d0 = cfg.rho * -15 * s[1]
            d1 = cfg.rho * -15 * s[0]
            v = [min(1.0, max(0.0, v[0] + cfg.dt * d0)), min(1.0, max(0.0, v[1] + cfg.dt * d1))]
        r = run_anneal(pair(-15), cfg, None, [0.9, 0.7])
        assert r.voltages.tolist() == v
        assert r.energy == -15

    def test_matches_reference_gradient(self):
        cfg = DynamicsConfig(anneal_time=600 * NS)
        for seed in range(4):
            inst = generate_random_qubo(12, 0.6, seed=seed)
            init = init_spins(LfsrState(0x1234567 + seed), 12)
            fast = run_anneal(inst, cfg, None, init, trace=True)
            ref = run_anneal_reference(inst, cfg, None, init)
            assert np.array_equal(fast.voltages, ref.voltages)
            assert np.array_equal(fast.energy_trace, ref.energy_trace)
            assert np.array_equal(fast.flip_trace, ref.flip_trace)

    def test_matches_reference_gated_no_leak(self):
        cfg = DynamicsConfig(anneal_time=900 * NS)
        sched = PerturbationSchedule(n_columns=10, gate_period=250 * NS, gate_off_fraction=0.4, quiet_tail=250 * NS, leak_tau=math.inf)
        for seed in range(3):
            inst = generate_random_qubo(10, 0.7, seed=40 + seed)
            init = init_spins(LfsrState(0xBEEF + seed), 10)
            fast = run_anneal(inst, cfg, sched, init, trace=True)
            ref = run_anneal_reference(inst, cfg, sched, init)
            assert np.array_equal(fast.voltages, ref.voltages)
            assert np.array_equal(fast.energy_trace, ref.energy_trace)

    def test_matches_reference_with_leak(self):
        cfg = DynamicsConfig(anneal_time=900 * NS)
        sched = PerturbationSchedule(n_columns=10, gate_period=250 * NS, gate_off_fraction=0.4, quiet_tail=250 * NS, leak_tau=0.5e-6)
        for seed in range(3):
            inst = generate_random_qubo(10, 0.7, seed=50 + seed)
            init = init_spins(LfsrState(0xCAFE + seed), 10)
            fast = run_anneal(inst, cfg, sched, init, trace=True)
            ref = run_anneal_reference(inst, cfg, sched, init)
            np.testing.assert_allclose(fast.voltages, ref.voltages, atol=1e-9)
            assert np.array_equal(fast.energy_trace, ref.energy_trace)

    def test_final_energy_uses_programmed_couplings(self):
        inst = generate_random_qubo(16, 0.5, seed=5)
        sched = PerturbationSchedule(leak_tau=1e-6)
        r = run_anneal(inst, self.cfg, sched, init_spins(LfsrState(77), 16))
        assert r.energy == hamiltonian(inst, r.spins)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            run_anneal(pair(1), self.cfg, None, [1.0, 0.0, 1.0])

    def test_trace_rows(self):
        r = run_anneal(pair(-15), self.cfg, None, [1.0, 0.9], trace=True)
        rows = r.trace_rows(self.cfg.dt)
        assert rows[0] == (0.0, 15, 0)
        assert rows[-1][0] == pytest.approx(self.cfg.anneal_time)
        assert rows[-1][1:] == (-15, 1)


class TestInvariants:
    cfg = DynamicsConfig()

    def test_batch_independent_results(self):
        inst = generate_random_qubo(32, 0.5, seed=8)
        inits = np.array([init_spins(s, 32) for s in lfsr_states(99, 12)])
        sched = PerturbationSchedule()
        batch = anneal_many(inst, self.cfg, sched, inits)
        for k in (0, 5, 11):
            single = run_anneal(inst, self.cfg, sched, inits[k])
            assert np.array_equal(single.voltages, batch[k].voltages)
            assert single.energy == batch[k].energy and single.flips == batch[k].flips
        again = anneal_many(inst, self.cfg, sched, inits[::-1])
        assert [r.energy for r in again] == [r.energy for r in batch][::-1]

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.1, 1.0))
    def test_rail_confinement(self, seed, density):
        inst = generate_random_qubo(8, density, seed=seed)
        rng = np.random.default_rng(seed)
        cfg = DynamicsConfig(rho=5e6, anneal_time=300 * NS)
        sched = PerturbationSchedule(n_columns=8, gate_period=100 * NS, gate_off_fraction=0.5, quiet_tail=100 * NS, leak_tau=1e-6)
        # MachineState rejects any voltage outside the rails at every step
        r = run_anneal_reference(inst, cfg, sched, rng.random(8))
        assert np.all((r.voltages >= 0) & (r.voltages <= 1))

    def test_descent_over_thousand_runs(self):
        single_flip_violations = 0
        end_violations = 0
        single_flip_steps = 0
        for k in range(10):
            inst = generate_random_qubo(24, 0.5, seed=300 + k)
            inits = np.array([init_spins(s, 24) for s in lfsr_states(1000 + k, 100)])
            for r in anneal_many(inst, self.cfg, None, inits, trace=True):
                a, b = descent_violations(r)
                single_flip_violations += a
                end_violations += b
                single_flip_steps += int(np.count_nonzero(r.flip_trace == 1))
        assert single_flip_steps > 1000
        assert single_flip_violations == 0
        assert end_violations == 0

    def test_ground_state_absorption(self):
        for seed in range(5):
            inst = generate_random_qubo(14, 0.6, seed=700 + seed)
            best = brute_force(inst)
            # only the global mirror may share the minimum for this to be strict
            v = np.where(best.best_config > 0, 1.0, 0.0)
            r = run_anneal(inst, self.cfg, None, v)
            assert r.flips == 0
            assert np.array_equal(r.spins, best.best_config)


class TestConfig:
    def test_dt_must_divide_anneal(self):
        with pytest.raises(ValueError):
            DynamicsConfig(dt=0.7 * NS)

    def test_dt_bounds(self):
        with pytest.raises(ValueError):
            DynamicsConfig(dt=0.0)
        with pytest.raises(ValueError):
            DynamicsConfig(rho=-1.0)

    def test_dt_not_above_dwell(self):
        cfg = DynamicsConfig(dt=25 * NS)
        with pytest.raises(ValueError):
            run_anneal(pair(1), cfg, PerturbationSchedule(), [1.0, 0.0])

    def test_clamp_is_fixed(self):
        with pytest.raises(TypeError):
            DynamicsConfig(clamp=False)
