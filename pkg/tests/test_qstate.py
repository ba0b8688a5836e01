import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import partial_trace_loops, random_density_np, random_unitary_np
from qinfo.linalg import max_abs
from qinfo.qstate import (
    BELL_LABELS,
    CNOT,
    H,
    I2,
    X,
    X_BASIS,
    Z,
    DensityOperator,
    PureState,
    StateError,
    apply_gate,
    bell_state,
    computational_basis_state,
    density_from_json,
    fidelity,
    ket,
    measure_computational,
    measure_in_basis,
    probabilities,
    product_state,
    purify,
    random_state,
    random_unitary,
    reduced_density,
    sample_counts,
    state_from_json,
    state_to_json,
    swap_states,
    to_density,
)
from qinfo.rng import Rng

R = 1 / np.sqrt(2)


class TestBasisStates:
    def test_single(self):
        assert np.array_equal(computational_basis_state(1, 0).amplitudes, [1, 0])

    def test_ordering_convention(self):
        assert np.array_equal(computational_basis_state(2, 1).amplitudes, [0, 1, 0, 0])
        assert np.array_equal(computational_basis_state(2, 1).amplitudes, ket("01").amplitudes)

    def test_three_qubits(self):
        s = computational_basis_state(3, 5)
        assert s.num_qubits == 3
        assert np.array_equal(s.amplitudes, product_state(ket("1"), ket("0"), ket("1")).amplitudes)

    def test_out_of_range(self):
        with pytest.raises(StateError):
            computational_basis_state(2, 4)
        with pytest.raises(StateError):
            computational_basis_state(2, -1)


class TestBellStates:
    def test_singlet(self):
        assert np.allclose(bell_state("psi-").amplitudes, [0, R, -R, 0])

    def test_phi_plus(self):
        assert np.allclose(bell_state("Φ+").amplitudes, [R, 0, 0, R])

    def test_table_relations(self):
        # each Bell state is a local operation on one half of the singlet
        psi = bell_state("psi-")
        assert fidelity(apply_gate(psi, Z, [0]), bell_state("psi+")) == pytest.approx(1.0)
        assert np.allclose(apply_gate(psi, -1j * np.array([[0, -1j], [1j, 0]]), [0]).amplitudes,
                           bell_state("phi+").amplitudes)
        assert np.allclose(apply_gate(psi, -X, [0]).amplitudes, bell_state("phi-").amplitudes)

    def test_orthonormal_and_locally_mixed(self):
        states = [bell_state(b) for b in BELL_LABELS]
        for a, b in itertools.combinations(states, 2):
            assert abs(a.inner(b)) < 1e-15
        for s in states:
            for q in (0, 1):
                assert max_abs(reduced_density(s, [q]).matrix - I2 / 2) < 1e-12

    def test_unknown(self):
        with pytest.raises(StateError):
            bell_state("chi")


class TestApplyGate:
    def test_hadamard(self):
        assert np.allclose(apply_gate(ket("0"), H, [0]).amplitudes, [R, R])

    def test_bell_preparation(self):
        s = apply_gate(apply_gate(ket("00"), H, [0]), CNOT, [0, 1])
        assert fidelity(s, bell_state("phi+")) == pytest.approx(1.0, abs=1e-12)

    def test_x_on_second_qubit(self):
        assert np.array_equal(apply_gate(ket("00"), X, [1]).amplitudes, ket("01").amplitudes)

    def test_reversed_cnot(self):
        # control on qubit 1, target qubit 0
        assert np.allclose(apply_gate(ket("01"), CNOT, [1, 0]).amplitudes, ket("11").amplitudes)

    def test_nonadjacent_targets_match_full_matrix(self, gen):
        u = random_unitary_np(4, gen)
        s = PureState.normalized(gen.normal(size=8) + 1j * gen.normal(size=8))
        out = apply_gate(s, u, [2, 0])
        # full operator: reorder qubits to (2, 0, 1), apply u (x) 1, reorder back
        perm = np.zeros((8, 8))
        for i in range(8):
            b = [(i >> 2) & 1, (i >> 1) & 1, i & 1]
            j = (b[2] << 2) | (b[0] << 1) | b[1]
            perm[j, i] = 1
        full = perm.T @ np.kron(u, I2) @ perm
        assert np.allclose(out.amplitudes, full @ s.amplitudes)

    def test_errors(self):
        with pytest.raises(StateError):
            apply_gate(ket("0"), [[1, 1], [0, 1]], [0])
        with pytest.raises(StateError):
            apply_gate(ket("00"), CNOT, [0, 0])
        with pytest.raises(StateError):
            apply_gate(ket("00"), X, [2])
        with pytest.raises(StateError):
            apply_gate(ket("00"), CNOT, [0])


class TestMeasurement:
    def test_deterministic(self, rng):
        rec = measure_computational(ket("1"), [0], rng)
        assert rec.outcome_index == 1 and rec.probability == 1.0

    def test_fair_coin_frequencies(self):
        plus = ket("+")
        n = 10_000
        ones = sum(measure_computational(plus, [0], Rng(i)).outcome_index for i in range(n))
        assert abs(ones / n - 0.5) <= 3 * np.sqrt(0.25 / n)

    def test_singlet_anticorrelation(self, rng):
        for _ in range(50):
            first = measure_computational(bell_state("psi-"), [0], rng)
            second = measure_computational(first.post_state, [1], rng)
            assert second.outcome_index == 1 - first.outcome_index
            assert second.probability == pytest.approx(1.0)

    def test_repeat_reproduces(self, rng):
        s = random_state(3, rng)
        rec = measure_computational(s, [2, 0], rng)
        again = measure_computational(rec.post_state, [2, 0], rng)
        assert again.outcome_index == rec.outcome_index
        assert again.probability == pytest.approx(1.0)

    def test_born_rule_probability(self, rng):
        s = random_state(2, rng)
        rec = measure_computational(s, [0, 1], rng)
        assert rec.probability == pytest.approx(abs(s.amplitudes[rec.outcome_index]) ** 2, abs=1e-10)
        assert rec.bits == (rec.outcome_index >> 1, rec.outcome_index & 1)

    def test_plus_in_x_basis(self, rng):
        for _ in range(20):
            assert measure_in_basis(ket("+"), [0], X_BASIS, rng).outcome_index == 0

    def test_zero_in_x_basis(self):
        n = 10_000
        ones = sum(measure_in_basis(ket("0"), [0], X_BASIS, Rng(i)).outcome_index for i in range(n))
        assert abs(ones / n - 0.5) <= 3 * np.sqrt(0.25 / n)

    def test_basis_post_state(self, rng):
        rec = measure_in_basis(ket("0"), [0], X_BASIS, rng)
        expected = ket("+") if rec.outcome_index == 0 else ket("-")
        assert fidelity(rec.post_state, expected) == pytest.approx(1.0)

    def test_bell_measurement_circuit(self, rng):
        expected = {"phi+": 0, "psi+": 1, "phi-": 2, "psi-": 3}
        for label, idx in expected.items():
            s = apply_gate(apply_gate(bell_state(label), CNOT, [0, 1]), H, [0])
            assert measure_computational(s, [0, 1], rng).outcome_index == idx

    def test_determinism(self):
        def trace(seed):
            r = Rng(seed)
            s = random_state(3, r)
            out = []
            for q in (0, 1, 2):
                rec = measure_computational(s, [q], r)
                out.append((rec.outcome_index, rec.probability))
            return out

        assert trace(99) == trace(99)
        assert trace(99) != trace(100) or trace(99) != trace(101)

    def test_sample_counts(self, rng):
        c = sample_counts(ket("+"), [0], 10_000, rng)
        assert c.sum() == 10_000 and abs(c[0] / 10_000 - 0.5) < 0.02
        assert list(sample_counts(ket("+"), [0], 100, rng, X_BASIS)) == [100, 0]


class TestDensity:
    def test_basis(self):
        assert np.array_equal(to_density(ket("0")).matrix, np.diag([1, 0]))

    def test_plus(self):
        assert np.allclose(to_density(ket("+")).matrix, np.full((2, 2), 0.5))

    def test_singlet(self):
        m = np.zeros((4, 4))
        m[1, 1] = m[2, 2] = 0.5
        m[1, 2] = m[2, 1] = -0.5
        rho = to_density(bell_state("psi-"))
        assert np.allclose(rho.matrix, m)
        assert np.sum(rho.eigenvalues > 1e-9) == 1

    def test_validation(self):
        with pytest.raises(StateError):
            DensityOperator(np.diag([0.6, 0.6]))
        with pytest.raises(StateError):
            DensityOperator(np.diag([1.5, -0.5]))
        with pytest.raises(StateError):
            DensityOperator([[0.5, 0.5], [0.0, 0.5]])

    def test_pure_validation(self):
        with pytest.raises(StateError):
            PureState([1, 1])
        with pytest.raises(StateError):
            PureState([1, 0, 0])


class TestPurify:
    def test_maximally_mixed(self):
        psi = purify(DensityOperator(I2 / 2))
        assert psi.num_qubits == 2
        assert max_abs(reduced_density(psi, [0]).matrix - I2 / 2) < 1e-12
        # maximally entangled: the other half is mixed too
        assert max_abs(reduced_density(psi, [1]).matrix - I2 / 2) < 1e-12

    def test_pure_input(self):
        psi = purify(to_density(ket("0")))
        assert fidelity(psi, ket("00")) == pytest.approx(1.0)

    def test_diag(self):
        psi = purify(DensityOperator(np.diag([0.75, 0.25])))
        expected = PureState([np.sqrt(0.75), 0, 0, np.sqrt(0.25)])
        assert fidelity(psi, expected) == pytest.approx(1.0, abs=1e-12)
        assert max_abs(reduced_density(psi, [0]).matrix - np.diag([0.75, 0.25])) < 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_roundtrip_random(self, gen, n):
        for _ in range(5):
            rho = random_density_np(2**n, gen)
            psi = purify(DensityOperator(rho))
            red = partial_trace_loops(np.outer(psi.amplitudes, psi.amplitudes.conj()), [2**n, 2**n], [0])
            assert max_abs(red - rho) <= 1e-9


class TestSwap:
    def test_basis(self):
        assert np.array_equal(swap_states(ket("01"), [0], [1]).amplitudes, ket("10").amplitudes)

    def test_exchanges_factors(self, rng):
        a, b = random_state(1, rng), random_state(1, rng)
        out = swap_states(product_state(a, b), [0], [1])
        assert np.allclose(out.amplitudes, product_state(b, a).amplitudes)

    def test_multi_qubit_blocks(self, rng):
        a, b, c = random_state(2, rng), random_state(1, rng), random_state(2, rng)
        out = swap_states(product_state(a, b, c), [0, 1], [3, 4])
        assert np.allclose(out.amplitudes, product_state(c, b, a).amplitudes)

    def test_involution(self, rng):
        s = random_state(4, rng)
        assert np.allclose(swap_states(swap_states(s, [0, 2], [1, 3]), [0, 2], [1, 3]).amplitudes, s.amplitudes)

    def test_unequal(self, rng):
        with pytest.raises(StateError):
            swap_states(random_state(3, rng), [0], [1, 2])


def test_state_json_roundtrip(rng, tmp_path):
    s = random_state(2, rng)
    obj = json.loads(json.dumps(state_to_json(s)))
    assert obj["num_qubits"] == 2 and len(obj["amplitudes"]) == 4
    assert np.array_equal(state_from_json(obj).amplitudes, s.amplitudes)
    assert np.allclose(density_from_json(obj).matrix, to_density(s).matrix)
    with pytest.raises(StateError):
        state_from_json({"num_qubits": 3, "amplitudes": obj["amplitudes"]})


def test_random_unitary_is_unitary(rng):
    for d in (2, 4, 8):
        u = random_unitary(d, rng)
        assert max_abs(u.conj().T @ u - np.eye(d)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32), st.data())
def test_norm_preservation_and_born_completeness(n, seed, data):
    r = Rng(seed)
    s = random_state(n, r)
    k = data.draw(st.integers(1, min(n, 3)))
    targets = data.draw(st.permutations(range(n)))[:k]
    out = apply_gate(s, random_unitary(2**k, r), targets)
    assert abs(np.linalg.norm(out.amplitudes) - 1) <= 1e-10
    assert abs(probabilities(out, targets).sum() - 1) <= 1e-10
