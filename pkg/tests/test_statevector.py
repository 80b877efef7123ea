import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qel.statevector import (
    CapacityError,
    DiagonalEnergies,
    MAX_QUBITS,
    Statevector,
    apply_diagonal_phase,
    apply_mixer,
    apply_multiangle_mixer,
    apply_single_pauli_phase,
    check_capacity,
    expectation,
    pauli_z_signs,
    sample,
    uniform_state,
)


class TestStates:
    def test_uniform(self):
        s = uniform_state(3)
        np.testing.assert_allclose(s.probabilities(), np.full(8, 1 / 8))

    def test_basis(self):
        s = Statevector.basis(3, 5)
        assert s.probabilities()[5] == 1.0
        assert s.norm_sq() == 1.0

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            Statevector(3, np.zeros(4))

    @pytest.mark.parametrize("n", [0, MAX_QUBITS + 1])
    def test_capacity(self, n):
        with pytest.raises(CapacityError):
            check_capacity(n)


class TestGates:
    def test_single_qubit_mixer_closed_form(self):
        # exp(+i t X)|0> = cos t |0> + i sin t |1>
        t = 0.37
        s = apply_multiangle_mixer(Statevector.basis(1, 0), [t])
        np.testing.assert_allclose(s.amps, [np.cos(t), 1j * np.sin(t)], atol=1e-15)

    def test_mixer_matches_multiangle(self):
        s = uniform_state(4)
        s = apply_diagonal_phase(s, DiagonalEnergies(4, np.arange(16.0)), 0.3)
        a = apply_mixer(s, 0.7)
        b = apply_multiangle_mixer(s, [0.7] * 4)
        np.testing.assert_allclose(a.amps, b.amps)

    def test_diagonal_phase_keeps_probabilities(self):
        s = apply_mixer(Statevector.basis(3, 0), 0.4)
        out = apply_diagonal_phase(s, DiagonalEnergies(3, np.linspace(-1, 2, 8)), 1.1)
        np.testing.assert_allclose(out.probabilities(), s.probabilities(), atol=1e-15)
        np.testing.assert_allclose(out.amps, s.amps * np.exp(-1.1j * np.linspace(-1, 2, 8)))

    def test_pauli_signs(self):
        np.testing.assert_array_equal(pauli_z_signs(2, (0,)), [1, -1, 1, -1])
        np.testing.assert_array_equal(pauli_z_signs(2, (0, 1)), [1, -1, -1, 1])

    def test_single_pauli_phase_is_pauli_rotation(self):
        s = apply_mixer(uniform_state(2), 0.2)
        out = apply_single_pauli_phase(s, (0, 1), 0.5)
        Z = np.diag([1.0, -1.0])
        ZZ = np.kron(Z, Z)
        U = np.cos(0.5) * np.eye(4) - 1j * np.sin(0.5) * ZZ
        np.testing.assert_allclose(out.amps, U @ s.amps, atol=1e-14)

    @pytest.mark.parametrize("term", [(), (0, 0), (0, 1, 2)])
    def test_bad_terms(self, term):
        with pytest.raises(ValueError):
            apply_single_pauli_phase(uniform_state(3), term, 0.1)

    def test_term_out_of_range(self):
        with pytest.raises(IndexError):
            apply_single_pauli_phase(uniform_state(2), (0, 5), 0.1)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            expectation(uniform_state(2), DiagonalEnergies(3, np.zeros(8)))

    @given(st.integers(1, 8), st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=40, deadline=None)
    def test_norm_preserved(self, n, a, b):
        s = uniform_state(n)
        s = apply_diagonal_phase(s, DiagonalEnergies(n, np.arange(1 << n, dtype=float) ** 0.5), a)
        s = apply_mixer(s, b)
        assert s.norm_sq() == pytest.approx(1.0, abs=1e-12)


class TestSampling:
    def test_basis_state_always_sampled(self, rng):
        z = sample(Statevector.basis(4, 11), 100, rng)
        assert np.all(z == 11)

    def test_seeded_reproducible(self):
        s = apply_mixer(Statevector.basis(3, 0), 0.5)
        a = sample(s, 50, np.random.default_rng(7))
        b = sample(s, 50, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_frequencies_follow_probabilities(self, rng):
        s = apply_mixer(Statevector.basis(3, 0), 0.5)
        z = sample(s, 200_000, rng)
        freq = np.bincount(z, minlength=8) / z.size
        np.testing.assert_allclose(freq, s.probabilities(), atol=4e-3)

    def test_zero_probability_never_drawn(self, rng):
        amps = np.zeros(8, dtype=complex)
        amps[[2, 5]] = np.sqrt(0.5)
        z = sample(Statevector(3, amps), 10_000, rng)
        assert set(np.unique(z)) == {2, 5}

    def test_shots_must_be_positive(self, rng):
        with pytest.raises(ValueError):
            sample(uniform_state(2), 0, rng)
