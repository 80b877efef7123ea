import numpy as np
import pytest

from qel.ansatz import run_circuit
from qel.ising import energy, ground_state
from qel.loss import loss_exact, loss_shots
from qel.statevector import DiagonalEnergies, expectation

from conftest import make_instance, make_params


class TestExactLoss:
    def test_zero_angles_give_mean_offset(self, rng):
        batch = [make_instance("maxcut", 5, rng) for _ in range(3)]
        P = make_params(batch[0], 2, "withbias", "log", rng)
        P.theta_I[:] = 0
        P.theta_F[:] = 0
        # the uniform state averages every Z term to zero
        offsets = [inst.family().offset(inst.y) for inst in batch]
        assert loss_exact(P, batch) == pytest.approx(np.mean(offsets), abs=1e-12)

    def test_uses_realised_coefficients(self, rng):
        inst = make_instance("maxcut", 4, rng)
        P = make_params(inst, 2, "withbias", "log", rng)
        probs = run_circuit(P, inst).probabilities()
        assert loss_exact(P, [inst]) == pytest.approx(probs @ inst.energies(), abs=1e-12)

    @pytest.mark.parametrize("kind,size", [("maxcut", 6), ("qap", 3), ("bmp", 3)])
    def test_matches_measurement_distribution(self, kind, size, rng):
        # full sum over the final-state distribution of f(z, y), with f from the model
        inst = make_instance(kind, size, rng)
        P = make_params(inst, 2, "multiangle", "lin", rng)
        probs = run_circuit(P, inst).probabilities()
        model = inst.model()
        direct = sum(probs[z] * energy(model, z) for z in range(probs.size))
        assert loss_exact(P, [inst]) == pytest.approx(direct, rel=1e-10, abs=1e-10)

    def test_variational_floor(self, rng):
        batch = [make_instance("maxcut", 6, rng) for _ in range(4)]
        floor = np.mean([ground_state(i.model())[1] for i in batch])
        for _ in range(100):
            P = make_params(batch[0], 2, "multiangle", "log", rng, angle_scale=np.pi)
            assert loss_exact(P, batch) >= floor - 1e-9

    def test_empty_batch(self, rng):
        inst = make_instance("maxcut", 3, rng)
        with pytest.raises(ValueError):
            loss_exact(make_params(inst, 1, "withbias", "lin", rng), [])


class TestShotLoss:
    def test_within_clt_band(self, rng):
        inst = make_instance("maxcut", 8, rng)
        P = make_params(inst, 2, "withbias", "log", rng)
        state = run_circuit(P, inst)
        E = DiagonalEnergies(8, inst.energies())
        exact = expectation(state, E)
        sigma = np.sqrt(state.probabilities() @ (E.values - exact) ** 2)
        est = loss_shots(P, [inst], 4096, 0)
        assert abs(est - exact) <= 3 * sigma / np.sqrt(4096)

    def test_unbiased_over_seeds(self, rng):
        inst = make_instance("maxcut", 5, rng)
        P = make_params(inst, 1, "withbias", "lin", rng)
        exact = loss_exact(P, [inst])
        state = run_circuit(P, inst)
        sigma = np.sqrt(state.probabilities() @ (inst.energies() - exact) ** 2)
        shots = 64
        est = np.mean([loss_shots(P, [inst], shots, s) for s in range(500)])
        assert abs(est - exact) <= 4 * sigma / np.sqrt(500 * shots)

    def test_constant_cost_exact(self, rng):
        inst = make_instance("maxcut", 3, rng)
        P = make_params(inst, 1, "withbias", "lin", rng)
        # all-zero coefficients: every outcome costs the same, so shots add no noise
        inst0 = type(inst)(inst.spec, inst.covariates, y=np.zeros(3))
        assert loss_shots(P, [inst0], 7, 1) == loss_exact(P, [inst0]) == 0.0

    def test_reproducible(self, rng):
        inst = make_instance("bmp", 2, rng)
        P = make_params(inst, 1, "withbias", "lin", rng)
        assert loss_shots(P, [inst], 100, 3) == loss_shots(P, [inst], 100, 3)

    def test_bad_shots(self, rng):
        inst = make_instance("maxcut", 3, rng)
        with pytest.raises(ValueError):
            loss_shots(make_params(inst, 1, "withbias", "lin", rng), [inst], 0, 0)
