import numpy as np
import pytest

from qel.ansatz import (
    CircuitLayout,
    QelParams,
    apply_gates,
    build_gates,
    init_params,
    plan_circuit,
    run_circuit,
    run_shifted,
    total_count,
)
from qel.encoder import EncoderParams
from qel.instance import ContextualInstance
from qel.ising import ProblemSpec
from qel.statevector import expectation, DiagonalEnergies, uniform_state

from conftest import make_instance, make_params

CASES = [("maxcut", 4), ("qap", 2), ("bmp", 2)]


class TestLayout:
    @pytest.mark.parametrize(
        "kind,size,d_x,counts",
        [
            ("maxcut", 16, 2, (9, 11, 11, 13)),
            ("qap", 4, 2, (12, 15, 14, 17)),
            ("bmp", 5, 256, (266, 269, 522, 525)),
        ],
    )
    def test_withbias_counts(self, kind, size, d_x, counts):
        spec = ProblemSpec(kind, size, penalty=0.0 if kind == "maxcut" else 1.0)
        got = tuple(
            CircuitLayout.for_spec(spec, p, "withbias", enc, d_x).total for enc, p in [("lin", 3), ("lin", 4), ("log", 3), ("log", 4)]
        )
        assert got == counts

    def test_strategy_columns(self):
        spec = ProblemSpec("bmp", 2, penalty=1.0)
        fam = spec.affine_family()
        orig = CircuitLayout.for_spec(spec, 2, "original", "lin", 3)
        bias = CircuitLayout.for_spec(spec, 2, "withbias", "lin", 3)
        multi = CircuitLayout.for_spec(spec, 2, "multiangle", "lin", 3)
        assert (orig.mixer_cols, orig.phase_cols) == (1, 1)
        assert (bias.mixer_cols, bias.phase_cols) == (1, 2)
        assert (multi.mixer_cols, multi.phase_cols) == (4, fam.n_linear + fam.n_quadratic)
        assert multi.n_gates == 2 * (fam.n_linear + fam.n_quadratic + 4)

    def test_invalid(self):
        with pytest.raises(ValueError):
            CircuitLayout(3, 0, "withbias", 0, 3, "lin", 2)
        with pytest.raises(ValueError):
            CircuitLayout(3, 1, "fancy", 0, 3, "lin", 2)

    def test_flat_round_trip(self, rng):
        inst = make_instance("qap", 2, rng)
        P = make_params(inst, 3, "multiangle", "log", rng)
        Q = QelParams.from_flat(P.layout, P.flat())
        np.testing.assert_array_equal(P.flat(), Q.flat())
        assert total_count(P) == P.flat().size
        with pytest.raises(ValueError):
            QelParams.from_flat(P.layout, P.flat()[:-1])

    def test_init_range(self, rng):
        inst = make_instance("maxcut", 4, rng)
        L = CircuitLayout.for_spec(inst.spec, 5, "multiangle", "lin", 3)
        P = init_params(L, rng)
        for a in (P.theta_I, P.theta_F):
            assert np.all((a >= 0) & (a <= 0.1))


class TestCircuit:
    def test_single_qubit_toy(self):
        # one linear term on one qubit, no mixer rotation: <Z> stays 0 from |+>
        spec = ProblemSpec("bmp", 1, penalty=1.0)
        inst = ContextualInstance(spec, np.ones((1, 1)), y=[0.5])
        L = CircuitLayout.for_spec(spec, 1, "withbias", "lin", 1)
        P = QelParams(L, [0.0], [0.3], EncoderParams("lin", 0.0, [1.0]))
        s = run_circuit(P, inst)
        np.testing.assert_allclose(s.probabilities(), [0.5, 0.5])

    @pytest.mark.parametrize("beta,gamma", [(0.3, 0.7), (np.pi / 4, np.pi / 8), (-0.5, 1.2)])
    def test_one_qubit_probability(self, beta, gamma):
        # P(|1>) = (1 + sin(2 beta) sin(2 gamma)) / 2 for h_0 = 1
        spec = ProblemSpec("bmp", 1, penalty=1.0)
        inst = ContextualInstance(spec, np.zeros((1, 1)), y=[0.3])
        c = inst.family().term_coefficients([0.3])[0]
        L = CircuitLayout.for_spec(spec, 1, "withbias", "lin", 1)
        P = QelParams(L, [beta], [gamma / c], EncoderParams("lin", 0.3, [0.0]))
        p1 = run_circuit(P, inst).probabilities()[1]
        assert p1 == pytest.approx((1 + np.sin(2 * beta) * np.sin(2 * gamma)) / 2, abs=1e-14)

    def test_grid_optimum_beats_uniform(self, rng):
        inst = make_instance("maxcut", 3, rng)
        P = make_params(inst, 1, "withbias", "lin", rng)
        E = DiagonalEnergies(3, inst.energies())
        best = np.inf
        for b in np.linspace(0, np.pi / 2, 20):
            for g in np.linspace(0, np.pi, 20):
                P.theta_I[:] = b
                P.theta_F[:] = g
                best = min(best, expectation(run_circuit(P, inst, yhat=inst.y), E))
        assert best < E.values.mean() - 1e-6

    def test_zero_angles_give_uniform(self, rng):
        inst = make_instance("maxcut", 5, rng)
        P = make_params(inst, 2, "withbias", "lin", rng)
        P.theta_I[:] = 0
        P.theta_F[:] = 0
        np.testing.assert_allclose(run_circuit(P, inst).amps, uniform_state(5).amps, atol=1e-15)

    @pytest.mark.parametrize("kind,size", CASES)
    @pytest.mark.parametrize("strategy", ["original", "withbias", "multiangle"])
    def test_fast_path_matches_gate_list(self, kind, size, strategy, rng):
        inst = make_instance(kind, size, rng)
        P = make_params(inst, 2, strategy, "log", rng)
        fast = run_circuit(P, inst)
        ref = apply_gates(build_gates(P, inst), inst.spec.n_qubits)
        np.testing.assert_allclose(fast.amps, ref.amps, atol=1e-12)

    def test_known_coefficient_mode_ignores_encoder(self, rng):
        inst = make_instance("maxcut", 4, rng)
        P = make_params(inst, 2, "withbias", "log", rng)
        Q = P.copy()
        Q.encoder.w1[:] += 5.0
        a = run_circuit(P, inst, yhat=inst.y)
        b = run_circuit(Q, inst, yhat=inst.y)
        np.testing.assert_array_equal(a.amps, b.amps)
        assert plan_circuit(P, inst, yhat=inst.y).encoder_jac is None

    def test_shifted_gate_matches_gate_list(self, rng):
        inst = make_instance("bmp", 2, rng)
        P = make_params(inst, 2, "withbias", "lin", rng)
        gates = build_gates(P, inst)
        for q in (0, 5, len(gates) - 1):
            g = gates[q]
            moved = [
                type(g)(x.layer, x.kind, x.qubits, x.index, x.alpha + (0.2 if i == q else 0.0), x.dalpha)
                for i, x in enumerate(gates)
            ]
            ref = apply_gates(moved, inst.spec.n_qubits)
            np.testing.assert_allclose(run_shifted(P, inst, q, 0.2).amps, ref.amps, atol=1e-12)
        with pytest.raises(IndexError):
            run_shifted(P, inst, len(gates), 0.1)

    def test_layout_mismatch(self, rng):
        a = make_instance("maxcut", 4, rng)
        b = make_instance("maxcut", 5, rng)
        P = make_params(a, 1, "withbias", "lin", rng)
        with pytest.raises(ValueError):
            run_circuit(P, b)

    def test_norm(self, rng):
        inst = make_instance("qap", 2, rng)
        P = make_params(inst, 3, "multiangle", "log", rng)
        assert run_circuit(P, inst).norm_sq() == pytest.approx(1.0, abs=1e-12)

    def test_expectation_bounded_by_spectrum(self, rng):
        inst = make_instance("maxcut", 5, rng)
        E = inst.energies()
        for _ in range(20):
            P = make_params(inst, 2, "multiangle", "log", rng, angle_scale=3.0)
            e = expectation(run_circuit(P, inst), DiagonalEnergies(5, E))
            assert E.min() - 1e-12 <= e <= E.max() + 1e-12
