"""The QEL circuit: p alternations of a context-dependent phase separator and a mixer.

Every gate is exp(-i * alpha * P) for a Pauli string P.  Phase gates carry
alpha = theta_F[k, col] * c_q where c_q is the Ising coefficient of term q
computed from the encoder output; mixer gates carry alpha = -theta_I[k, col]
(the mixer is exp(+i theta X)).  Within a layer all gates commute, so a phase
layer is applied as one diagonal built by a Walsh-Hadamard transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qel import _kernels
from qel.encoder import ALIASES, EncoderParams, encode_batch, encode_jacobian, init_encoder, param_count
from qel.ising import ProblemSpec
from qel.statevector import (
    Statevector,
    apply_multiangle_mixer,
    apply_single_pauli_phase,
    check_capacity,
    uniform_state,
)

STRATEGIES = ("original", "withbias", "multiangle")


@dataclass(frozen=True)
class CircuitLayout:
    """Shape of the flat parameter vector: theta_I | theta_F | encoder."""

    n: int
    p: int
    strategy: str
    n_linear: int
    n_quadratic: int
    encoder_kind: str
    d_x: int

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        object.__setattr__(self, "encoder_kind", ALIASES[self.encoder_kind])

    @classmethod
    def for_spec(cls, spec: ProblemSpec, p: int, strategy: str, encoder_kind: str, d_x: int) -> "CircuitLayout":
        fam = spec.affine_family(np.zeros((spec.size, spec.size))) if spec.kind == "qap" else spec.affine_family()
        return cls(spec.n_qubits, p, strategy, fam.n_linear, fam.n_quadratic, encoder_kind, d_x)

    @property
    def n_terms(self) -> int:
        return self.n_linear + self.n_quadratic

    @property
    def mixer_cols(self) -> int:
        return self.n if self.strategy == "multiangle" else 1

    @property
    def phase_cols(self) -> int:
        if self.strategy == "original":
            return 1
        if self.strategy == "withbias":
            return int(self.n_linear > 0) + int(self.n_quadratic > 0)
        return self.n_terms

    @property
    def qubit_cols(self) -> np.ndarray:
        return np.arange(self.n) if self.strategy == "multiangle" else np.zeros(self.n, dtype=np.int64)

    @property
    def term_cols(self) -> np.ndarray:
        if self.strategy == "original":
            return np.zeros(self.n_terms, dtype=np.int64)
        if self.strategy == "withbias":
            quad_col = 1 if self.n_linear > 0 else 0
            return np.array([0] * self.n_linear + [quad_col] * self.n_quadratic, dtype=np.int64)
        return np.arange(self.n_terms)

    @property
    def n_theta_I(self) -> int:
        return self.p * self.mixer_cols

    @property
    def n_theta_F(self) -> int:
        return self.p * self.phase_cols

    @property
    def n_encoder(self) -> int:
        return param_count(self.encoder_kind, self.d_x)

    @property
    def total(self) -> int:
        return self.n_theta_I + self.n_theta_F + self.n_encoder

    @property
    def n_gates(self) -> int:
        return self.p * (self.n_terms + self.n)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("n", "p", "strategy", "n_linear", "n_quadratic", "encoder_kind", "d_x")}


@dataclass(eq=False)
class QelParams:
    layout: CircuitLayout
    theta_I: np.ndarray
    theta_F: np.ndarray
    encoder: EncoderParams

    def __post_init__(self):
        L = self.layout
        self.theta_I = np.asarray(self.theta_I, dtype=np.float64).reshape(L.p, L.mixer_cols)
        self.theta_F = np.asarray(self.theta_F, dtype=np.float64).reshape(L.p, L.phase_cols)
        if self.encoder.d_x != L.d_x or self.encoder.kind != L.encoder_kind:
            raise ValueError("encoder does not match layout")

    @property
    def p(self) -> int:
        return self.layout.p

    @property
    def strategy(self) -> str:
        return self.layout.strategy

    def flat(self) -> np.ndarray:
        return np.concatenate([self.theta_I.ravel(), self.theta_F.ravel(), self.encoder.flat()])

    @classmethod
    def from_flat(cls, layout: CircuitLayout, v) -> "QelParams":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (layout.total,):
            raise ValueError(f"expected {layout.total} parameters, got {v.shape}")
        a, b = layout.n_theta_I, layout.n_theta_I + layout.n_theta_F
        enc = EncoderParams.from_flat(layout.encoder_kind, layout.d_x, v[b:])
        return cls(layout, v[:a].copy(), v[a:b].copy(), enc)

    def copy(self) -> "QelParams":
        return QelParams.from_flat(self.layout, self.flat())


def total_count(params: QelParams) -> int:
    return params.layout.total


def init_params(
    layout: CircuitLayout, rng: np.random.Generator, calibration=None, angle_scale: float = 0.1
) -> QelParams:
    """Angles ~ U(0, angle_scale); encoder per :func:`qel.encoder.init_encoder`."""
    theta_I = rng.uniform(0.0, angle_scale, size=(layout.p, layout.mixer_cols))
    theta_F = rng.uniform(0.0, angle_scale, size=(layout.p, layout.phase_cols))
    enc = init_encoder(layout.encoder_kind, layout.d_x, rng, calibration)
    return QelParams(layout, theta_I, theta_F, enc)


# ------------------------------------------------------------------- plans


@dataclass(eq=False)
class CircuitPlan:
    """Everything needed to run (or differentiate) one instance's circuit."""

    n: int
    masks: np.ndarray
    coef: np.ndarray  # Ising coefficient per term, linear then quadratic
    term_angles: np.ndarray  # (p, n_terms) effective phase angles
    mixer_angles: np.ndarray  # (p, n) theta per qubit; the gate angle is its negative
    jacobian: np.ndarray  # d coef / d y_hat, (n_terms, m)
    encoder_jac: np.ndarray | None = field(default=None)  # d y_hat / d w, (m, n_enc)


def plan_circuit(params: QelParams, context, yhat=None, with_jacobian: bool = False) -> CircuitPlan:
    """Evaluate the encoder and effective angles for one context.

    Passing ``yhat`` bypasses the encoder (known-coefficient mode).
    """
    L = params.layout
    if context.spec.n_qubits != L.n:
        raise ValueError("context does not match the circuit layout")
    check_capacity(L.n)
    fam = context.family()
    if (fam.n_linear, fam.n_quadratic) != (L.n_linear, L.n_quadratic):
        raise ValueError("term structure does not match the circuit layout")
    if yhat is None:
        yhat = encode_batch(params.encoder, context.covariates)
        enc_jac = encode_jacobian(params.encoder, context.covariates) if with_jacobian else None
    else:
        yhat = np.asarray(yhat, dtype=np.float64)
        enc_jac = None
    coef = fam.term_coefficients(yhat)
    return CircuitPlan(
        n=L.n,
        masks=fam.masks,
        coef=coef,
        term_angles=params.theta_F[:, L.term_cols] * coef[None, :],
        mixer_angles=params.theta_I[:, L.qubit_cols],
        jacobian=fam.jacobian,
        encoder_jac=enc_jac,
    )


def layer_phases(plan: CircuitPlan, angles: np.ndarray) -> np.ndarray:
    a = np.zeros(1 << plan.n)
    a[plan.masks] = angles
    _kernels.fwht(a)
    return a


def apply_phase_layer(amps: np.ndarray, plan: CircuitPlan, angles: np.ndarray) -> None:
    _kernels.phase(amps, layer_phases(plan, angles))


def apply_mixer_layer(amps: np.ndarray, thetas: np.ndarray) -> None:
    _kernels.mixer(amps, np.cos(thetas), np.sin(thetas))


def forward(plan: CircuitPlan, shift=None) -> np.ndarray:
    """Amplitudes of U|s>.  ``shift`` = (k, kind, index, delta) adds delta to one gate angle."""
    n = plan.n
    amps = np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)
    for k in range(plan.term_angles.shape[0]):
        apply_phase_layer(amps, plan, plan.term_angles[k])
        thetas = plan.mixer_angles[k]
        if shift is not None and shift[0] == k:
            _, kind, index, delta = shift
            if kind == "phase":
                # the extra gate commutes with the layer, so it can sit right after it
                single = np.zeros_like(plan.term_angles[k])
                single[index] = delta
                apply_phase_layer(amps, plan, single)
            else:
                thetas = thetas.copy()
                thetas[index] -= delta
        apply_mixer_layer(amps, thetas)
    return amps


def run_circuit(params: QelParams, context, yhat=None) -> Statevector:
    plan = plan_circuit(params, context, yhat)
    return Statevector(plan.n, forward(plan))


# ------------------------------------------------------------- gate lists


@dataclass(frozen=True, eq=False)
class EffectiveGate:
    layer: int
    kind: str  # "phase" or "mixer"
    qubits: tuple[int, ...]
    index: int  # term index (phase) or qubit (mixer)
    alpha: float
    dalpha: dict  # flat parameter index -> d alpha / d param


def build_gates(params: QelParams, context, yhat=None) -> list[EffectiveGate]:
    """The circuit as an ordered product of single-Pauli-string gates."""
    L = params.layout
    plan = plan_circuit(params, context, yhat, with_jacobian=yhat is None)
    fam = context.family()
    qubits = [(int(i),) for i in fam.lin_idx] + [(int(i), int(j)) for i, j in fam.quad_idx]
    base_F = L.n_theta_I
    base_w = L.n_theta_I + L.n_theta_F
    term_cols, qubit_cols = L.term_cols, L.qubit_cols
    if plan.encoder_jac is not None:
        coef_w = plan.jacobian @ plan.encoder_jac  # d coef_q / d w
    gates = []
    for k in range(L.p):
        for q, qs in enumerate(qubits):
            col = term_cols[q]
            theta = params.theta_F[k, col]
            d = {base_F + k * L.phase_cols + col: float(plan.coef[q])}
            if plan.encoder_jac is not None:
                for j, v in enumerate(theta * coef_w[q]):
                    if v != 0.0:
                        d[base_w + j] = d.get(base_w + j, 0.0) + float(v)
            gates.append(EffectiveGate(k, "phase", qs, q, float(plan.term_angles[k, q]), d))
        for i in range(L.n):
            col = qubit_cols[i]
            gates.append(
                EffectiveGate(k, "mixer", (i,), i, -float(plan.mixer_angles[k, i]), {k * L.mixer_cols + col: -1.0})
            )
    return gates


def apply_gates(gates, n: int, state: Statevector | None = None) -> Statevector:
    """Reference path: apply every gate one by one through the public state API."""
    state = uniform_state(n) if state is None else state
    for g in gates:
        if g.kind == "phase":
            state = apply_single_pauli_phase(state, g.qubits, g.alpha)
        else:
            thetas = np.zeros(n)
            thetas[g.qubits[0]] = -g.alpha
            state = apply_multiangle_mixer(state, thetas)
    return state


def run_shifted(params: QelParams, context, gate_index: int, shift: float, yhat=None) -> Statevector:
    """run_circuit with the effective angle of gate ``gate_index`` moved by ``shift``."""
    L = params.layout
    if not 0 <= gate_index < L.n_gates:
        raise IndexError(f"gate index {gate_index} out of range [0, {L.n_gates})")
    per_layer = L.n_terms + L.n
    k, r = divmod(gate_index, per_layer)
    spec = (k, "phase", r, shift) if r < L.n_terms else (k, "mixer", r - L.n_terms, shift)
    plan = plan_circuit(params, context, yhat)
    return Statevector(plan.n, forward(plan, spec))
