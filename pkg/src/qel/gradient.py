"""Gradients of the training loss with respect to the flat parameter vector.

Every gate is exp(-i alpha_q P_q) with P_q^2 = 1, so

    d loss / d alpha_q = loss(alpha_q + pi/4) - loss(alpha_q - pi/4)

exactly.  Three routes produce the per-gate derivatives D_q:

* ``adjoint`` (default for exact mode): one forward and one backward sweep.
  Per layer, D_q = 2 Im <lam| P_q |phi> for all phase terms at once through
  a Walsh-Hadamard transform, and a kernel for the mixer terms.
* ``shift``: the literal +/- pi/4 rule, 2 circuit runs per gate.
* shots: the shift rule with each expectation replaced by an M-shot mean.

The D_q are mapped to parameters by the chain rule through the effective
angles alpha_q(theta, w).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qel import _kernels
from qel.ansatz import QelParams, apply_mixer_layer, forward, layer_phases, plan_circuit
from qel.loss import _nonempty, loss_exact
from qel.parallel import pmap
from qel.statevector import sample_probabilities

SHIFT = np.pi / 4


@dataclass(frozen=True)
class GradMode:
    """``exact`` (adjoint), ``shift`` (exact, literal shift rule) or ``shots`` with M."""

    kind: str = "exact"
    shots: int = 0

    @classmethod
    def parse(cls, text: str) -> "GradMode":
        text = text.strip().lower()
        if text in ("exact", "shift"):
            return cls(text)
        if text.startswith("shots:"):
            m = int(text.split(":", 1)[1])
            if m < 1:
                raise ValueError("shot count must be >= 1")
            return cls("shots", m)
        raise ValueError(f"unknown gradient mode {text!r}; use exact, shift or shots:M")

    def __str__(self) -> str:
        return f"shots:{self.shots}" if self.kind == "shots" else self.kind


@dataclass(eq=False)
class GradientVector:
    values: np.ndarray
    mode: str
    loss: float = float("nan")  # batch loss when the method gets it for free

    def __len__(self) -> int:
        return self.values.shape[0]

    def norm_sq(self) -> float:
        return float(self.values @ self.values)


def _onehot(cols: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((cols.shape[0], width))
    out[np.arange(cols.shape[0]), cols] = 1.0
    return out


def chain_rule(params: QelParams, plan, d_phase: np.ndarray, d_mixer: np.ndarray) -> np.ndarray:
    """Map per-gate derivatives (p, T) and (p, n) to the flat parameter layout."""
    L = params.layout
    g_I = -d_mixer @ _onehot(L.qubit_cols, L.mixer_cols)
    g_F = (d_phase * plan.coef[None, :]) @ _onehot(L.term_cols, L.phase_cols)
    d_coef = np.sum(d_phase * params.theta_F[:, L.term_cols], axis=0)
    if plan.encoder_jac is None:
        g_w = np.zeros(L.n_encoder)
    else:
        g_w = plan.encoder_jac.T @ (plan.jacobian.T @ d_coef)
    return np.concatenate([g_I.ravel(), g_F.ravel(), g_w])


# ----------------------------------------------------------------- adjoint


def adjoint_gate_derivatives(plan, energies: np.ndarray):
    """(loss, D_phase (p, T), D_mixer (p, n)) for one instance."""
    n = plan.n
    p = plan.term_angles.shape[0]
    phi = forward(plan)
    loss = float((phi.real**2 + phi.imag**2) @ energies)
    lam = energies * phi
    d_phase = np.empty_like(plan.term_angles)
    d_mixer = np.empty_like(plan.mixer_angles)
    for k in range(p - 1, -1, -1):
        d_mixer[k] = _kernels.mixer_grad(lam, phi, n)
        thetas = -plan.mixer_angles[k]
        apply_mixer_layer(phi, thetas)
        apply_mixer_layer(lam, thetas)
        c = 2.0 * (lam.real * phi.imag - lam.imag * phi.real)
        _kernels.fwht(c)
        d_phase[k] = c[plan.masks]
        back = -layer_phases(plan, plan.term_angles[k])
        _kernels.phase(phi, back)
        _kernels.phase(lam, back)
    return loss, d_phase, d_mixer


def _instance_adjoint(params: QelParams, inst):
    plan = plan_circuit(params, inst, with_jacobian=True)
    loss, d_phase, d_mixer = adjoint_gate_derivatives(plan, inst.energies())
    return loss, chain_rule(params, plan, d_phase, d_mixer)


# ------------------------------------------------------------ shift rule


def _shift_targets(plan):
    p, T = plan.term_angles.shape
    n = plan.n
    for k in range(p):
        for q in range(T):
            yield k, "phase", q
        for i in range(n):
            yield k, "mixer", i


def _shift_derivatives(plan, estimate):
    """Apply the +/- pi/4 rule gate by gate; ``estimate(amps, key)`` returns a loss."""
    d_phase = np.zeros_like(plan.term_angles)
    d_mixer = np.zeros_like(plan.mixer_angles)
    for q_flat, (k, kind, idx) in enumerate(_shift_targets(plan)):
        plus = estimate(forward(plan, (k, kind, idx, SHIFT)), (q_flat, 0))
        minus = estimate(forward(plan, (k, kind, idx, -SHIFT)), (q_flat, 1))
        target = d_phase if kind == "phase" else d_mixer
        target[k, idx] = plus - minus
    return d_phase, d_mixer


def _instance_shift(params: QelParams, inst) -> np.ndarray:
    plan = plan_circuit(params, inst, with_jacobian=True)
    E = inst.energies()

    def exact(amps, _key):
        return float((amps.real**2 + amps.imag**2) @ E)

    return chain_rule(params, plan, *_shift_derivatives(plan, exact))


def shot_stream(seed: int, instance: int, gate: int, sign: int) -> np.random.Generator:
    """Independent RNG per (instance, gate, sign) triple, fixed by the base seed."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(instance, gate, sign)))


def _instance_shots(params: QelParams, inst, M: int, seed: int, l: int) -> np.ndarray:
    plan = plan_circuit(params, inst, with_jacobian=True)
    E = inst.energies()

    def sampled(amps, key):
        z = sample_probabilities(amps.real**2 + amps.imag**2, M, shot_stream(seed, l, *key))
        return float(np.mean(E[z]))

    return chain_rule(params, plan, *_shift_derivatives(plan, sampled))


# ------------------------------------------------------------------ public


def grad_exact(params: QelParams, batch, method: str = "adjoint") -> GradientVector:
    """Exact batch-mean gradient of :func:`qel.loss.loss_exact`."""
    batch = _nonempty(batch)
    if method == "adjoint":
        parts = pmap(lambda inst: _instance_adjoint(params, inst), batch)
        losses, grads = zip(*parts)
        return GradientVector(np.mean(grads, axis=0), "exact", float(np.mean(losses)))
    if method == "shift":
        parts = pmap(lambda inst: _instance_shift(params, inst), batch)
        return GradientVector(np.mean(parts, axis=0), "exact")
    raise ValueError(f"unknown method {method!r}")


def _base_seed(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63 - 1))
    return int(rng)


def grad_shots(params: QelParams, batch, M: int, rng) -> GradientVector:
    """Shift-rule gradient with each shifted expectation estimated from M shots.

    ``rng`` is an integer seed or a Generator (one draw is taken from it).  The
    stream for each (instance, gate, sign) triple comes from :func:`shot_stream`.
    """
    batch = _nonempty(batch)
    if M < 1:
        raise ValueError("M must be >= 1")
    seed = _base_seed(rng)
    parts = pmap(lambda li: _instance_shots(params, li[1], M, seed, li[0]), list(enumerate(batch)))
    return GradientVector(np.mean(parts, axis=0), f"shots:{M}")


def grad_fd(params: QelParams, batch, h: float = 1e-5) -> GradientVector:
    """Central differences of loss_exact over each flat parameter."""
    if h <= 0:
        raise ValueError("h must be positive")
    batch = _nonempty(batch)
    v = params.flat()
    out = np.empty_like(v)
    for j in range(v.shape[0]):
        vp, vm = v.copy(), v.copy()
        vp[j] += h
        vm[j] -= h
        lp = loss_exact(QelParams.from_flat(params.layout, vp), batch)
        lm = loss_exact(QelParams.from_flat(params.layout, vm), batch)
        out[j] = (lp - lm) / (2.0 * h)
    return GradientVector(out, f"fd:{h}")


def gradient(params: QelParams, batch, mode: GradMode, seed: int = 0) -> GradientVector:
    if mode.kind == "shots":
        return grad_shots(params, batch, mode.shots, seed)
    return grad_exact(params, batch, "shift" if mode.kind == "shift" else "adjoint")
