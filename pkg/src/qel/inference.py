"""Test-time decoding: sample the trained circuit and keep the most frequent
(feasible) bitstring.  Only the context is available here, never y."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qel.ansatz import QelParams, forward, plan_circuit
from qel.instance import Context
from qel.ising import ProblemSpec, is_feasible
from qel.statevector import sample_probabilities

DEFAULT_SHOTS = 4096


@dataclass(frozen=True)
class DecodedDecision:
    z: int
    frequency: int
    feasible: bool
    fallback_used: bool


def feasible_mask(spec: ProblemSpec, zs: np.ndarray) -> np.ndarray:
    """Vectorised one-hot row/column check; all True for MaxCut."""
    zs = np.asarray(zs, dtype=np.int64)
    if spec.kind == "maxcut":
        return np.ones(zs.shape, dtype=bool)
    n = spec.size
    x = ((zs[:, None] >> np.arange(n * n)) & 1).reshape(-1, n, n)
    return np.all(x.sum(axis=1) == 1, axis=1) & np.all(x.sum(axis=2) == 1, axis=1)


def greedy_repair(z: int, spec: ProblemSpec) -> int:
    """Row by row, take the free column with the largest entry (ties: lowest column)."""
    if spec.kind == "maxcut":
        raise ValueError("repair only applies to permutation-constrained problems")
    n = spec.size
    x = (int(z) >> np.arange(n * n)) & 1
    x = x.reshape(n, n)
    free = np.ones(n, dtype=bool)
    out = 0
    for i in range(n):
        cols = np.flatnonzero(free)
        j = int(cols[np.argmax(x[i, cols])])
        free[j] = False
        out |= 1 << (i * n + j)
    return out


def most_frequent(samples: np.ndarray) -> tuple[int, int]:
    """(z, count) of the modal value; ties go to the smallest z."""
    vals, counts = np.unique(samples, return_counts=True)
    k = int(np.argmax(counts))  # np.unique sorts, argmax returns the first maximum
    return int(vals[k]), int(counts[k])


def decide(params: QelParams, context: Context, n_shots: int, rng) -> DecodedDecision:
    """Decode one decision from ``n_shots`` samples of the circuit driven by encoded coefficients."""
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    spec = context.spec
    amps = forward(plan_circuit(params, context))
    samples = sample_probabilities(amps.real**2 + amps.imag**2, n_shots, rng)
    if spec.kind == "maxcut":
        z, freq = most_frequent(samples)
        return DecodedDecision(z, freq, True, False)
    ok = feasible_mask(spec, samples)
    if ok.any():
        z, freq = most_frequent(samples[ok])
        return DecodedDecision(z, freq, True, False)
    z, _ = most_frequent(samples)
    fixed = greedy_repair(z, spec)
    return DecodedDecision(fixed, int(np.sum(samples == fixed)), is_feasible(spec, fixed), True)
