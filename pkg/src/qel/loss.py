"""Training objective: mean expected cost of the realised Hamiltonians.

The circuit is driven by encoded coefficients; the observable uses the
realised ones.
"""

from __future__ import annotations

import numpy as np

from qel.ansatz import QelParams, forward, plan_circuit
from qel.parallel import pmap
from qel.statevector import sample_probabilities


def _nonempty(batch):
    batch = list(batch)
    if not batch:
        raise ValueError("batch must be non-empty")
    return batch


def instance_loss(params: QelParams, inst) -> float:
    amps = forward(plan_circuit(params, inst))
    probs = amps.real**2 + amps.imag**2
    return float(probs @ inst.energies())


def loss_exact(params: QelParams, batch) -> float:
    batch = _nonempty(batch)
    return float(np.mean(pmap(lambda inst: instance_loss(params, inst), batch)))


def loss_shots(params: QelParams, batch, n_shots: int, rng) -> float:
    """Shot estimate: mean energy of ``n_shots`` sampled bitstrings per instance."""
    batch = _nonempty(batch)
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    total = 0.0
    for inst in batch:
        amps = forward(plan_circuit(params, inst))
        z = sample_probabilities(amps.real**2 + amps.imag**2, n_shots, rng)
        total += float(np.mean(inst.energies()[z]))
    return total / len(batch)
