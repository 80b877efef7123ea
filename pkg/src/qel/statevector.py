"""Dense statevector simulation for circuits with a diagonal cost operator.

Basis index ``z`` encodes a bitstring with bit ``i`` of ``z`` equal to the
decision variable ``x_i`` (bit 0 least significant).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qel import _kernels

MAX_QUBITS = 26


class CapacityError(ValueError):
    """Requested problem does not fit the simulator's memory cap."""


def check_capacity(n: int, cap: int = MAX_QUBITS) -> None:
    if not 1 <= n <= cap:
        raise CapacityError(f"qubit count {n} outside [1, {cap}]")


@dataclass(eq=False)
class Statevector:
    n: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} amplitudes, got {self.amps.shape}")

    @classmethod
    def basis(cls, n: int, z: int) -> "Statevector":
        check_capacity(n)
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[z] = 1.0
        return cls(n, amps)

    def probabilities(self) -> np.ndarray:
        return self.amps.real**2 + self.amps.imag**2

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def copy(self) -> "Statevector":
        return Statevector(self.n, self.amps.copy())


@dataclass(eq=False)
class DiagonalEnergies:
    """values[z] = f(z), the eigenvalue of the cost operator on basis state z."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} energies, got {self.values.shape}")


def _check_dims(state: Statevector, energies: DiagonalEnergies) -> None:
    if state.n != energies.n:
        raise ValueError(f"dimension mismatch: state has {state.n} qubits, energies {energies.n}")


def uniform_state(n: int) -> Statevector:
    """Equal superposition over all 2**n bitstrings."""
    check_capacity(n)
    return Statevector(n, np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128))


def apply_diagonal_phase(state: Statevector, energies: DiagonalEnergies, theta: float) -> Statevector:
    """Multiply amplitude z by exp(-i * theta * values[z])."""
    _check_dims(state, energies)
    out = state.copy()
    _kernels.phase(out.amps, theta * energies.values)
    return out


def pauli_z_signs(n: int, term: Sequence[int]) -> np.ndarray:
    """sigma(z) = prod_{i in term} (1 - 2 bit_i(z)) for every basis index."""
    z = np.arange(1 << n)
    mask = 0
    for i in term:
        mask |= 1 << i
    parity = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        if mask >> i & 1:
            parity ^= (z >> i) & 1
    return 1.0 - 2.0 * parity


def apply_single_pauli_phase(state: Statevector, term: Sequence[int], alpha: float) -> Statevector:
    """exp(-i * alpha * P) for a one- or two-qubit Pauli-Z string P."""
    term = tuple(term)
    if len(term) not in (1, 2) or len(set(term)) != len(term):
        raise ValueError(f"term must name one or two distinct qubits, got {term}")
    if any(not 0 <= i < state.n for i in term):
        raise IndexError(f"term {term} out of range for {state.n} qubits")
    out = state.copy()
    _kernels.phase(out.amps, alpha * pauli_z_signs(state.n, term))
    return out


def apply_mixer(state: Statevector, theta: float) -> Statevector:
    """exp(-i * theta * H_I) with H_I = -sum_i X_i."""
    return apply_multiangle_mixer(state, np.full(state.n, theta))


def apply_multiangle_mixer(state: Statevector, thetas: Sequence[float]) -> Statevector:
    """prod_i exp(+i * thetas[i] * X_i)."""
    thetas = np.asarray(thetas, dtype=np.float64)
    if thetas.shape != (state.n,):
        raise ValueError(f"need {state.n} mixer angles, got {thetas.shape}")
    out = state.copy()
    _kernels.mixer(out.amps, np.cos(thetas), np.sin(thetas))
    return out


def expectation(state: Statevector, energies: DiagonalEnergies) -> float:
    _check_dims(state, energies)
    return float(state.probabilities() @ energies.values)


def sample(state: Statevector, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n_shots`` basis indices i.i.d. from |amps|**2 (inverse-CDF)."""
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    return sample_probabilities(state.probabilities(), n_shots, rng)


def sample_probabilities(probs: np.ndarray, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs)
    u = rng.random(n_shots) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, probs.shape[0] - 1)
