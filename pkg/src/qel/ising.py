"""Ising encodings of MaxCut, QAP and bipartite matching.

Objectives are written in QUBO form over ``x_i in {0, 1}`` and converted with
``x_i = (1 - s_i) / 2``.  The builders are generic over the coefficient type:
passing unit vectors in place of the uncertain coefficients yields every Ising
coefficient as an affine function of them (:class:`AffineIsing`), which is what
the circuit and its gradients consume.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from qel import _kernels
from qel.statevector import DiagonalEnergies, check_capacity

KINDS = ("maxcut", "qap", "bmp")


@dataclass(frozen=True, eq=False)
class IsingModel:
    """f(z) = offset + sum_i h_i s_i + sum_{i<j} y_ij s_i s_j, s_i = 1 - 2 bit_i(z)."""

    n: int
    linear: Mapping[int, float] = field(default_factory=dict)
    quadratic: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        for i in self.linear:
            if not 0 <= i < self.n:
                raise ValueError(f"linear index {i} out of range")
        for i, j in self.quadratic:
            if not 0 <= i < j < self.n:
                raise ValueError(f"quadratic key {(i, j)} must satisfy 0 <= i < j < n")

    def dump(self) -> str:
        """Text form: ``offset v`` / ``lin i v`` / ``quad i j v``, one term per line."""
        lines = [f"offset {self.offset!r}"]
        lines += [f"lin {i} {v!r}" for i, v in sorted(self.linear.items())]
        lines += [f"quad {i} {j} {v!r}" for (i, j), v in sorted(self.quadratic.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str, n: int) -> "IsingModel":
        offset, lin, quad = 0.0, {}, {}
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "offset":
                offset = float(parts[1])
            elif parts[0] == "lin":
                lin[int(parts[1])] = float(parts[2])
            elif parts[0] == "quad":
                quad[(int(parts[1]), int(parts[2]))] = float(parts[3])
            else:
                raise ValueError(f"unknown term line: {line!r}")
        return cls(n, lin, quad, offset)


def spins(z: int, n: int) -> np.ndarray:
    return 1.0 - 2.0 * ((z >> np.arange(n)) & 1)


def energy(model: IsingModel, z: int) -> float:
    if not 0 <= z < 1 << model.n:
        raise ValueError(f"bitstring {z} out of range for {model.n} variables")
    s = spins(z, model.n)
    e = model.offset
    for i, h in model.linear.items():
        e += h * s[i]
    for (i, j), y in model.quadratic.items():
        e += y * s[i] * s[j]
    return float(e)


def to_qubo(model: IsingModel) -> tuple[float, dict[int, float], dict[tuple[int, int], float]]:
    """Rewrite the model over x_i = (1 - s_i) / 2 as const + sum a_i x_i + sum b_ij x_i x_j."""
    const = model.offset
    lin: dict[int, float] = {}
    quad: dict[tuple[int, int], float] = {}
    for i, h in model.linear.items():
        const += h
        lin[i] = lin.get(i, 0.0) - 2.0 * h
    for (i, j), y in model.quadratic.items():
        const += y
        lin[i] = lin.get(i, 0.0) - 2.0 * y
        lin[j] = lin.get(j, 0.0) - 2.0 * y
        quad[(i, j)] = 4.0 * y
    return const, lin, quad


def qubo_energy(qubo, z: int) -> float:
    const, lin, quad = qubo
    bit = lambda i: (z >> i) & 1
    return float(
        const + sum(a * bit(i) for i, a in lin.items()) + sum(b * bit(i) * bit(j) for (i, j), b in quad.items())
    )


def _placed(n: int, linear, quadratic, offset) -> np.ndarray:
    a = np.zeros(1 << n)
    a[0] = offset
    for i, h in linear:
        a[1 << i] += h
    for (i, j), y in quadratic:
        a[(1 << i) | (1 << j)] += y
    return a


def diagonalize(model: IsingModel) -> DiagonalEnergies:
    """All 2**n energies at once: a Walsh-Hadamard transform of the coefficients."""
    check_capacity(model.n)
    a = _placed(model.n, model.linear.items(), model.quadratic.items(), model.offset)
    _kernels.fwht(a)
    return DiagonalEnergies(model.n, a)


def ground_state(model: IsingModel) -> tuple[int, float]:
    """Exhaustive minimiser by Gray-code enumeration (independent of diagonalize)."""
    check_capacity(model.n)
    h = np.zeros(model.n)
    J = np.zeros((model.n, model.n))
    for i, v in model.linear.items():
        h[i] += v
    for (i, j), v in model.quadratic.items():
        J[i, j] += v
        J[j, i] += v
    z, e = _kernels.ising_min(model.n, h, J, float(model.offset))
    return int(z), float(e)


# ------------------------------------------------------------------ builders


class _Qubo:
    """Accumulates const + sum c_i x_i + sum c_ij x_i x_j with array-valued c."""

    def __init__(self, n: int, width: int):
        self.n = n
        self.const = np.zeros(width)
        self.lin: dict[int, np.ndarray] = {}
        self.quad: dict[tuple[int, int], np.ndarray] = {}
        self._zero = np.zeros(width)

    def add_const(self, c):
        self.const = self.const + c

    def add_x(self, i, c):
        self.lin[i] = self.lin.get(i, self._zero) + c

    def add_xx(self, i, j, c):
        if i == j:
            self.add_x(i, c)
            return
        key = (i, j) if i < j else (j, i)
        self.quad[key] = self.quad.get(key, self._zero) + c

    def add_squared_residual(self, idx: Iterable[int], P: float, unit):
        """P * (1 - sum_{i in idx} x_i)**2, using x_i**2 = x_i."""
        idx = list(idx)
        self.add_const(P * unit)
        for i in idx:
            self.add_x(i, -2.0 * P * unit)
        for i in idx:
            for j in idx:
                self.add_xx(i, j, P * unit)

    def ising(self):
        offset = self.const.copy()
        lin = {i: self._zero.copy() for i in range(self.n) if i in self.lin}
        quad = {}
        for i, c in self.lin.items():
            offset += c / 2
            lin[i] -= c / 2
        for (i, j), c in self.quad.items():
            offset += c / 4
            lin[i] = lin.get(i, self._zero) - c / 4
            lin[j] = lin.get(j, self._zero) - c / 4
            quad[(i, j)] = c / 4
        return offset, lin, quad


def _maxcut_terms(n, edges, weights):
    # -(w/2)(1 - s_i s_j): spin form is direct, no linear terms appear
    width = np.shape(weights[0]) if len(weights) else (1,)
    offset = np.zeros(width)
    quad = {}
    for (i, j), w in zip(edges, weights):
        key = (i, j) if i < j else (j, i)
        offset = offset - w / 2
        quad[key] = quad.get(key, 0.0) + w / 2
    return offset, {}, quad


def _qap_terms(n_f, flows, distances, penalty, unit):
    q = _Qubo(n_f * n_f, np.size(unit))
    for i, j, k, l in itertools.product(range(n_f), repeat=4):
        q.add_xx(i * n_f + k, j * n_f + l, flows[i][j] * distances[k][l])
    for k in range(n_f):
        q.add_squared_residual((i * n_f + k for i in range(n_f)), penalty, unit)
    for i in range(n_f):
        q.add_squared_residual((i * n_f + k for k in range(n_f)), penalty, unit)
    return q.ising()


def _bmp_terms(n_b, profits, penalty, unit):
    q = _Qubo(n_b * n_b, np.size(unit))
    for i in range(n_b):
        for j in range(n_b):
            q.add_x(i * n_b + j, -profits[i][j])
    for i in range(n_b):
        q.add_squared_residual((i * n_b + j for j in range(n_b)), penalty, unit)
    for j in range(n_b):
        q.add_squared_residual((i * n_b + j for i in range(n_b)), penalty, unit)
    return q.ising()


def _scalar_model(n, terms) -> IsingModel:
    offset, lin, quad = terms
    f = lambda v: float(np.asarray(v).reshape(-1)[0])
    return IsingModel(n, {i: f(v) for i, v in sorted(lin.items())}, {k: f(v) for k, v in sorted(quad.items())}, f(offset))


def build_maxcut(edges: Iterable[tuple[int, int, float]], n: int | None = None) -> IsingModel:
    """Energy = -(cut weight): quadratic w/2 per edge, offset -sum w/2."""
    edges = list(edges)
    for i, j, _ in edges:
        if i == j:
            raise ValueError(f"self-loop on node {i}")
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in edges), default=0)
    if any(max(i, j) >= n for i, j, _ in edges):
        raise ValueError("edge index out of range")
    w = [np.array([float(wt)]) for _, _, wt in edges]
    return _scalar_model(n, _maxcut_terms(n, [(i, j) for i, j, _ in edges], w))


def _square(name, m, size=None):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or (size is not None and m.shape[0] != size):
        raise ValueError(f"{name} must be a square matrix" + (f" of size {size}" if size else ""))
    return m


def build_qap(flows, distances, penalty: float) -> IsingModel:
    F = _square("flows", flows)
    D = _square("distances", distances, F.shape[0])
    for name, m in (("flows", F), ("distances", D)):
        if not np.allclose(m, m.T, rtol=0, atol=1e-12):
            raise ValueError(f"{name} must be symmetric")
    if penalty <= 0:
        raise ValueError("penalty must be positive")
    n_f = F.shape[0]
    terms = _qap_terms(n_f, F[..., None], D, penalty, np.ones(1))
    return _scalar_model(n_f * n_f, terms)


def build_bmp(profits, penalty: float) -> IsingModel:
    Pm = _square("profits", profits)
    if penalty <= 0:
        raise ValueError("penalty must be positive")
    n_b = Pm.shape[0]
    return _scalar_model(n_b * n_b, _bmp_terms(n_b, Pm[..., None], penalty, np.ones(1)))


# ------------------------------------------------------------ problem specs


@dataclass(frozen=True)
class ProblemSpec:
    """Problem family: kind, size (nodes / facilities / side), graph, penalty."""

    kind: str
    size: int
    edges: tuple[tuple[int, int], ...] | None = None
    penalty: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind == "maxcut":
            if self.size < 2:
                raise ValueError("MaxCut needs at least 2 nodes")
            edges = itertools.combinations(range(self.size), 2) if self.edges is None else self.edges
            object.__setattr__(self, "edges", tuple((int(i), int(j)) for i, j in edges))
            for i, j in self.edges:
                if i == j or not (0 <= i < self.size and 0 <= j < self.size):
                    raise ValueError(f"bad edge {(i, j)}")
        elif self.penalty <= 0:
            raise ValueError(f"{self.kind} needs a positive penalty")

    @property
    def n_qubits(self) -> int:
        return self.size if self.kind == "maxcut" else self.size**2

    def uncertain_edges(self) -> list[tuple[int, int]]:
        """Keys of the uncertain coefficients, in storage order."""
        if self.kind == "maxcut":
            return list(self.edges)
        if self.kind == "qap":
            return list(itertools.combinations(range(self.size), 2))
        return list(itertools.product(range(self.size), repeat=2))

    def flows(self, y) -> np.ndarray:
        F = np.zeros((self.size, self.size) + np.shape(y)[1:])
        for e, (i, j) in enumerate(self.uncertain_edges()):
            F[i, j] = F[j, i] = y[e]
        return F

    def build_model(self, y, distances=None) -> IsingModel:
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "maxcut":
            return build_maxcut([(i, j, w) for (i, j), w in zip(self.edges, y)], self.size)
        if self.kind == "qap":
            return build_qap(self.flows(y), distances, self.penalty)
        return build_bmp(y.reshape(self.size, self.size), self.penalty)

    def affine_family(self, distances=None) -> "AffineIsing":
        if self.kind == "qap":
            D = _square("distances", distances, self.size)
            return _affine_qap(self, D.tobytes())
        return _affine_cached(self)

    def is_feasible(self, z: int) -> bool:
        if self.kind == "maxcut":
            return True
        n = self.size
        x = ((z >> np.arange(n * n)) & 1).reshape(n, n)
        return bool(np.all(x.sum(axis=0) == 1) and np.all(x.sum(axis=1) == 1))


def is_feasible(spec: ProblemSpec, z: int) -> bool:
    if not 0 <= z < 1 << spec.n_qubits:
        raise ValueError(f"bitstring {z} out of range")
    return spec.is_feasible(z)


@dataclass(frozen=True, eq=False)
class AffineIsing:
    """Ising coefficients as affine maps of the uncertain vector y (length m).

    Column 0 of each coefficient array is the constant part; columns 1..m are
    the sensitivities to y.  The term set is structural: it depends on the
    problem only, never on coefficient values.
    """

    n: int
    lin_idx: np.ndarray
    lin_coef: np.ndarray
    quad_idx: np.ndarray
    quad_coef: np.ndarray
    offset_coef: np.ndarray

    @property
    def n_linear(self) -> int:
        return len(self.lin_idx)

    @property
    def n_quadratic(self) -> int:
        return len(self.quad_idx)

    @functools.cached_property
    def masks(self) -> np.ndarray:
        """Bitmask of every term: linear terms first, then quadratic."""
        lin = np.left_shift(1, self.lin_idx.astype(np.int64))
        quad = np.left_shift(1, self.quad_idx[:, 0].astype(np.int64)) | np.left_shift(1, self.quad_idx[:, 1].astype(np.int64))
        return np.concatenate([lin, quad]).astype(np.int64)

    @functools.cached_property
    def jacobian(self) -> np.ndarray:
        """d(term coefficient)/dy, shape (n_terms, m)."""
        return np.vstack([self.lin_coef[:, 1:], self.quad_coef[:, 1:]])

    @functools.cached_property
    def constant(self) -> np.ndarray:
        return np.concatenate([self.lin_coef[:, 0], self.quad_coef[:, 0]])

    def term_coefficients(self, y) -> np.ndarray:
        return self.constant + self.jacobian @ np.asarray(y, dtype=np.float64)

    def offset(self, y) -> float:
        return float(self.offset_coef[0] + self.offset_coef[1:] @ np.asarray(y, dtype=np.float64))

    def energies(self, y) -> np.ndarray:
        """Diagonal energies f(z, y) for all z, offset included."""
        check_capacity(self.n)
        a = np.zeros(1 << self.n)
        a[self.masks] = self.term_coefficients(y)
        a[0] += self.offset(y)
        _kernels.fwht(a)
        return a

    def model(self, y) -> IsingModel:
        c = self.term_coefficients(y)
        L = self.n_linear
        lin = {int(i): float(v) for i, v in zip(self.lin_idx, c[:L])}
        quad = {(int(i), int(j)): float(v) for (i, j), v in zip(self.quad_idx, c[L:])}
        return IsingModel(self.n, lin, quad, self.offset(y))


def _to_affine(n, terms) -> AffineIsing:
    offset, lin, quad = terms
    width = len(offset)
    lin_keys = sorted(lin)
    quad_keys = sorted(quad)
    return AffineIsing(
        n=n,
        lin_idx=np.array(lin_keys, dtype=np.int64),
        lin_coef=np.array([lin[k] for k in lin_keys]).reshape(-1, width),
        quad_idx=np.array(quad_keys, dtype=np.int64).reshape(-1, 2),
        quad_coef=np.array([quad[k] for k in quad_keys]).reshape(-1, width),
        offset_coef=np.asarray(offset, dtype=np.float64),
    )


def _symbols(m):
    """Row e+1 of the identity stands for y_e; row 0 is the constant 1."""
    eye = np.eye(m + 1)
    return eye[0], eye[1:]


@functools.lru_cache(maxsize=32)
def _affine_cached(spec: ProblemSpec) -> AffineIsing:
    m = len(spec.uncertain_edges())
    unit, ys = _symbols(m)
    if spec.kind == "maxcut":
        return _to_affine(spec.size, _maxcut_terms(spec.size, spec.edges, list(ys)))
    return _to_affine(spec.n_qubits, _bmp_terms(spec.size, ys.reshape(spec.size, spec.size, -1), spec.penalty, unit))


@functools.lru_cache(maxsize=4096)
def _affine_qap(spec: ProblemSpec, d_bytes: bytes) -> AffineIsing:
    D = np.frombuffer(d_bytes).reshape(spec.size, spec.size)
    m = len(spec.uncertain_edges())
    unit, ys = _symbols(m)
    F = spec.flows(ys)
    return _to_affine(spec.n_qubits, _qap_terms(spec.size, F, D, spec.penalty, unit))
