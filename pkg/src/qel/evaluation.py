"""Hindsight-optimal oracle, natural costs and relative regret reports.

Costs are on the natural objective (lower is better): MaxCut = -cut weight,
QAP = assignment cost, BMP = -matching profit.  Relative regret divides by
|C*| so it is a nonnegative fraction for every problem.
"""

from __future__ import annotations

import csv
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from qel.ising import ProblemSpec, ground_state, is_feasible
from qel.parallel import pmap
from qel.statevector import check_capacity

MAX_PERMUTATION_SIZE = 10
_CHUNK = 1 << 16


def _assignment(spec: ProblemSpec, z: int) -> np.ndarray:
    """Column chosen by each row of a feasible permutation bitstring."""
    n = spec.size
    x = ((int(z) >> np.arange(n * n)) & 1).reshape(n, n)
    return np.argmax(x, axis=1)


def _perm_bits(perm, n: int) -> int:
    return sum(1 << (i * n + int(j)) for i, j in enumerate(perm))


def natural_cost(spec: ProblemSpec, z: int, y, distances=None) -> float:
    y = np.asarray(y, dtype=np.float64)
    if not is_feasible(spec, z):
        raise ValueError(f"bitstring {z} is infeasible; repair it first")
    if spec.kind == "maxcut":
        bits = (int(z) >> np.arange(spec.size)) & 1
        e = np.array(spec.edges)
        return -float(np.sum(y[bits[e[:, 0]] != bits[e[:, 1]]]))
    pi = _assignment(spec, z)
    if spec.kind == "qap":
        F = spec.flows(y)
        D = np.asarray(distances, dtype=np.float64)
        return float(np.sum(F * D[np.ix_(pi, pi)]))
    P = y.reshape(spec.size, spec.size)
    return -float(np.sum(P[np.arange(spec.size), pi]))


def _maxcut_optimum(spec: ProblemSpec, y) -> tuple[int, float]:
    z, _ = ground_state(spec.build_model(y))
    # re-score directly so the walk's accumulated rounding never leaks into C*
    return z, natural_cost(spec, z, y)


def _permutation_costs(spec: ProblemSpec, perms: np.ndarray, y, distances) -> np.ndarray:
    n = spec.size
    if spec.kind == "qap":
        F = spec.flows(y)
        D = np.asarray(distances, dtype=np.float64)
        return np.einsum("ij,pij->p", F, D[perms[:, :, None], perms[:, None, :]])
    P = np.asarray(y, dtype=np.float64).reshape(n, n)
    return -P[np.arange(n)[None, :], perms].sum(axis=1)


def brute_force_optimum(spec: ProblemSpec, y, distances=None) -> tuple[int, float]:
    """(z*, C*): Gray-code enumeration for MaxCut, permutation enumeration otherwise.

    Ties keep the first minimiser in enumeration order.
    """
    y = np.asarray(y, dtype=np.float64)
    if spec.kind == "maxcut":
        check_capacity(spec.n_qubits)
        return _maxcut_optimum(spec, y)
    if spec.size > MAX_PERMUTATION_SIZE:
        raise ValueError(f"permutation enumeration is capped at size {MAX_PERMUTATION_SIZE}")
    best_cost, best_perm = math.inf, None
    it = itertools.permutations(range(spec.size))
    while True:
        block = np.array(list(itertools.islice(it, _CHUNK)), dtype=np.int64)
        if block.size == 0:
            break
        c = _permutation_costs(spec, block, y, distances)
        k = int(np.argmin(c))
        if c[k] < best_cost:
            best_cost, best_perm = float(c[k]), block[k]
    z = _perm_bits(best_perm, spec.size)
    return z, natural_cost(spec, z, y, distances)


def relative_regret(c_hat: float, c_star: float) -> float:
    """(C_hat - C*) / |C*|.  For C* = 0 the absolute regret is returned instead;
    :func:`evaluate` flags such rows."""
    if c_star == 0:
        return float(c_hat - c_star)
    return float((c_hat - c_star) / abs(c_star))


# --------------------------------------------------------------- reports


@dataclass
class RegretReport:
    regrets: np.ndarray
    costs: np.ndarray
    optimal_costs: np.ndarray
    feasible: np.ndarray
    fallback: np.ndarray
    absolute: np.ndarray
    param_count: int = 0
    runtime: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.regrets.shape[0])

    @property
    def mean(self) -> float:
        return float(np.mean(self.regrets))

    @property
    def half_width(self) -> float:
        if self.n < 2:
            return 0.0
        return 1.96 * float(np.std(self.regrets, ddof=1)) / math.sqrt(self.n)

    @property
    def ci(self) -> tuple[float, float]:
        return self.mean - self.half_width, self.mean + self.half_width

    @property
    def fallback_rate(self) -> float:
        return float(np.mean(self.fallback))

    def summary(self) -> dict:
        lo, hi = self.ci
        return {
            "mean_regret": self.mean,
            "ci95": [lo, hi],
            "n_instances": self.n,
            "fallback_rate": self.fallback_rate,
            "n_absolute": int(np.sum(self.absolute)),
            "param_count": self.param_count,
        }

    def write_csv(self, path, instance_ids=None) -> None:
        ids = range(self.n) if instance_ids is None else instance_ids
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["instance_id", "regret", "feasible", "fallback", "cost", "optimal_cost"])
            for k, iid in enumerate(ids):
                w.writerow([
                    int(iid),
                    repr(float(self.regrets[k])),
                    int(self.feasible[k]),
                    int(self.fallback[k]),
                    repr(float(self.costs[k])),
                    repr(float(self.optimal_costs[k])),
                ])


def random_decision(spec: ProblemSpec, rng: np.random.Generator) -> int:
    """Uniform bitstring for MaxCut, uniform permutation otherwise."""
    if spec.kind == "maxcut":
        return int(rng.integers(0, 1 << spec.n_qubits))
    return _perm_bits(rng.permutation(spec.size), spec.size)


def _eval_stream(seed: int, l: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(l,)))


def evaluate(params, test_set, n_shots: int = 4096, seed: int = 0, policy: str = "qel") -> RegretReport:
    """Decide on every test instance and score against the hindsight optimum.

    ``policy``: ``qel`` (decode the trained circuit), ``random`` or ``oracle``.
    """
    from qel.inference import decide

    if policy not in ("qel", "random", "oracle"):
        raise ValueError(f"unknown policy {policy!r}")
    test_set = list(test_set)
    t0 = time.perf_counter()

    def one(item):
        l, inst = item
        spec = inst.spec
        z_star, c_star = brute_force_optimum(spec, inst.y, inst.distances)
        rng = _eval_stream(seed, l)
        fallback = False
        if policy == "oracle":
            z = z_star
        elif policy == "random":
            z = random_decision(spec, rng)
        else:
            dec = decide(params, inst.context(), n_shots, rng)
            z, fallback = dec.z, dec.fallback_used
        feasible = is_feasible(spec, z)
        cost = natural_cost(spec, z, inst.y, inst.distances)
        return relative_regret(cost, c_star), cost, c_star, feasible, fallback, c_star == 0

    rows = pmap(one, list(enumerate(test_set)))
    cols = list(zip(*rows)) if rows else [()] * 6
    report = RegretReport(
        regrets=np.array(cols[0], dtype=np.float64),
        costs=np.array(cols[1], dtype=np.float64),
        optimal_costs=np.array(cols[2], dtype=np.float64),
        feasible=np.array(cols[3], dtype=bool),
        fallback=np.array(cols[4], dtype=bool),
        absolute=np.array(cols[5], dtype=bool),
        param_count=0 if params is None else params.layout.total,
        runtime={"seconds": time.perf_counter() - t0},
    )
    if np.any(report.regrets < -1e-12):
        raise AssertionError("negative regret: the oracle is not optimal")
    return report
