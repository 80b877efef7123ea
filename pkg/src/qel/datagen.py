"""Synthetic contextual datasets and their JSON-lines storage.

Covariates are drawn per uncertain edge; the realised coefficient is a
noisy, log-compressed benchmark function of them.  Noise std is 10% of the
dataset-level std of the noiseless signal.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from qel.instance import ContextualInstance
from qel.ising import ProblemSpec
from qel.statevector import check_capacity

NOISE_FRACTION = 0.1
MAXCUT_BOX = 2.048
QAP_BOX = 2.0


def rosenbrock(x, a: float = 1.0, b: float = 100.0):
    x = np.asarray(x, dtype=np.float64)
    x1, x2 = x[..., 0], x[..., 1]
    return (a - x1) ** 2 + b * (x2 - x1**2) ** 2


def goldstein_price(x):
    x = np.asarray(x, dtype=np.float64)
    x1, x2 = x[..., 0], x[..., 1]
    s = x1 + x2 + 1.0
    t1 = 1.0 + s**2 * (19 - 14 * x1 + 3 * x1**2 - 14 * x2 + 6 * x1 * x2 + 3 * x2**2)
    d = 2 * x1 - 3 * x2
    t2 = 30.0 + d**2 * (18 - 32 * x1 + 12 * x1**2 + 48 * x2 - 36 * x1 * x2 + 27 * x2**2)
    return t1 * t2


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def add_noise(signal: np.ndarray, seed: int) -> np.ndarray:
    """signal + N(0, (0.1 * std(signal))^2), std taken over the whole array."""
    sd = NOISE_FRACTION * float(np.std(signal))
    rng = _stream(seed, 1 << 20)
    return signal + rng.normal(0.0, sd, size=signal.shape)


@dataclass(eq=False)
class Dataset:
    spec: ProblemSpec
    instances: list[ContextualInstance]
    seed: int
    descriptor: dict
    train: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    val: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    test: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.instances)

    def subset(self, name: str) -> list[ContextualInstance]:
        return [self.instances[i] for i in getattr(self, name)]

    def config_hash(self) -> str:
        return config_hash({"descriptor": self.descriptor, "seed": self.seed})


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def split(dataset: Dataset, n_train: int, n_val: int, n_test: int, seed: int) -> Dataset:
    """Seeded permutation, then contiguous train / val / test blocks."""
    if min(n_train, n_val, n_test) < 0 or n_train + n_val + n_test > len(dataset):
        raise ValueError(f"split sizes {n_train}/{n_val}/{n_test} exceed {len(dataset)} instances")
    perm = np.random.default_rng(seed).permutation(len(dataset))
    a, b = n_train, n_train + n_val
    return replace(dataset, train=np.sort(perm[:a]), val=np.sort(perm[a:b]), test=np.sort(perm[b : b + n_test]))


# -------------------------------------------------------------- generators


def gen_maxcut(n_nodes: int, n_instances: int, seed: int) -> Dataset:
    spec = ProblemSpec("maxcut", n_nodes)
    check_capacity(spec.n_qubits)
    m = len(spec.uncertain_edges())
    X = np.stack([_stream(seed, l).uniform(-MAXCUT_BOX, MAXCUT_BOX, size=(m, 2)) for l in range(n_instances)])
    y = add_noise(np.log1p(rosenbrock(X)), seed)
    insts = [ContextualInstance(spec, X[l], y=y[l]) for l in range(n_instances)]
    desc = {"kind": "maxcut", "size": n_nodes, "n_instances": n_instances, "d_x": 2}
    return Dataset(spec, insts, seed, desc)


def random_distances(n: int, rng: np.random.Generator) -> np.ndarray:
    D = rng.uniform(0.0, 1.0, size=(n, n))
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0.0)
    return D


def gen_qap(n_fac: int, n_instances: int, seed: int, penalty: float = 50.0) -> Dataset:
    """One covariate per unordered facility pair, so flows are symmetric by construction."""
    spec = ProblemSpec("qap", n_fac, penalty=penalty)
    check_capacity(spec.n_qubits)
    m = len(spec.uncertain_edges())
    X, Ds = [], []
    for l in range(n_instances):
        rng = _stream(seed, l)
        X.append(rng.uniform(-QAP_BOX, QAP_BOX, size=(m, 2)))
        Ds.append(random_distances(n_fac, rng))
    X = np.stack(X)
    y = add_noise(np.log1p(goldstein_price(X)), seed)
    insts = [ContextualInstance(spec, X[l], Ds[l], y=y[l]) for l in range(n_instances)]
    desc = {"kind": "qap", "size": n_fac, "n_instances": n_instances, "d_x": 2, "penalty": penalty}
    return Dataset(spec, insts, seed, desc)


def load_node_features(path) -> np.ndarray:
    """Text file, one node per line, space-separated 0/1 entries."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = [int(t) for t in line.split()]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-integer entry") from None
        if any(v not in (0, 1) for v in row):
            raise ValueError(f"{path}:{lineno}: entries must be 0 or 1")
        if rows and len(row) != len(rows[0]):
            raise ValueError(f"{path}:{lineno}: expected {len(rows[0])} entries, got {len(row)}")
        rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no nodes")
    return np.array(rows, dtype=np.float64)


def gen_bmp(
    n_side: int,
    d_node_features: int,
    n_instances: int,
    seed: int,
    penalty: float = 1.5,
    density: float = 0.1,
    node_features: np.ndarray | None = None,
) -> Dataset:
    """Bipartite matching with binary node features.

    Edge covariate = concat(features of left node, features of right node).
    The planted profit score has additive per-side effects plus a bilinear
    agreement term, then noise, then a dataset-wide min-max rescale to [0, 1].
    With ``node_features`` each instance draws its 2 * n_side nodes from that pool.
    """
    spec = ProblemSpec("bmp", n_side, penalty=penalty)
    check_capacity(spec.n_qubits)
    if node_features is not None:
        node_features = np.asarray(node_features, dtype=np.float64)
        if node_features.shape[0] < 2 * n_side:
            raise ValueError(f"need at least {2 * n_side} nodes in the feature pool")
        d_node_features = node_features.shape[1]
    d = d_node_features
    planted = _stream(seed, 1 << 21)
    u_left, u_right, u_both = planted.normal(size=(3, d))
    X, S = [], []
    for l in range(n_instances):
        rng = _stream(seed, l)
        if node_features is None:
            feats = (rng.random((2 * n_side, d)) < density).astype(np.float64)
        else:
            feats = node_features[rng.choice(node_features.shape[0], 2 * n_side, replace=False)]
        left, right = feats[:n_side], feats[n_side:]
        cov = np.concatenate(
            [np.repeat(left, n_side, axis=0), np.tile(right, (n_side, 1))], axis=1
        )  # row i * n_side + j pairs left i with right j
        score = (left @ u_left)[:, None] + (right @ u_right)[None, :] + (left * u_both) @ right.T
        X.append(cov)
        S.append(score.ravel())
    y = add_noise(np.stack(S), seed)
    lo, hi = float(y.min()), float(y.max())
    y = (y - lo) / (hi - lo) if hi > lo else np.zeros_like(y)
    insts = [ContextualInstance(spec, X[l], y=y[l]) for l in range(n_instances)]
    desc = {
        "kind": "bmp",
        "size": n_side,
        "n_instances": n_instances,
        "d_x": 2 * d,
        "penalty": penalty,
        "density": density,
        "external_features": node_features is not None,
    }
    return Dataset(spec, insts, seed, desc)


# ---------------------------------------------------------------------- io


def _key(e) -> str:
    return f"{e[0]},{e[1]}"


def save_jsonl(dataset: Dataset, path) -> str:
    """Write header + one line per instance; returns the config hash."""
    edges = dataset.spec.uncertain_edges()
    h = dataset.config_hash()
    header = {
        "header": True,
        "config_hash": h,
        "seed": dataset.seed,
        "descriptor": dataset.descriptor,
        "splits": {k: getattr(dataset, k).tolist() for k in ("train", "val", "test")},
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for inst in dataset.instances:
            rec = {
                "covariates": {_key(e): inst.covariates[k].tolist() for k, e in enumerate(edges)},
                "y": {_key(e): float(inst.y[k]) for k, e in enumerate(edges)},
            }
            if inst.distances is not None:
                rec["distance"] = inst.distances.tolist()
            fh.write(json.dumps(rec) + "\n")
    return h


def spec_from_descriptor(desc: dict) -> ProblemSpec:
    return ProblemSpec(desc["kind"], int(desc["size"]), penalty=float(desc.get("penalty", 0.0)))


def load_jsonl(path) -> Dataset:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    header = json.loads(lines[0])
    if not header.get("header"):
        raise ValueError(f"{path}: missing header line")
    spec = spec_from_descriptor(header["descriptor"])
    keys = [_key(e) for e in spec.uncertain_edges()]
    insts = []
    for ln in lines[1:]:
        rec = json.loads(ln)
        if set(rec["covariates"]) != set(keys) or set(rec["y"]) != set(keys):
            raise ValueError(f"{path}: instance keys do not match the problem's edges")
        X = np.array([rec["covariates"][k] for k in keys])
        y = np.array([rec["y"][k] for k in keys])
        D = np.array(rec["distance"]) if "distance" in rec else None
        insts.append(ContextualInstance(spec, X, D, y=y))
    sp = header.get("splits", {})
    ds = Dataset(spec, insts, int(header["seed"]), header["descriptor"])
    for k in ("train", "val", "test"):
        setattr(ds, k, np.asarray(sp.get(k, []), dtype=np.int64))
    if ds.config_hash() != header["config_hash"]:
        raise ValueError(f"{path}: config hash mismatch")
    return ds
