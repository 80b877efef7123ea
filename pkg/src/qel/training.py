"""Mini-batch training with Adam or a diminishing-step SGD, early stopping on
validation loss, and JSON checkpoints."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from qel.ansatz import CircuitLayout, QelParams
from qel.gradient import GradMode, gradient
from qel.loss import loss_exact, loss_shots  # noqa: F401  (re-exported)


class NumericAbort(RuntimeError):
    """A loss or gradient turned non-finite."""


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"  # "adam" or "sgd" (eta_t = eta0 / (1 + t))
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    eta0: float = 0.1
    batch_size: int = 8
    epochs: int = 30
    patience: int = 10

    def __post_init__(self):
        if self.kind not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if self.batch_size < 1 or self.epochs < 0 or self.patience < 1:
            raise ValueError("batch_size and patience must be >= 1, epochs >= 0")

    def step_size(self, t: int) -> float:
        return self.eta0 / (1.0 + t)


@dataclass(eq=False)
class TrainState:
    params: QelParams
    config: OptimizerConfig = field(default_factory=OptimizerConfig)
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    step: int = 0
    epoch: int = 0
    best_val: float = math.inf
    best_flat: np.ndarray | None = None
    bad_epochs: int = 0
    history: list = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        size = self.params.layout.total
        self.m = np.zeros(size) if self.m is None else np.asarray(self.m, dtype=np.float64)
        self.v = np.zeros(size) if self.v is None else np.asarray(self.v, dtype=np.float64)
        if self.m.shape != (size,) or self.v.shape != (size,):
            raise ValueError("moment vectors must match the parameter count")

    def best_params(self) -> QelParams:
        if self.best_flat is None:
            return self.params.copy()
        return QelParams.from_flat(self.params.layout, self.best_flat)


def _check_shape(state: TrainState, grad) -> np.ndarray:
    g = np.asarray(getattr(grad, "values", grad), dtype=np.float64)
    if g.shape != (state.params.layout.total,):
        raise ValueError(f"gradient has shape {g.shape}, expected ({state.params.layout.total},)")
    return g


def adam_step(state: TrainState, grad) -> TrainState:
    """Bias-corrected Adam update; returns a new state."""
    g = _check_shape(state, grad)
    c = state.config
    t = state.step + 1
    m = c.beta1 * state.m + (1 - c.beta1) * g
    v = c.beta2 * state.v + (1 - c.beta2) * g * g
    m_hat = m / (1 - c.beta1**t)
    v_hat = v / (1 - c.beta2**t)
    flat = state.params.flat() - c.lr * m_hat / (np.sqrt(v_hat) + c.eps)
    return _advance(state, flat, m, v)


def sgd_step(state: TrainState, grad, t: int | None = None) -> TrainState:
    """phi <- phi - eta_t * g with eta_t = eta0 / (1 + t); t defaults to the step count."""
    g = _check_shape(state, grad)
    t = state.step if t is None else t
    flat = state.params.flat() - state.config.step_size(t) * g
    return _advance(state, flat, state.m, state.v)


def _advance(state, flat, m, v) -> TrainState:
    out = TrainState(
        QelParams.from_flat(state.params.layout, flat),
        state.config,
        m,
        v,
        state.step + 1,
        state.epoch,
        state.best_val,
        state.best_flat,
        state.bad_epochs,
        state.history,
        state.seed,
    )
    return out


def _batch_seed(seed: int, epoch: int, b: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=(epoch, b)).generate_state(1)[0])


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(epoch,))).permutation(n)


def train(
    initial: QelParams | TrainState,
    train_set,
    val_set,
    cfg: OptimizerConfig,
    mode: GradMode | str = "exact",
    seed: int = 0,
    on_epoch=None,
) -> TrainState:
    """Algorithm loop: shuffle, step per mini-batch, validate, stop early.

    Passing a TrainState resumes it.  ``on_epoch(state, record)`` is called
    after every epoch (logging, checkpointing).  The returned state's
    ``params`` are the best-validation parameters.
    """
    train_set, val_set = list(train_set), list(val_set)
    if not train_set or not val_set:
        raise ValueError("train and validation sets must be non-empty")
    mode = GradMode.parse(mode) if isinstance(mode, str) else mode
    if isinstance(initial, TrainState):
        state = initial
    else:
        state = TrainState(initial.copy(), cfg, seed=seed)
    step = adam_step if cfg.kind == "adam" else sgd_step
    if state.best_flat is None:
        state.best_val = _finite(loss_exact(state.params, val_set), "initial validation loss")
        state.best_flat = state.params.flat()
    while state.epoch < cfg.epochs and state.bad_epochs < cfg.patience:
        order = epoch_order(state.seed, state.epoch, len(train_set))
        losses, norms = [], []
        for b, start in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            batch = [train_set[i] for i in idx]
            g = gradient(state.params, batch, mode, _batch_seed(state.seed, state.epoch, b))
            if not np.all(np.isfinite(g.values)):
                raise NumericAbort(f"non-finite gradient at epoch {state.epoch}, batch {b} (instances {idx.tolist()})")
            losses.append(g.loss)
            norms.append(g.norm_sq())
            state = step(state, g)
        val = _finite(loss_exact(state.params, val_set), f"validation loss at epoch {state.epoch}")
        if val < state.best_val:
            state.best_val, state.best_flat, state.bad_epochs = val, state.params.flat(), 0
        else:
            state.bad_epochs += 1
        record = {
            "epoch": state.epoch,
            "train_loss": float(np.mean(losses)),
            "val_loss": val,
            "grad_norm": float(np.sqrt(np.mean(norms))),
        }
        state.history.append(record)
        state.epoch += 1
        if on_epoch is not None:
            on_epoch(state, record)
    state.params = state.best_params()
    return state


def _finite(x: float, what: str) -> float:
    if not math.isfinite(x):
        raise NumericAbort(f"non-finite {what}")
    return x


# -------------------------------------------------------------- checkpoints


def state_to_dict(state: TrainState, config_hash: str = "") -> dict:
    return {
        "layout": state.params.layout.to_dict(),
        "flat": state.params.flat().tolist(),
        "optimizer": asdict(state.config),
        "m": state.m.tolist(),
        "v": state.v.tolist(),
        "step": state.step,
        "epoch": state.epoch,
        "best_val": state.best_val,
        "best_flat": None if state.best_flat is None else state.best_flat.tolist(),
        "bad_epochs": state.bad_epochs,
        "history": state.history,
        "seed": state.seed,
        "config_hash": config_hash,
    }


def state_from_dict(d: dict) -> TrainState:
    layout = CircuitLayout(**d["layout"])
    return TrainState(
        QelParams.from_flat(layout, d["flat"]),
        OptimizerConfig(**d["optimizer"]),
        np.array(d["m"]),
        np.array(d["v"]),
        int(d["step"]),
        int(d["epoch"]),
        float(d["best_val"]),
        None if d["best_flat"] is None else np.array(d["best_flat"]),
        int(d["bad_epochs"]),
        list(d["history"]),
        int(d["seed"]),
    )


def save_checkpoint(state: TrainState, path, config_hash: str = "") -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(state, config_hash), fh)


def load_checkpoint(path) -> tuple[TrainState, str]:
    with open(path) as fh:
        d = json.load(fh)
    return state_from_dict(d), d.get("config_hash", "")
