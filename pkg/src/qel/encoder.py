"""Contextual encoders mapping edge covariates to predicted coefficients.

One encoder is shared by every uncertain edge.  ``linear``: w0 + w1.x;
``logistic``: w0 / (1 + exp(-w1.(x - w2))).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("linear", "logistic")
ALIASES = {"lin": "linear", "log": "logistic", "linear": "linear", "logistic": "logistic"}


def param_count(kind: str, d_x: int) -> int:
    kind = ALIASES[kind]
    return 1 + d_x if kind == "linear" else 1 + 2 * d_x


@dataclass(eq=False)
class EncoderParams:
    kind: str
    w0: float
    w1: np.ndarray
    w2: np.ndarray | None = None

    def __post_init__(self):
        self.kind = ALIASES.get(self.kind, self.kind)
        if self.kind not in KINDS:
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        self.w0 = float(self.w0)
        self.w1 = np.asarray(self.w1, dtype=np.float64).reshape(-1)
        if self.kind == "logistic":
            if self.w2 is None:
                raise ValueError("logistic encoder needs w2")
            self.w2 = np.asarray(self.w2, dtype=np.float64).reshape(-1)
            if self.w2.shape != self.w1.shape:
                raise ValueError("w1 and w2 must have equal length")
        else:
            self.w2 = None

    @property
    def d_x(self) -> int:
        return self.w1.shape[0]

    @property
    def size(self) -> int:
        return param_count(self.kind, self.d_x)

    def flat(self) -> np.ndarray:
        parts = [[self.w0], self.w1]
        if self.kind == "logistic":
            parts.append(self.w2)
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, kind: str, d_x: int, v) -> "EncoderParams":
        v = np.asarray(v, dtype=np.float64)
        kind = ALIASES[kind]
        if v.shape != (param_count(kind, d_x),):
            raise ValueError(f"expected {param_count(kind, d_x)} encoder parameters, got {v.shape}")
        w2 = v[1 + d_x :].copy() if kind == "logistic" else None
        return cls(kind, v[0], v[1 : 1 + d_x].copy(), w2)


def _sigmoid(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _check(params: EncoderParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != params.d_x:
        raise ValueError(f"covariate dimension {X.shape[-1]} != encoder dimension {params.d_x}")
    return X


def encode_batch(params: EncoderParams, X) -> np.ndarray:
    """Predictions for every row of X (shape (m, d_x))."""
    X = _check(params, X)
    if params.kind == "linear":
        return params.w0 + X @ params.w1
    return params.w0 * _sigmoid((X - params.w2) @ params.w1)


def encode(params: EncoderParams, x) -> float:
    return float(encode_batch(params, np.atleast_2d(x))[0])


def encode_jacobian(params: EncoderParams, X) -> np.ndarray:
    """d y_hat_e / d w for every row, shape (m, size), aligned with ``flat()``."""
    X = _check(params, np.atleast_2d(X))
    m = X.shape[0]
    if params.kind == "linear":
        return np.hstack([np.ones((m, 1)), X])
    sig = _sigmoid((X - params.w2) @ params.w1)
    slope = params.w0 * sig * (1.0 - sig)
    return np.hstack([
        sig[:, None],
        slope[:, None] * (X - params.w2),
        -slope[:, None] * params.w1[None, :],
    ])


def encode_grad(params: EncoderParams, x) -> np.ndarray:
    return encode_jacobian(params, np.atleast_2d(x))[0]


def encode_instance(params: EncoderParams, context) -> np.ndarray:
    """Predicted uncertain coefficients for every edge of a context."""
    X = np.asarray(context.covariates, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(context.spec.uncertain_edges()):
        raise ValueError("context must carry one covariate row per uncertain edge")
    return encode_batch(params, X)


def init_encoder(kind: str, d_x: int, rng: np.random.Generator, calibration=None) -> EncoderParams:
    """Random start kept on the scale of observed coefficients.

    ``calibration`` is an optional pair (covariates (k, d_x), coefficients (k,))
    drawn from training data.
    """
    kind = ALIASES[kind]
    w1 = rng.normal(0.0, 0.1, size=d_x)
    if kind == "linear":
        w0 = float(np.mean(calibration[1])) if calibration is not None else 0.0
        return EncoderParams(kind, w0, w1)
    if calibration is not None:
        w0 = float(np.max(np.abs(calibration[1])))
        w2 = np.mean(np.asarray(calibration[0]).reshape(-1, d_x), axis=0)
    else:
        w0, w2 = 1.0, np.zeros(d_x)
    return EncoderParams(kind, w0, w1, w2)
