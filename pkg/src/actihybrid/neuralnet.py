"""Feedforward binary classifier (d -> 64 ReLU -> 32 ReLU -> 1 sigmoid).

Everything is float64 numpy. Weight matrices are stored ``(fan_out, fan_in)``
so a layer computes ``W @ x + b``; batches are handled as ``X @ W.T + b``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import DomainError, ValidationError
from .seeding import STREAM_NN_INIT, STREAM_NN_SHUFFLE, make_rng

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")
NETWORK_FORMAT_VERSION = 1
PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 100
    batch_size: int = 16
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 42
    threshold: float = 0.5
    hidden: tuple = (64, 32)
    shuffle: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if not 0 <= self.threshold <= 1:
            raise ValidationError("threshold must lie in [0, 1]")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValidationError("Adam betas must lie in [0, 1)")


@dataclass
class NetworkParameters:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        for name in PARAM_NAMES:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        h1, d = self.W1.shape
        h2 = self.W2.shape[0]
        expected = {"b1": (h1,), "W2": (h2, h1), "b2": (h2,), "W3": (1, h2), "b3": (1,)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValidationError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if not all(np.isfinite(getattr(self, n)).all() for n in PARAM_NAMES):
            raise ValidationError("network parameters must be finite")

    @property
    def input_width(self) -> int:
        return self.W1.shape[1]

    def arrays(self) -> dict:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def copy(self) -> "NetworkParameters":
        return NetworkParameters(**{n: a.copy() for n, a in self.arrays().items()})

    def tobytes(self) -> bytes:
        return b"".join(getattr(self, n).tobytes() for n in PARAM_NAMES)


@dataclass
class AdamState:
    first_moment: dict
    second_moment: dict
    step_count: int = 0

    @classmethod
    def zeros_like(cls, params: NetworkParameters) -> "AdamState":
        return cls({n: np.zeros_like(a) for n, a in params.arrays().items()},
                   {n: np.zeros_like(a) for n, a in params.arrays().items()}, 0)


@dataclass
class TrainResult:
    params: NetworkParameters
    loss_trace: list = field(default_factory=list)  # mean batch loss per epoch
    state: Optional[AdamState] = None


def init_network(d: int, seed: int, hidden: tuple = (64, 32)) -> NetworkParameters:
    """Glorot-uniform weights, zero biases."""
    if int(d) != d or d < 1:
        raise ValidationError(f"input width must be >= 1, got {d!r}")
    rng = make_rng(seed, STREAM_NN_INIT)
    h1, h2 = hidden

    def glorot(fan_out, fan_in):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_out, fan_in))

    return NetworkParameters(
        W1=glorot(h1, d), b1=np.zeros(h1),
        W2=glorot(h2, h1), b2=np.zeros(h2),
        W3=glorot(1, h2), b3=np.zeros(1),
    )


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_batch(params: NetworkParameters, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != params.input_width:
        raise ValidationError(f"expected inputs of width {params.input_width}, got shape {X.shape}")
    return X


def forward_batch(params: NetworkParameters, X, return_cache: bool = False):
    X = _as_batch(params, X)
    z1 = X @ params.W1.T + params.b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ params.W2.T + params.b2
    a2 = np.maximum(z2, 0.0)
    z3 = (a2 @ params.W3.T + params.b3)[:, 0]
    p = sigmoid(z3)
    if return_cache:
        return p, {"X": X, "z1": z1, "a1": a1, "z2": z2, "a2": a2, "z3": z3}
    return p


def forward(params: NetworkParameters, x, return_cache: bool = False):
    """Probability of class 1 for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("forward takes one input vector; use forward_batch for matrices")
    if return_cache:
        p, cache = forward_batch(params, x, return_cache=True)
        return float(p[0]), cache
    return float(forward_batch(params, x)[0])


def bce_loss(p, y):
    """Binary cross-entropy on probabilities clamped to [1e-7, 1 - 1e-7].

    Scalars give the per-sample loss; arrays give the batch mean.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(~((p >= 0) & (p <= 1))):
        raise DomainError("probabilities must lie in [0, 1]")
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    losses = -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    return float(losses.mean()) if losses.ndim else float(losses)


def backward(params: NetworkParameters, batch_X, batch_y) -> dict:
    """Gradients of the mean clamped BCE with respect to every parameter.

    Where the clamp is active the loss is flat in ``p``, so those samples
    contribute zero gradient. ReLU'(0) is taken as 0.
    """
    return _loss_and_grads(params, batch_X, batch_y)[1]


def _loss_and_grads(params, batch_X, batch_y):
    y = np.asarray(batch_y, dtype=np.float64).reshape(-1)
    p, c = forward_batch(params, batch_X, return_cache=True)
    if len(y) != len(p) or len(y) == 0:
        raise ValidationError(f"batch has {len(p)} rows and {len(y)} labels")
    n = len(y)
    active = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)
    dz3 = np.where(active, p - y, 0.0) / n  # (n,)
    gW3 = dz3[None, :] @ c["a2"]
    gb3 = np.array([dz3.sum()])
    da2 = dz3[:, None] * params.W3  # (n, h2)
    dz2 = da2 * (c["z2"] > 0)
    gW2 = dz2.T @ c["a1"]
    gb2 = dz2.sum(axis=0)
    da1 = dz2 @ params.W2
    dz1 = da1 * (c["z1"] > 0)
    gW1 = dz1.T @ c["X"]
    gb1 = dz1.sum(axis=0)
    grads = {"W1": gW1, "b1": gb1, "W2": gW2, "b2": gb2, "W3": gW3, "b3": gb3}
    return bce_loss(p, y), grads


def adam_step(params: NetworkParameters, state: AdamState, grads: dict, config: TrainConfig):
    """One bias-corrected Adam update; returns new ``(params, state)``."""
    t = state.step_count + 1
    b1, b2 = config.beta1, config.beta2
    new_p, new_m, new_v = {}, {}, {}
    for name in PARAM_NAMES:
        w = getattr(params, name)
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != w.shape or state.first_moment[name].shape != w.shape:
            raise ValidationError(f"gradient shape {g.shape} does not match {name} {w.shape}")
        m = b1 * state.first_moment[name] + (1.0 - b1) * g
        v = b2 * state.second_moment[name] + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        new_p[name] = w - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
        new_m[name], new_v[name] = m, v
    return NetworkParameters(**new_p), AdamState(new_m, new_v, t)


def train_network(X, y, config: TrainConfig = TrainConfig(), init: Optional[NetworkParameters] = None) -> TrainResult:
    """Mini-batch Adam on mean BCE.

    ``epochs * ceil(n / batch_size)`` steps; rows are reshuffled each epoch
    unless ``config.shuffle`` is off, and the last batch may be short.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or len(X) == 0:
        raise ValidationError(f"X must be a non-empty 2-D matrix, got shape {X.shape}")
    if len(y) != len(X):
        raise ValidationError(f"{len(X)} rows but {len(y)} labels")
    params = init.copy() if init is not None else init_network(X.shape[1], config.seed, config.hidden)
    state = AdamState.zeros_like(params)
    rng = make_rng(config.seed, STREAM_NN_SHUFFLE)
    n, bs = len(X), config.batch_size
    trace = []
    for _ in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        losses, sizes = [], []
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss, grads = _loss_and_grads(params, X[idx], y[idx])
            losses.append(loss)
            sizes.append(len(idx))
            params, state = adam_step(params, state, grads, config)
        trace.append(float(np.average(losses, weights=sizes)))
    return TrainResult(params, trace, state)


def predict_proba(params: NetworkParameters, X) -> np.ndarray:
    return forward_batch(params, X)


def predict_network(params: NetworkParameters, X, threshold: float = 0.5) -> np.ndarray:
    if not 0 <= threshold <= 1:
        raise DomainError("threshold must lie in [0, 1]")
    p = np.clip(forward_batch(params, X), PROB_CLAMP, 1.0 - PROB_CLAMP)
    return (p >= threshold).astype(np.int64)


def network_to_json(params: NetworkParameters) -> str:
    doc = {
        "format": "actihybrid.network",
        "version": NETWORK_FORMAT_VERSION,
        "tensors": {
            n: {"shape": list(a.shape), "values": a.ravel(order="C").tolist()}
            for n, a in params.arrays().items()
        },
    }
    return json.dumps(doc, sort_keys=True)


def network_from_json(text: str) -> NetworkParameters:
    doc = json.loads(text)
    if doc.get("format") != "actihybrid.network" or doc.get("version") != NETWORK_FORMAT_VERSION:
        raise ValidationError("not a supported network document")
    t = doc["tensors"]
    return NetworkParameters(**{
        n: np.array(t[n]["values"], dtype=np.float64).reshape(t[n]["shape"]) for n in PARAM_NAMES
    })


def write_loss_trace(trace, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(trace, start=1):
            w.writerow([epoch, repr(float(loss))])
