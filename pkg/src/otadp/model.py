"""Fully connected classifier on a flat parameter vector.

The whole model lives in one float64 vector so that the federated code can
clip, scale and sum updates without caring about layers.  Layer ``k`` owns a
weight block of shape ``shapes[k]`` (row-major) followed, when biases are
enabled, by a bias block of length ``shapes[k][1]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InvalidInput, InvalidShape
from .rng import stream

INIT_RANGE = 0.05


class Algorithm(str, Enum):
    FEDAVG = "fedavg"
    FEDPROX = "fedprox"
    UPCYCLED = "upcycled"


@dataclass(frozen=True)
class ModelParams:
    values: np.ndarray
    shapes: tuple[tuple[int, int], ...]
    bias: bool = True
    activation: str = "relu"

    def __post_init__(self):
        if self.values.ndim != 1:
            raise InvalidInput("parameter vector must be one-dimensional")
        expected = param_count(self.shapes, self.bias)
        if self.values.size != expected:
            raise InvalidInput(f"vector has {self.values.size} entries, shapes need {expected}")
        if self.activation not in _ACTIVATIONS:
            raise InvalidInput(f"unknown activation {self.activation!r}")

    @property
    def d(self) -> int:
        return self.values.size

    def with_values(self, values: np.ndarray) -> "ModelParams":
        return ModelParams(np.asarray(values, dtype=np.float64), self.shapes, self.bias, self.activation)

    def layers(self, values: np.ndarray | None = None) -> list[tuple[np.ndarray, np.ndarray | None]]:
        """Views ``(W, b)`` into ``values`` (defaults to this model's vector)."""
        v = self.values if values is None else values
        out, pos = [], 0
        for rows, cols in self.shapes:
            W = v[pos:pos + rows * cols].reshape(rows, cols)
            pos += rows * cols
            b = None
            if self.bias:
                b = v[pos:pos + cols]
                pos += cols
            out.append((W, b))
        return out


@dataclass(frozen=True)
class LocalHyper:
    lr: float = 0.05
    momentum: float = 0.5
    local_epochs: int = 20
    batch_size: int = 32
    mu: float = 0.1
    tau: float = 1.0

    def __post_init__(self):
        if self.lr <= 0:
            raise InvalidInput("lr must be positive")
        if not 0 <= self.momentum < 1:
            raise InvalidInput("momentum must lie in [0, 1)")
        if self.local_epochs < 0 or self.batch_size < 1:
            raise InvalidInput("local_epochs must be >= 0 and batch_size >= 1")
        if self.mu < 0:
            raise InvalidInput("mu must be nonnegative")
        if self.tau <= 0:
            raise InvalidInput("tau must be positive")


def param_count(shapes: Sequence[tuple[int, int]], bias: bool = True) -> int:
    return sum(r * c + (c if bias else 0) for r, c in shapes)


def mlp_shapes(feat_dim: int, hidden: int, classes: int) -> tuple[tuple[int, int], ...]:
    return ((feat_dim, hidden), (hidden, classes))


def init_model(shapes: Sequence[tuple[int, int]], seed: int, bias: bool = True,
               activation: str = "relu") -> ModelParams:
    """Weights uniform in [-0.05, 0.05], biases zero."""
    shapes = tuple((int(r), int(c)) for r, c in shapes)
    if not shapes:
        raise InvalidShape("at least one layer is required")
    for r, c in shapes:
        if r <= 0 or c <= 0:
            raise InvalidShape(f"layer shape ({r}, {c}) has a nonpositive dimension")
    for (_, c), (r, _) in zip(shapes, shapes[1:]):
        if c != r:
            raise InvalidShape(f"layer output {c} does not feed next layer input {r}")
    rng = stream(seed, "init")
    blocks = []
    for r, c in shapes:
        blocks.append(rng.uniform(-INIT_RANGE, INIT_RANGE, size=r * c))
        if bias:
            blocks.append(np.zeros(c))
    return ModelParams(np.concatenate(blocks), shapes, bias, activation)


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z, a):
    return (z > 0).astype(z.dtype)


def _tanh_grad(z, a):
    return 1.0 - a * a


_ACTIVATIONS = {"relu": (_relu, _relu_grad), "tanh": (np.tanh, _tanh_grad)}


def _check_batch(m: ModelParams, batch) -> tuple[np.ndarray, np.ndarray]:
    x, y = batch
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidInput("batch features must be a nonempty 2-D array")
    if x.shape[1] != m.shapes[0][0]:
        raise InvalidInput(f"feature dim {x.shape[1]} != model input dim {m.shapes[0][0]}")
    if y.shape != (x.shape[0],):
        raise InvalidInput("labels must be a 1-D array matching the features")
    classes = m.shapes[-1][1]
    if y.size and (y.min() < 0 or y.max() >= classes):
        raise InvalidInput(f"labels must lie in [0, {classes})")
    return x, y.astype(np.intp)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _forward(m: ModelParams, values: np.ndarray, x: np.ndarray):
    act, _ = _ACTIVATIONS[m.activation]
    layers = m.layers(values)
    cache = []
    a = x
    for k, (W, b) in enumerate(layers):
        z = a @ W
        if b is not None:
            z = z + b
        cache.append((a, z))
        a = act(z) if k < len(layers) - 1 else z
    return a, cache


def _loss_and_grad(m: ModelParams, values: np.ndarray, x: np.ndarray, y: np.ndarray,
                   need_grad: bool = True):
    logits, cache = _forward(m, values, x)
    logp = _log_softmax(logits)
    n = x.shape[0]
    loss = -logp[np.arange(n), y].mean()
    if not need_grad:
        return loss, None
    _, act_grad = _ACTIVATIONS[m.activation]
    layers = m.layers(values)
    grad = np.empty_like(values)
    gviews = m.layers(grad)
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    for k in range(len(layers) - 1, -1, -1):
        a_in, _ = cache[k]
        gW, gb = gviews[k]
        gW[...] = a_in.T @ delta
        if gb is not None:
            gb[...] = delta.sum(axis=0)
        if k:
            z_prev = cache[k - 1][1]
            delta = (delta @ layers[k][0].T) * act_grad(z_prev, a_in)
    return loss, grad


def forward_loss(m: ModelParams, batch) -> float:
    """Mean cross-entropy of ``m`` on ``batch = (features, labels)``."""
    x, y = _check_batch(m, batch)
    loss, _ = _loss_and_grad(m, m.values, x, y, need_grad=False)
    return float(loss)


def predict(m: ModelParams, x: np.ndarray) -> np.ndarray:
    logits, _ = _forward(m, m.values, np.asarray(x, dtype=np.float64))
    return logits.argmax(axis=1)


def accuracy(m: ModelParams, batch) -> float:
    x, y = _check_batch(m, batch)
    return float((predict(m, x) == y).mean())


def grad(m: ModelParams, batch, mu: float = 0.0, anchor: ModelParams | None = None) -> np.ndarray:
    """Gradient of mean cross-entropy plus ``mu/2 * ||m - anchor||^2``."""
    x, y = _check_batch(m, batch)
    if mu < 0:
        raise InvalidInput("mu must be nonnegative")
    _, g = _loss_and_grad(m, m.values, x, y)
    if anchor is not None:
        if anchor.d != m.d:
            raise InvalidInput("anchor dimension differs from model dimension")
        if mu:
            g += mu * (m.values - anchor.values)
    return g


def clip_update(delta: np.ndarray, tau: float) -> np.ndarray:
    """Project ``delta`` onto the L2 ball of radius ``tau``.

    The scaled branch nudges the factor down until the recomputed norm is
    within the ball, which makes the operation exactly idempotent.
    """
    if tau <= 0:
        raise InvalidInput("tau must be positive")
    delta = np.asarray(delta, dtype=np.float64)
    norm = np.linalg.norm(delta)
    if norm <= tau:
        return delta.copy()
    factor = tau / norm
    out = delta * factor
    while np.linalg.norm(out) > tau:
        factor = np.nextafter(factor, 0.0)
        out = delta * factor
    return out


@dataclass
class ClientRecord:
    """One client's local data and the radio/privacy attributes attached to it."""
    id: int
    x: np.ndarray
    y: np.ndarray
    p: float
    power: float = 1.0
    kappa: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.y) == 0:
            raise InvalidInput(f"client {self.id} has no samples")

    @property
    def n(self) -> int:
        return len(self.y)


def local_solve(global_model: ModelParams, client: ClientRecord, hyper: LocalHyper,
                algorithm: Algorithm | str = Algorithm.FEDAVG, round_index: int = 0,
                seed: int = 0) -> ModelParams:
    """Minibatch SGD with heavy-ball momentum on the client's local objective.

    FedAvg minimizes the plain local loss.  FedProx and Upcycled add the
    proximal pull ``mu/2 ||w - global||^2``, which is integrated in closed form
    at each step so that very large ``mu`` stays stable; the fixed point is
    the stationary point of the proximal objective.  With ``mu == 0`` the step
    is plain momentum SGD.
    """
    algorithm = Algorithm(algorithm)
    mu = 0.0 if algorithm is Algorithm.FEDAVG else hyper.mu
    x = np.asarray(client.x, dtype=np.float64)
    y = np.asarray(client.y, dtype=np.intp)
    if x.shape[1] != global_model.shapes[0][0]:
        raise InvalidInput("client features do not match the model input")
    anchor = global_model.values
    w = anchor.copy()
    v = np.zeros_like(w)
    rng = stream(seed, "local", client.id, round_index)
    prox = hyper.lr * mu / (1.0 - hyper.momentum)
    n = len(y)
    for _ in range(hyper.local_epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            _, g = _loss_and_grad(global_model, w, x[idx], y[idx])
            v = hyper.momentum * v + g
            if mu:
                w = (w - hyper.lr * v + prox * anchor) / (1.0 + prox)
            else:
                w = w - hyper.lr * v
    if not np.all(np.isfinite(w)):
        raise FloatingPointError(f"local model of client {client.id} diverged")
    return global_model.with_values(w)
