"""Minimal dense network: forward pass, backprop for the DQN loss, optimizers,
and JSON persistence for trained policies."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

POLICY_FORMAT_VERSION = "1"
ACTIVATIONS = ("relu", "tanh")


class PolicyFormatError(ValueError):
    """Raised for unreadable, corrupt, or version-mismatched policy files."""


@dataclass
class NetworkParams:
    """Fully connected net; weights[l] has shape (layer_sizes[l], layer_sizes[l+1]).

    Hidden layers apply the configured activation, the output layer is linear.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"

    def __post_init__(self) -> None:
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layers")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.layer_sizes) - 1 or \
                len(self.biases) != len(self.weights):
            raise ValueError("parameter count does not match layer sizes")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_sizes[l], self.layer_sizes[l + 1])
            if w.shape != expect or b.shape != (expect[1],):
                raise ValueError(f"layer {l}: bad parameter shape {w.shape}")

    @classmethod
    def glorot(cls, layer_sizes: Sequence[int], activation: str = "relu",
               rng: np.random.Generator | int | None = None) -> "NetworkParams":
        """Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases."""
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        sizes = tuple(int(s) for s in layer_sizes)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(gen.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(sizes, weights, biases, activation)

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.layer_sizes,
                             [w.copy() for w in self.weights],
                             [b.copy() for b in self.biases],
                             self.activation)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _activate_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(z.dtype)
    t = np.tanh(z)
    return 1.0 - t * t


def forward(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Network output for one vector (in,) or a batch (B, in)."""
    single = np.ndim(x) == 1
    a = np.atleast_2d(np.asarray(x, dtype=float))
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        a = z if l == last else _activate(z, params.activation)
    return a[0] if single else a


def _forward_trace(params: NetworkParams, x: np.ndarray):
    """Forward keeping inputs and pre-activations of every layer."""
    acts = [np.atleast_2d(np.asarray(x, dtype=float))]
    pres = []
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = acts[-1] @ w + b
        pres.append(z)
        acts.append(z if l == last else _activate(z, params.activation))
    return acts, pres


def dqn_loss_grads(params: NetworkParams, states: np.ndarray, actions: np.ndarray,
                   targets: np.ndarray):
    """MSE between Q(s, a) of the taken actions and the targets.

    Returns:
        (loss, weight gradients, bias gradients); gradients match parameter
        shapes layer by layer.
    """
    acts, pres = _forward_trace(params, states)
    q_all = acts[-1]
    batch = q_all.shape[0]
    rows = np.arange(batch)
    err = q_all[rows, actions] - targets
    loss = float(np.mean(err * err))
    delta = np.zeros_like(q_all)
    delta[rows, actions] = 2.0 * err / batch
    grads_w = [np.empty(0)] * len(params.weights)
    grads_b = [np.empty(0)] * len(params.biases)
    for l in range(len(params.weights) - 1, -1, -1):
        grads_w[l] = acts[l].T @ delta
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ params.weights[l].T) * _activate_grad(
                pres[l - 1], params.activation)
    return loss, grads_w, grads_b


class SgdOptimizer:
    def __init__(self, learning_rate: float) -> None:
        self.learning_rate = learning_rate

    def step(self, params: NetworkParams, grads_w, grads_b) -> None:
        for w, b, gw, gb in zip(params.weights, params.biases, grads_w, grads_b):
            w -= self.learning_rate * gw
            b -= self.learning_rate * gb


class AdamOptimizer:
    def __init__(self, learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None

    def step(self, params: NetworkParams, grads_w, grads_b) -> None:
        grads = list(grads_w) + list(grads_b)
        tensors = list(params.weights) + list(params.biases)
        if self._m is None:
            self._m = [np.zeros_like(t) for t in tensors]
            self._v = [np.zeros_like(t) for t in tensors]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, (tensor, g) in enumerate(zip(tensors, grads)):
            self._m[i] = b1 * self._m[i] + (1 - b1) * g
            self._v[i] = b2 * self._v[i] + (1 - b2) * g * g
            m_hat = self._m[i] / (1 - b1 ** self.t)
            v_hat = self._v[i] / (1 - b2 ** self.t)
            tensor -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(kind: str, learning_rate: float):
    if kind == "sgd":
        return SgdOptimizer(learning_rate)
    if kind == "adam":
        return AdamOptimizer(learning_rate)
    raise ValueError(f"unknown optimizer {kind!r}")


def dqn_target(reward: float, discount: float, next_q_max: float, done: bool) -> float:
    """Bootstrap target: reward alone on terminal transitions."""
    return reward if done else reward + discount * next_q_max


def dqn_update(params: NetworkParams, states: np.ndarray, actions: np.ndarray,
               targets: np.ndarray, optimizer) -> float:
    """One gradient step on the DQN regression loss; returns the loss."""
    loss, grads_w, grads_b = dqn_loss_grads(params, states, actions, targets)
    optimizer.step(params, grads_w, grads_b)
    return loss


def sync_target(online: NetworkParams) -> NetworkParams:
    """Deep copy of the online parameters for use as a frozen target."""
    return online.copy()


# ---------------------------------------------------------------------------
# Persistence


def policy_to_doc(params: NetworkParams, metadata: dict | None = None) -> dict:
    return {
        "version": POLICY_FORMAT_VERSION,
        "layer_sizes": list(params.layer_sizes),
        "activation": params.activation,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "metadata": dict(metadata or {}),
    }


def policy_from_doc(doc: dict) -> tuple[NetworkParams, dict]:
    if not isinstance(doc, dict):
        raise PolicyFormatError("policy document is not an object")
    version = doc.get("version")
    if version != POLICY_FORMAT_VERSION:
        raise PolicyFormatError(
            f"unsupported policy version {version!r}, expected {POLICY_FORMAT_VERSION!r}")
    try:
        sizes = tuple(int(s) for s in doc["layer_sizes"])
        weights = [np.array(w, dtype=float) for w in doc["weights"]]
        biases = [np.array(b, dtype=float) for b in doc["biases"]]
        params = NetworkParams(sizes, weights, biases, str(doc["activation"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise PolicyFormatError(f"malformed policy document: {exc}") from exc
    return params, dict(doc.get("metadata", {}))


def save_policy(params: NetworkParams, path: str, metadata: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(policy_to_doc(params, metadata), fh)


def load_policy(path: str) -> tuple[NetworkParams, dict]:
    """Reads a policy file; float values round-trip bit-identically."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise PolicyFormatError(f"corrupt policy file {path}: {exc}") from exc
    return policy_from_doc(doc)
