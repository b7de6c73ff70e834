"""Small dense networks with manual backpropagation.

Float64 throughout: these nets are tiny (a few 64-unit layers) and exact
reproducibility across runs matters more than speed at this scale. Forward
supports single inputs (d,) and batches (n, d); gradients are averaged over
the batch by the callers, not here.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

RELU, SIGMOID, IDENTITY = "relu", "sigmoid", "identity"
_ACTIVATION_CODES = {RELU: 0, SIGMOID: 1, IDENTITY: 2}
_CODE_ACTIVATIONS = {v: k for k, v in _ACTIVATION_CODES.items()}

_MAGIC = b"FARELNET"


@dataclass
class Layer:
    weights: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: str

    def __post_init__(self):
        if self.activation not in _ACTIVATION_CODES:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ValueError("layer shapes do not compose")


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == RELU:
        return np.maximum(z, 0.0)
    if activation == SIGMOID:
        return 1.0 / (1.0 + np.exp(-z))
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, activation: str) -> np.ndarray:
    if activation == RELU:
        return (z > 0.0).astype(np.float64)
    if activation == SIGMOID:
        return a * (1.0 - a)
    return np.ones_like(z)


class DenseNet:
    def __init__(self, layers: list[Layer]):
        if not layers:
            raise ValueError("a net needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.weights.shape[1] != nxt.weights.shape[0]:
                raise ValueError("adjacent layer shapes do not compose")
        self.layers = layers

    @classmethod
    def build(cls, sizes: list[int], activations: list[str], rng: np.random.Generator) -> "DenseNet":
        """Xavier-uniform initialised net with the given layer widths."""
        if len(activations) != len(sizes) - 1:
            raise ValueError("need one activation per layer")
        layers = []
        for fan_in, fan_out, act in zip(sizes, sizes[1:], activations):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            layers.append(Layer(weights, np.zeros(fan_out), act))
        return cls(layers)

    @property
    def input_width(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def output_width(self) -> int:
        return self.layers[-1].weights.shape[1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward_cached(x)
        return out

    def forward_cached(self, x: np.ndarray):
        """Forward pass keeping per-layer inputs and pre-activations for backward."""
        a = np.asarray(x, dtype=np.float64)
        caches = []
        for layer in self.layers:
            z = a @ layer.weights + layer.bias
            a_next = _activate(z, layer.activation)
            caches.append((a, z, a_next))
            a = a_next
        return a, caches

    def backward(self, caches, grad_output: np.ndarray):
        """Parameter gradients plus the gradient w.r.t. the net input.

        ``grad_output`` is dLoss/dOutput with the same shape the forward pass
        produced. Returns (grads, grad_input) with grads a list of (dW, db)
        matching self.layers.
        """
        delta = np.asarray(grad_output, dtype=np.float64)
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)
        for idx in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[idx]
            a_prev, z, a = caches[idx]
            delta = delta * _activation_grad(z, a, layer.activation)
            if delta.ndim == 1:
                dw = np.outer(a_prev, delta)
                db = delta.copy()
            else:
                dw = a_prev.T @ delta
                db = delta.sum(axis=0)
            grads[idx] = (dw, db)
            delta = delta @ layer.weights.T
        return grads, delta

    def copy(self) -> "DenseNet":
        return DenseNet([Layer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def parameters(self):
        for layer in self.layers:
            yield layer.weights
            yield layer.bias


def _check_grads(net: DenseNet, grads) -> None:
    if len(grads) != len(net.layers):
        raise ValueError("gradient count does not match layer count")
    for layer, (dw, db) in zip(net.layers, grads):
        if dw.shape != layer.weights.shape or db.shape != layer.bias.shape:
            raise ValueError("gradient shapes do not match parameters")
        if not (np.isfinite(dw).all() and np.isfinite(db).all()):
            raise FloatingPointError("non-finite gradient; aborting training step")


class Sgd:
    def __init__(self, lr: float = 1e-2):
        self.lr = lr

    def step(self, net: DenseNet, grads) -> None:
        _check_grads(net, grads)
        for layer, (dw, db) in zip(net.layers, grads):
            layer.weights -= self.lr * dw
            layer.bias -= self.lr * db


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self._m = None
        self._v = None

    def step(self, net: DenseNet, grads) -> None:
        _check_grads(net, grads)
        if self._m is None:
            self._m = [(np.zeros_like(dw), np.zeros_like(db)) for dw, db in grads]
            self._v = [(np.zeros_like(dw), np.zeros_like(db)) for dw, db in grads]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        correction1 = 1.0 - b1**self.t
        correction2 = 1.0 - b2**self.t
        for layer, (dw, db), m, v in zip(net.layers, grads, self._m, self._v):
            for param, grad, m_p, v_p in ((layer.weights, dw, m[0], v[0]), (layer.bias, db, m[1], v[1])):
                m_p *= b1
                m_p += (1 - b1) * grad
                v_p *= b2
                v_p += (1 - b2) * grad * grad
                m_hat = m_p / correction1
                v_hat = v_p / correction2
                param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def save_net(net: DenseNet, path) -> None:
    """Flat binary format: magic, layer count, per-layer header + row-major float64."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(net.layers)))
        for layer in net.layers:
            rows, cols = layer.weights.shape
            fh.write(struct.pack("<BII", _ACTIVATION_CODES[layer.activation], rows, cols))
            fh.write(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())


def load_net(path) -> DenseNet:
    data = Path(path).read_bytes()
    if data[:8] != _MAGIC:
        raise ValueError(f"{path} is not a farel net file")
    offset = 8
    (n_layers,) = struct.unpack_from("<I", data, offset)
    offset += 4
    layers = []
    for _ in range(n_layers):
        code, rows, cols = struct.unpack_from("<BII", data, offset)
        offset += 9
        weights = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols)
        offset += rows * cols * 8
        bias = np.frombuffer(data, dtype="<f8", count=cols, offset=offset)
        offset += cols * 8
        layers.append(Layer(weights.copy(), bias.copy(), _CODE_ACTIVATIONS[code]))
    return DenseNet(layers)
