"""Dense layers with hand-written forward/backward passes.

All arithmetic is float64. Layers cache the last forward pass so a
subsequent ``backward`` can produce exact reverse-mode gradients;
gradients accumulate into ``grad_weight`` / ``grad_bias`` until
``zero_grad`` is called.
"""

import numpy as np
from scipy.special import expit

from ..errors import ShapeError

ACTIVATIONS = ("sigmoid", "tanh", "identity")


def sigmoid(x):
    # expit is the overflow-safe logistic; single ufunc call keeps the
    # recurrent loops cheap.
    return expit(np.asarray(x, dtype=np.float64))


def uniform_fanin(rng, out_units, in_units):
    """Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    limit = 1.0 / np.sqrt(in_units)
    return rng.uniform(-limit, limit, size=(out_units, in_units))


class DenseLayer:
    """Fully connected layer: y = act(x @ W.T + b), weight shape (out, in)."""

    def __init__(self, weight, bias, activation="identity"):
        weight = np.asarray(weight, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weight.ndim != 2:
            raise ShapeError(f"weight must be 2-D, got shape {weight.shape}")
        if bias.shape != (weight.shape[0],):
            raise ShapeError(
                f"bias shape {bias.shape} inconsistent with weight shape {weight.shape}"
            )
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.weight = weight
        self.bias = bias
        self.activation = activation
        self.grad_weight = np.zeros_like(weight)
        self.grad_bias = np.zeros_like(bias)
        self._cache = None

    @classmethod
    def initialize(cls, in_units, out_units, activation, rng):
        return cls(
            uniform_fanin(rng, out_units, in_units),
            np.zeros(out_units),
            activation,
        )

    @property
    def in_units(self):
        return self.weight.shape[1]

    @property
    def out_units(self):
        return self.weight.shape[0]

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_units:
            raise ShapeError(
                f"input shape {x.shape} incompatible with weight shape "
                f"{self.weight.shape} (expected {self.in_units} columns)"
            )
        z = x @ self.weight.T + self.bias
        if self.activation == "sigmoid":
            y = sigmoid(z)
        elif self.activation == "tanh":
            y = np.tanh(z)
        else:
            y = z
        self._cache = (x, y)
        return y

    def backward(self, grad_out):
        """Backprop through the cached forward; returns grad w.r.t. input."""
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        x, y = self._cache
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if grad_out.shape != y.shape:
            raise ShapeError(
                f"upstream gradient shape {grad_out.shape} != output shape {y.shape}"
            )
        if self.activation == "sigmoid":
            dz = grad_out * y * (1.0 - y)
        elif self.activation == "tanh":
            dz = grad_out * (1.0 - y * y)
        else:
            dz = grad_out
        self.grad_weight += dz.T @ x
        self.grad_bias += dz.sum(axis=0)
        return dz @ self.weight

    def parameters(self):
        return [("weight", self.weight, self.grad_weight), ("bias", self.bias, self.grad_bias)]

    def zero_grad(self):
        self.grad_weight[...] = 0.0
        self.grad_bias[...] = 0.0


def dense_forward(x, layer):
    """Functional single-layer forward (same semantics as layer.forward)."""
    return layer.forward(x)


def dnn_forward(x, layers):
    """Compose dense layers left to right; empty list is the identity."""
    out = np.asarray(x, dtype=np.float64)
    for layer in layers:
        out = layer.forward(out)
    return out


class DenseNetwork:
    """A stack of DenseLayers with chained forward/backward."""

    def __init__(self, layers):
        for a, b in zip(layers, layers[1:]):
            if a.out_units != b.in_units:
                raise ShapeError(
                    f"layer chain break: {a.out_units} outputs feed {b.in_units} inputs"
                )
        self.layers = list(layers)

    @classmethod
    def initialize(cls, sizes, activations, rng):
        if len(activations) != len(sizes) - 1:
            raise ShapeError("need one activation per layer transition")
        layers = [
            DenseLayer.initialize(n_in, n_out, act, rng)
            for n_in, n_out, act in zip(sizes, sizes[1:], activations)
        ]
        return cls(layers)

    def forward(self, x):
        return dnn_forward(x, self.layers)

    def backward(self, grad_out):
        g = grad_out
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def parameters(self):
        out = []
        for i, layer in enumerate(self.layers):
            for name, p, g in layer.parameters():
                out.append((f"layers.{i}.{name}", p, g))
        return out

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()
