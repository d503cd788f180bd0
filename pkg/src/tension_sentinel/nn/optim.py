"""SGD and Adam over a flat parameter list.

Optimizers take a list of ``(name, param, grad)`` triples (as produced by
the layer/model ``parameters()`` methods) and update the parameter arrays
in place. One optimizer instance must not be stepped from two threads.
"""

import numpy as np

from ..errors import ShapeError


def clip_global_norm(params, max_norm):
    """Scale all gradients so their joint L2 norm is at most max_norm.

    Returns the pre-clip norm.
    """
    total = 0.0
    for _, _, g in params:
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if max_norm is not None and norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for _, _, g in params:
            g *= scale
    return norm


class SGD:
    def __init__(self, params, learning_rate):
        if learning_rate < 0:
            raise ValueError("learning rate must be nonnegative")
        self.params = list(params)
        self.learning_rate = learning_rate

    def step(self):
        for _, p, g in self.params:
            if p.shape != g.shape:
                raise ShapeError(f"param shape {p.shape} != grad shape {g.shape}")
            p -= self.learning_rate * g


class Adam:
    """Adam with bias correction; defaults beta1=0.9, beta2=0.999, eps=1e-8."""

    def __init__(self, params, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for _, p, _ in self.params]
        self.v = [np.zeros_like(p) for _, p, _ in self.params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, (_, p, g) in enumerate(self.params):
            if p.shape != g.shape:
                raise ShapeError(f"param shape {p.shape} != grad shape {g.shape}")
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            m_hat = self.m[i] / (1.0 - b1 ** self.t)
            v_hat = self.v[i] / (1.0 - b2 ** self.t)
            p -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(kind, params, learning_rate):
    if kind == "sgd":
        return SGD(params, learning_rate)
    if kind == "adam":
        return Adam(params, learning_rate)
    raise ValueError(f"unknown optimizer kind {kind!r}")
