"""LSTM cell and stacked sequence processing with backpropagation through time.

Gate equations (sigma is the logistic function, * is elementwise):

    f = sigma(W_f h_prev + U_f x + b_f)
    i = sigma(W_i h_prev + U_i x + b_i)
    o = sigma(W_o h_prev + U_o x + b_o)
    c_tilde = tanh(W_c h_prev + U_c x + b_c)
    C = f * C_prev + i * c_tilde
    h = o * tanh(C)

The four gate blocks are stored fused (rows ordered f, i, o, c) so one
matmul per step covers all gates; the per-gate views W_f, U_f, ... are
exposed for inspection and for the scalar cell_step API.
"""

from dataclasses import dataclass, field

import numpy as np

from ._kernels import lstm_backward_loop, lstm_forward_loop
from .errors import ShapeError
from .nn.layers import sigmoid, uniform_fanin

GATE_ORDER = ("f", "i", "o", "c")


@dataclass
class LSTMState:
    """Hidden and cell vectors for one layer at one timestep."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size):
        return cls(np.zeros(hidden_size), np.zeros(hidden_size))


class LSTMLayer:
    """One LSTM layer over a (T, B, input) sequence.

    W: (4H, H) recurrent weights, U: (4H, input) input weights, b: (4H,),
    all with gate rows in GATE_ORDER.
    """

    def __init__(self, W, U, b):
        W = np.asarray(W, dtype=np.float64)
        U = np.asarray(U, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != 4 * W.shape[1]:
            raise ShapeError(f"recurrent weight must be (4H, H), got {W.shape}")
        H = W.shape[1]
        if U.ndim != 2 or U.shape[0] != 4 * H:
            raise ShapeError(f"input weight shape {U.shape} inconsistent with hidden size {H}")
        if b.shape != (4 * H,):
            raise ShapeError(f"bias shape {b.shape} inconsistent with hidden size {H}")
        self.W = W
        self.U = U
        self.b = b
        self.grad_W = np.zeros_like(W)
        self.grad_U = np.zeros_like(U)
        self.grad_b = np.zeros_like(b)
        self._cache = None

    @classmethod
    def initialize(cls, input_size, hidden_size, rng):
        W = uniform_fanin(rng, 4 * hidden_size, hidden_size)
        U = uniform_fanin(rng, 4 * hidden_size, input_size)
        return cls(W, U, np.zeros(4 * hidden_size))

    @property
    def hidden_size(self):
        return self.W.shape[1]

    @property
    def input_size(self):
        return self.U.shape[1]

    def _gate_view(self, M, idx):
        H = self.hidden_size
        return M[idx * H : (idx + 1) * H]

    # Per-gate views onto the fused arrays (writable, shared memory).
    @property
    def W_f(self):
        return self._gate_view(self.W, 0)

    @property
    def W_i(self):
        return self._gate_view(self.W, 1)

    @property
    def W_o(self):
        return self._gate_view(self.W, 2)

    @property
    def W_c(self):
        return self._gate_view(self.W, 3)

    @property
    def U_f(self):
        return self._gate_view(self.U, 0)

    @property
    def U_i(self):
        return self._gate_view(self.U, 1)

    @property
    def U_o(self):
        return self._gate_view(self.U, 2)

    @property
    def U_c(self):
        return self._gate_view(self.U, 3)

    @property
    def b_f(self):
        return self._gate_view(self.b, 0)

    @property
    def b_i(self):
        return self._gate_view(self.b, 1)

    @property
    def b_o(self):
        return self._gate_view(self.b, 2)

    @property
    def b_c(self):
        return self._gate_view(self.b, 3)

    def forward(self, x, h0=None, c0=None):
        """Run the layer over x of shape (T, B, input); returns h sequence (T, B, H)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3:
            raise ShapeError(f"sequence input must be (T, B, input), got {x.shape}")
        T, B, n_in = x.shape
        if T < 1:
            raise ShapeError("empty sequence")
        if n_in != self.input_size:
            raise ShapeError(
                f"input width {n_in} != layer input size {self.input_size}"
            )
        H = self.hidden_size
        h0 = np.zeros((B, H)) if h0 is None else np.asarray(h0, dtype=np.float64)
        c0 = np.zeros((B, H)) if c0 is None else np.asarray(c0, dtype=np.float64)

        # Input contribution for all steps in one matmul; only the recurrent
        # term runs step by step, inside a compiled loop (see _kernels).
        zx = (x.reshape(T * B, n_in) @ self.U.T + self.b).reshape(T, B, 4 * H)
        WT = np.ascontiguousarray(self.W.T)

        gates = np.empty((T, B, 4 * H))  # f, i, o, c_tilde after nonlinearity
        c_seq = np.empty((T, B, H))
        tanh_c = np.empty((T, B, H))
        h_seq = np.empty((T, B, H))

        h_fin, c_fin = lstm_forward_loop(
            zx, WT, np.ascontiguousarray(h0), np.ascontiguousarray(c0),
            gates, c_seq, tanh_c, h_seq,
        )

        self._cache = (x, h0, c0, gates, c_seq, tanh_c, h_seq)
        self.final_state = LSTMState(h_fin.copy(), c_fin.copy())
        return h_seq

    def backward(self, grad_h_seq):
        """BPTT through the cached forward; returns gradient w.r.t. the input sequence."""
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        x, h0, c0, gates, c_seq, tanh_c, h_seq = self._cache
        T, B, H = c_seq.shape
        grad_h_seq = np.asarray(grad_h_seq, dtype=np.float64)
        if grad_h_seq.shape != (T, B, H):
            raise ShapeError(
                f"upstream gradient shape {grad_h_seq.shape} != hidden sequence shape {(T, B, H)}"
            )

        dz = np.empty((T, B, 4 * H))
        lstm_backward_loop(
            gates, c_seq, tanh_c, np.ascontiguousarray(c0),
            np.ascontiguousarray(grad_h_seq), self.W, dz,
        )

        h_prev = np.empty((T, B, H))
        h_prev[0] = h0
        h_prev[1:] = h_seq[:-1]
        dz2 = dz.reshape(T * B, 4 * H)
        self.grad_W += dz2.T @ h_prev.reshape(T * B, H)
        self.grad_U += dz2.T @ x.reshape(T * B, -1)
        self.grad_b += dz2.sum(axis=0)
        return (dz2 @ self.U).reshape(x.shape)

    def parameters(self):
        return [("W", self.W, self.grad_W), ("U", self.U, self.grad_U), ("b", self.b, self.grad_b)]

    def zero_grad(self):
        self.grad_W[...] = 0.0
        self.grad_U[...] = 0.0
        self.grad_b[...] = 0.0


def cell_step(x, prev, layer):
    """Single-vector cell update; x (input,), prev LSTMState, returns new LSTMState."""
    x = np.asarray(x, dtype=np.float64)
    H = layer.hidden_size
    if x.shape != (layer.input_size,):
        raise ShapeError(f"input shape {x.shape} != ({layer.input_size},)")
    if prev.h.shape != (H,) or prev.c.shape != (H,):
        raise ShapeError(f"state shapes {prev.h.shape}/{prev.c.shape} != ({H},)")
    z = layer.W @ prev.h + layer.U @ x + layer.b
    gates = sigmoid(z[: 3 * H])
    f, i, o = gates[:H], gates[H : 2 * H], gates[2 * H :]
    g = np.tanh(z[3 * H :])
    c = f * prev.c + i * g
    h = o * np.tanh(c)
    return LSTMState(h, c)


class StackedLSTM:
    """Stack of LSTM layers; layer l consumes layer l-1 hidden outputs."""

    def __init__(self, layers):
        for a, b in zip(layers, layers[1:]):
            if b.input_size != a.hidden_size:
                raise ShapeError(
                    f"stack chain break: hidden {a.hidden_size} feeds input {b.input_size}"
                )
        self.layers = list(layers)

    @classmethod
    def initialize(cls, input_size, hidden_size, num_layers, rng):
        layers = []
        n_in = input_size
        for _ in range(num_layers):
            layers.append(LSTMLayer.initialize(n_in, hidden_size, rng))
            n_in = hidden_size
        return cls(layers)

    @property
    def input_size(self):
        return self.layers[0].input_size

    @property
    def hidden_size(self):
        return self.layers[-1].hidden_size

    def forward(self, x):
        out = x
        for layer in self.layers:
            out = layer.forward(out)
        return out

    def backward(self, grad_h_seq):
        g = grad_h_seq
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


def sequence_forward(inputs, stack, initial_states=None):
    """Process a (T, input) sequence through a stack; returns (T, hidden) and final states.

    ``initial_states`` is a list of LSTMState per layer (zeros when omitted).
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[0] < 1:
        raise ShapeError(f"expected nonempty (T, input) sequence, got {inputs.shape}")
    out = inputs[:, None, :]
    finals = []
    for li, layer in enumerate(stack.layers):
        if initial_states is not None:
            st = initial_states[li]
            out = layer.forward(out, h0=st.h[None, :], c0=st.c[None, :])
        else:
            out = layer.forward(out)
        finals.append(LSTMState(layer.final_state.h[0], layer.final_state.c[0]))
    return out[:, 0, :], finals


def sequence_backward(stack, upstream):
    """BPTT for a (T, hidden) upstream gradient through a stack run via sequence_forward.

    Gradients accumulate into the layers; returns the gradient w.r.t. the
    input sequence, shape (T, input).
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    return stack.backward(upstream[:, None, :])[:, 0, :]
