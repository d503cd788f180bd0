"""Compiled inner loops for the LSTM recurrence.

The step loops touch small (batch x hidden) arrays thousands of times per
window, so python-level ufunc dispatch dominates a pure-numpy version.
When numba is available the loops are JIT-compiled; otherwise a numpy
fallback with identical semantics is used. Gate layout in the fused
arrays is f, i, o, c_tilde.
"""

import numpy as np
from scipy.special import expit

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _forward_loop_jit(zx, WT, h0, c0, gates, c_seq, tanh_c, h_seq):
    T, B, H4 = zx.shape
    H = H4 // 4
    h = h0.copy()
    c = c0.copy()
    for t in range(T):
        z = zx[t] + np.dot(h, WT)
        for b in range(B):
            for j in range(3 * H):
                z[b, j] = 1.0 / (1.0 + np.exp(-z[b, j]))
            for j in range(3 * H, H4):
                z[b, j] = np.tanh(z[b, j])
            for j in range(H):
                cv = z[b, j] * c[b, j] + z[b, H + j] * z[b, 3 * H + j]
                c[b, j] = cv
                tcv = np.tanh(cv)
                c_seq[t, b, j] = cv
                tanh_c[t, b, j] = tcv
                h[b, j] = z[b, 2 * H + j] * tcv
        gates[t] = z
        h_seq[t] = h
    return h, c


@njit(cache=True)
def _backward_loop_jit(gates, c_seq, tanh_c, c0, grad_h_seq, W, dz):
    T, B, H = c_seq.shape
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        gt = gates[t]
        dzt = dz[t]
        for b in range(B):
            for j in range(H):
                f = gt[b, j]
                i = gt[b, H + j]
                o = gt[b, 2 * H + j]
                g = gt[b, 3 * H + j]
                tc = tanh_c[t, b, j]
                dhv = grad_h_seq[t, b, j] + dh[b, j]
                cp = c_seq[t - 1, b, j] if t > 0 else c0[b, j]
                dcv = dc[b, j] + dhv * o * (1.0 - tc * tc)
                dzt[b, j] = dcv * cp * f * (1.0 - f)
                dzt[b, H + j] = dcv * g * i * (1.0 - i)
                dzt[b, 2 * H + j] = dhv * tc * o * (1.0 - o)
                dzt[b, 3 * H + j] = dcv * i * (1.0 - g * g)
                dc[b, j] = dcv * f
        dh = np.dot(dzt, W)


def _forward_loop_np(zx, WT, h0, c0, gates, c_seq, tanh_c, h_seq):
    T, B, H4 = zx.shape
    H = H4 // 4
    h = h0
    c_prev = c0
    zh = np.empty((B, H4))
    tmp = np.empty((B, H))
    for t in range(T):
        z = zx[t]
        np.dot(h, WT, out=zh)
        z += zh
        gt = gates[t]
        expit(z[:, : 3 * H], out=gt[:, : 3 * H])
        np.tanh(z[:, 3 * H :], out=gt[:, 3 * H :])
        ct = c_seq[t]
        np.multiply(gt[:, :H], c_prev, out=ct)
        np.multiply(gt[:, H : 2 * H], gt[:, 3 * H :], out=tmp)
        ct += tmp
        np.tanh(ct, out=tanh_c[t])
        np.multiply(gt[:, 2 * H : 3 * H], tanh_c[t], out=h_seq[t])
        h = h_seq[t]
        c_prev = ct
    return h.copy(), c_prev.copy()


def _backward_loop_np(gates, c_seq, tanh_c, c0, grad_h_seq, W, dz):
    T, B, H = c_seq.shape
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    t1 = np.empty((B, H))
    t2 = np.empty((B, H))
    for t in range(T - 1, -1, -1):
        gt = gates[t]
        f = gt[:, :H]
        i = gt[:, H : 2 * H]
        o = gt[:, 2 * H : 3 * H]
        g = gt[:, 3 * H :]
        tc = tanh_c[t]
        c_prev = c_seq[t - 1] if t > 0 else c0
        dzt = dz[t]
        np.add(grad_h_seq[t], dh, out=dh)
        np.multiply(dh, tc, out=t1)
        np.subtract(1.0, o, out=t2)
        t2 *= o
        np.multiply(t1, t2, out=dzt[:, 2 * H : 3 * H])
        np.multiply(tc, tc, out=t2)
        np.subtract(1.0, t2, out=t2)
        t2 *= o
        t2 *= dh
        dc += t2
        np.subtract(1.0, f, out=t1)
        t1 *= f
        t1 *= dc
        np.multiply(t1, c_prev, out=dzt[:, :H])
        np.subtract(1.0, i, out=t1)
        t1 *= i
        t1 *= dc
        np.multiply(t1, g, out=dzt[:, H : 2 * H])
        np.multiply(g, g, out=t1)
        np.subtract(1.0, t1, out=t1)
        t1 *= i
        np.multiply(t1, dc, out=dzt[:, 3 * H :])
        dc *= f
        np.dot(dzt, W, out=dh)


if HAVE_NUMBA:
    lstm_forward_loop = _forward_loop_jit
    lstm_backward_loop = _backward_loop_jit
else:
    lstm_forward_loop = _forward_loop_np
    lstm_backward_loop = _backward_loop_np
