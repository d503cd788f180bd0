"""Central finite-difference gradient oracle for verifying backprop."""

import numpy as np


def finite_difference_gradient(loss_fn, params, step=1e-5):
    """Full central-difference gradient of loss_fn w.r.t. each array in params.

    ``loss_fn`` takes no arguments and reads the (mutated-in-place) params.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = loss_fn()
            flat[i] = orig - step
            lm = loss_fn()
            flat[i] = orig
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise FloatingPointError("non-finite loss during finite differencing")
            gflat[i] = (lp - lm) / (2.0 * step)
        grads.append(g)
    return grads


def sampled_finite_difference(loss_fn, params, step, rng, n_coords):
    """Central differences at a random coordinate subset.

    Returns a list of (param_index, flat_coord, fd_value). Checking every
    coordinate of a full model is quadratic in parameter count, so large
    models are spot-checked.
    """
    sizes = [p.size for p in params]
    total = sum(sizes)
    picks = rng.choice(total, size=min(n_coords, total), replace=False)
    offsets = np.cumsum([0] + sizes)
    out = []
    for flat_idx in sorted(int(i) for i in picks):
        pi = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        ci = flat_idx - offsets[pi]
        flat = params[pi].reshape(-1)
        orig = flat[ci]
        flat[ci] = orig + step
        lp = loss_fn()
        flat[ci] = orig - step
        lm = loss_fn()
        flat[ci] = orig
        if not (np.isfinite(lp) and np.isfinite(lm)):
            raise FloatingPointError("non-finite loss during finite differencing")
        out.append((pi, ci, (lp - lm) / (2.0 * step)))
    return out


def max_relative_error(analytic, numeric, floor=1e-4):
    """max |a-n| / max(|a|, |n|, floor) over paired arrays or scalars.

    The floor keeps near-zero gradients (where the FD oracle itself only
    carries ~1e-10 absolute accuracy at step 1e-5) from inflating the ratio.
    """
    if not isinstance(analytic, (list, tuple)):
        analytic = [analytic]
    if not isinstance(numeric, (list, tuple)):
        numeric = [numeric]
    worst = 0.0
    for a, n in zip(analytic, numeric):
        a = np.asarray(a, dtype=np.float64)
        n = np.asarray(n, dtype=np.float64)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
