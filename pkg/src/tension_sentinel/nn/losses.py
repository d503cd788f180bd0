"""Mean squared error with optional entry mask.

The loss is (1 / (2 * N_eff)) * sum((pred - target)^2) over unmasked
entries, where N_eff counts rows that contribute at least one entry.
Dividing by the row count keeps the learning rate batch-size-invariant;
``strict_sum=True`` drops the 1/N_eff factor (plain half-sum-of-squares).
"""

import numpy as np

from ..errors import EmptyLossError, ShapeError


def _check(pred, target, mask):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"pred shape {pred.shape} != target shape {target.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != pred.shape:
            raise ShapeError(f"mask shape {mask.shape} != pred shape {pred.shape}")
    return pred, target, mask


def _n_eff(pred, mask):
    if mask is None:
        return pred.shape[0] if pred.ndim > 1 else 1
    if pred.ndim == 1:
        return 1 if mask.any() else 0
    return int(np.count_nonzero(mask.reshape(mask.shape[0], -1).any(axis=1)))


def mse_loss(pred, target, mask=None, strict_sum=False):
    pred, target, mask = _check(pred, target, mask)
    r = pred - target
    if mask is not None:
        r = np.where(mask, r, 0.0)
    total = float(np.sum(r * r))
    if strict_sum:
        return 0.5 * total
    n_eff = _n_eff(pred, mask)
    if n_eff == 0:
        raise EmptyLossError("no unmasked rows to evaluate the loss on")
    return total / (2.0 * n_eff)


def mse_loss_grad(pred, target, mask=None, strict_sum=False):
    """Gradient of mse_loss w.r.t. pred; zero at masked entries."""
    pred, target, mask = _check(pred, target, mask)
    r = pred - target
    if mask is not None:
        r = np.where(mask, r, 0.0)
    if strict_sum:
        return r
    n_eff = _n_eff(pred, mask)
    if n_eff == 0:
        raise EmptyLossError("no unmasked rows to evaluate the loss on")
    return r / n_eff
