from .layers import DenseLayer, DenseNetwork, dense_forward, dnn_forward, sigmoid
from .dropout import DropoutSpec, dropout_apply
from .losses import mse_loss, mse_loss_grad
from .optim import SGD, Adam, clip_global_norm
from .gradcheck import finite_difference_gradient, max_relative_error

__all__ = [
    "DenseLayer",
    "DenseNetwork",
    "dense_forward",
    "dnn_forward",
    "sigmoid",
    "DropoutSpec",
    "dropout_apply",
    "mse_loss",
    "mse_loss_grad",
    "SGD",
    "Adam",
    "clip_global_norm",
    "finite_difference_gradient",
    "max_relative_error",
]
