"""Small numpy neural-network engine used by the GRU and CNN learners."""
from .functional import (
    ActivationConfig, activation_backward, activation_forward, bce_grad, bce_loss, sigmoid,
    sigmoid_bce_grad,
)
from .layers import (
    GRU, Activation, AvgPool2D, Conv2D, Dense, Flatten, MaxPool2D,
    conv2d_forward, dense_forward, gru_cell_backward, gru_cell_forward, maxpool2d,
)
from .model import ModelFormatError, Sequential
from .optim import Adam, NonFiniteGradientError
from .training import EarlyStopper, TrainingError, TrainingHistory, train_loop

__all__ = [
    "GRU", "Activation", "ActivationConfig", "Adam", "AvgPool2D", "Conv2D", "Dense",
    "EarlyStopper", "Flatten", "MaxPool2D", "ModelFormatError", "NonFiniteGradientError",
    "Sequential", "TrainingError", "TrainingHistory", "activation_backward", "activation_forward",
    "bce_grad", "bce_loss", "conv2d_forward", "dense_forward", "gru_cell_backward",
    "gru_cell_forward", "maxpool2d", "sigmoid", "sigmoid_bce_grad", "train_loop",
]
