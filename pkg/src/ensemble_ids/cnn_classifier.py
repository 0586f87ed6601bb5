"""LeNet-5 style classifier over the 41 features padded into an 8x8 image.

Default stack: conv(6, 3x3) -> pool(2x2) -> conv(16, 2x2) -> flatten ->
dense(120) -> dense(84) -> dense(1, sigmoid).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._neural import TrainingStats, fit_network, votes_from_proba
from .nn import Activation, AvgPool2D, Conv2D, Dense, Flatten, MaxPool2D, Sequential
from .preprocess import CNN_SIDE


@dataclass
class CnnConfig:
    conv1_filters: int = 6
    conv1_kernel: int = 3
    conv2_filters: int = 16
    conv2_kernel: int = 2
    pooling: str = "max"
    dense1: int = 120
    dense2: int = 84
    conv_activation: str = "leaky_relu"
    dense_activation: str = "elu"
    learning_rate: float = 0.006
    batch_size: int = 1024
    epochs: int = 100
    patience: int | None = 4


def build_network(cfg: CnnConfig, seed: int) -> Sequential:
    if cfg.pooling not in ("max", "avg"):
        raise ValueError(f"pooling must be 'max' or 'avg', got {cfg.pooling!r}")
    pool = MaxPool2D() if cfg.pooling == "max" else AvgPool2D()
    layers = [
        Conv2D(cfg.conv1_filters, cfg.conv1_kernel), Activation(cfg.conv_activation),
        pool,
        Conv2D(cfg.conv2_filters, cfg.conv2_kernel), Activation(cfg.conv_activation),
        Flatten(),
        Dense(cfg.dense1), Activation(cfg.dense_activation),
        Dense(cfg.dense2), Activation(cfg.dense_activation),
        Dense(1), Activation("sigmoid"),
    ]
    return Sequential(layers, (CNN_SIDE, CNN_SIDE, 1), seed, name="cnn")


def train(train_img: np.ndarray, train_y: np.ndarray, valid_img: np.ndarray | None,
          valid_y: np.ndarray | None, seed: int, cfg: CnnConfig | None = None
          ) -> tuple[Sequential, TrainingStats]:
    cfg = cfg or CnnConfig()
    net = build_network(cfg, seed)
    stats = fit_network(net, train_img, train_y, valid_img, valid_y,
                        learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
                        epochs=cfg.epochs, patience=cfg.patience, seed=seed)
    return net, stats


def predict_proba(net: Sequential, batch: np.ndarray) -> np.ndarray:
    return net.predict_proba(batch)


def predict(net: Sequential, batch: np.ndarray) -> np.ndarray:
    return votes_from_proba(net.predict_proba(batch))
