"""GRU(50) sequence classifier over the 41 scaled features read as timesteps."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._neural import TrainingStats, fit_network, votes_from_proba
from .dataset import N_FEATURES
from .nn import GRU, Activation, Dense, Sequential


@dataclass
class GruConfig:
    units: int = 50
    dense: list = field(default_factory=lambda: [{"units": 25, "activation": "leaky_relu"}])
    learning_rate: float = 0.006
    batch_size: int = 1024
    epochs: int = 100
    patience: int | None = 4


def build_network(cfg: GruConfig, seed: int) -> Sequential:
    layers = [GRU(cfg.units)]
    for spec in cfg.dense:
        layers += [Dense(spec["units"]), Activation(spec.get("activation", "leaky_relu"))]
    layers += [Dense(1), Activation("sigmoid")]
    return Sequential(layers, (N_FEATURES, 1), seed, name="gru")


def train(train_seq: np.ndarray, train_y: np.ndarray, valid_seq: np.ndarray | None,
          valid_y: np.ndarray | None, seed: int, cfg: GruConfig | None = None
          ) -> tuple[Sequential, TrainingStats]:
    cfg = cfg or GruConfig()
    net = build_network(cfg, seed)
    stats = fit_network(net, train_seq, train_y, valid_seq, valid_y,
                        learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
                        epochs=cfg.epochs, patience=cfg.patience, seed=seed)
    return net, stats


def predict_proba(net: Sequential, batch: np.ndarray) -> np.ndarray:
    return net.predict_proba(batch)


def predict(net: Sequential, batch: np.ndarray) -> np.ndarray:
    """Votes (1 = attack) with the sigmoid output thresholded at >= 0.5."""
    return votes_from_proba(net.predict_proba(batch))
