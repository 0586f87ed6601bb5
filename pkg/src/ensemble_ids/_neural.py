"""Training/prediction plumbing shared by the GRU and CNN learners."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dataset import BinaryClass
from .nn import Adam, EarlyStopper, Sequential, train_loop

VOTE_THRESHOLD = 0.5


@dataclass
class TrainingStats:
    wall_time: float
    epochs_run: int
    best_epoch: int
    stopped_early: bool
    val_loss: float | None
    val_accuracy: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def fit_network(net: Sequential, X, y, Xv, yv, *, learning_rate: float, batch_size: int,
                epochs: int, patience: int | None, seed: int) -> TrainingStats:
    has_valid = Xv is not None and len(Xv) > 0
    stopper = EarlyStopper(patience) if has_valid else None
    history = train_loop(
        net, (X, y), (Xv, yv) if has_valid else None,
        epochs=epochs, batch_size=batch_size, stopper=stopper,
        optimizer=Adam(learning_rate), seed=seed,
    )
    best = history.epochs[history.best_epoch - 1]
    return TrainingStats(
        wall_time=history.wall_time,
        epochs_run=history.epochs_run,
        best_epoch=history.best_epoch,
        stopped_early=history.stopped_early,
        val_loss=best.get("val_loss"),
        val_accuracy=best.get("val_accuracy"),
    )


def votes_from_proba(p: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(p) >= VOTE_THRESHOLD, BinaryClass.ATTACK, BinaryClass.NORMAL).astype(np.int8)
