"""Mini-batch training with early stopping on validation loss."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .functional import bce_loss, sigmoid_bce_grad
from .layers import Activation
from .model import Sequential
from .optim import Adam

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


class EarlyStopper:
    """Stops once validation loss has not improved for ``patience`` epochs.

    Improvement means strictly lower than the best loss so far. The weights
    of the best epoch are kept so they can be restored at the end.
    """

    def __init__(self, patience: int | None = 4):
        self.patience = patience
        self.best_val_loss = np.inf
        self.best_epoch = 0
        self.epochs_since_improvement = 0
        self.best_weights = None

    def update(self, epoch: int, val_loss: float, weights=None) -> bool:
        """Record one epoch; return True when training should stop."""
        if val_loss < self.best_val_loss:
            self.best_val_loss = val_loss
            self.best_epoch = epoch
            self.epochs_since_improvement = 0
            self.best_weights = weights() if callable(weights) else weights
        else:
            self.epochs_since_improvement += 1
        return self.patience is not None and self.epochs_since_improvement >= self.patience


@dataclass
class TrainingHistory:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False
    wall_time: float = 0.0

    @property
    def epochs_run(self) -> int:
        return len(self.epochs)


def _logit_backward(model: Sequential, dz: np.ndarray) -> None:
    last = model.layers[-1]
    if not (isinstance(last, Activation) and last.cfg.kind == "sigmoid"):
        raise TrainingError("network must end in a sigmoid activation")
    for layer in reversed(model.layers[:-1]):
        dz = layer.backward(dz)


def accuracy(p: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean((p >= 0.5) == (y == 1)))


def train_loop(model: Sequential, train: tuple[np.ndarray, np.ndarray],
               valid: tuple[np.ndarray, np.ndarray] | None = None, *, epochs: int = 100,
               batch_size: int = 1024, stopper: EarlyStopper | None = None,
               optimizer: Adam | None = None, seed: int = 0) -> TrainingHistory:
    """Train ``model`` in place with Adam on binary cross-entropy.

    When ``valid`` and ``stopper`` are given, training halts per the stopper
    and the best-validation-loss weights are restored before returning.
    """
    X, y = train
    y = np.asarray(y, dtype=np.float64)
    if len(X) == 0 or batch_size < 1:
        raise TrainingError("empty training set or batch")
    optimizer = optimizer or Adam()
    rng = np.random.default_rng(seed)
    history = TrainingHistory()
    t0 = time.perf_counter()
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(X))
        total, seen = 0.0, 0
        for start in range(0, len(X), batch_size):
            idx = order[start:start + batch_size]
            xb, yb = X[idx], y[idx]
            model.zero_grads()
            p = model.forward(xb)[:, 0]
            loss = bce_loss(p, yb)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            _logit_backward(model, sigmoid_bce_grad(p, yb)[:, None])
            optimizer.step(model.named_params())
            total += loss * len(idx)
            seen += len(idx)
        row = {"epoch": epoch, "loss": total / seen}
        if valid is not None:
            pv = model.predict_proba(valid[0])
            row["val_loss"] = bce_loss(pv, valid[1])
            row["val_accuracy"] = accuracy(pv, valid[1])
        history.epochs.append(row)
        log.debug("%s epoch %d %s", model.name, epoch, row)
        if valid is not None and stopper is not None:
            if stopper.update(epoch, row["val_loss"], model.get_weights):
                history.stopped_early = True
                break
    if stopper is not None and stopper.best_weights is not None:
        model.set_weights(stopper.best_weights)
        history.best_epoch = stopper.best_epoch
    else:
        history.best_epoch = history.epochs_run
    history.wall_time = time.perf_counter() - t0
    return history
