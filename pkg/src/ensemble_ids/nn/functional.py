"""Elementwise activations and the binary cross-entropy loss."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BCE_EPSILON = 1e-7
ACTIVATIONS = ("leaky_relu", "elu", "sigmoid", "tanh", "linear")
DEFAULT_ALPHA = {"leaky_relu": 0.3, "elu": 1.0}


@dataclass(frozen=True)
class ActivationConfig:
    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.kind!r}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", DEFAULT_ALPHA.get(self.kind, 1.0))
        elif not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @classmethod
    def parse(cls, spec) -> "ActivationConfig":
        if isinstance(spec, ActivationConfig):
            return spec
        if isinstance(spec, str):
            return cls(spec)
        return cls(spec["kind"], spec.get("alpha"))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def activation_forward(x: np.ndarray, cfg: ActivationConfig) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    kind = cfg.kind
    if kind == "leaky_relu":
        return np.where(x >= 0, x, cfg.alpha * x)
    if kind == "elu":
        return np.where(x >= 0, x, cfg.alpha * np.expm1(np.minimum(x, 0.0)))
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "tanh":
        return np.tanh(x)
    return x.copy()


def activation_backward(x: np.ndarray, y: np.ndarray, dout: np.ndarray, cfg: ActivationConfig) -> np.ndarray:
    """Gradient wrt the pre-activation ``x`` given output ``y`` and upstream ``dout``."""
    kind = cfg.kind
    if kind == "leaky_relu":
        return dout * np.where(x >= 0, 1.0, cfg.alpha)
    if kind == "elu":
        # for x < 0, d/dx alpha*(e^x - 1) = y + alpha
        return dout * np.where(x >= 0, 1.0, y + cfg.alpha)
    if kind == "sigmoid":
        return dout * y * (1.0 - y)
    if kind == "tanh":
        return dout * (1.0 - y * y)
    return dout


def _check_pair(p, y):
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch: predictions {p.shape} vs targets {y.shape}")
    return p, y


def bce_loss(p, y) -> float:
    """Mean binary cross-entropy; ``p`` is clipped into [1e-7, 1 - 1e-7]."""
    p, y = _check_pair(p, y)
    p = np.clip(p, BCE_EPSILON, 1.0 - BCE_EPSILON)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def bce_grad(p, y) -> np.ndarray:
    """dL/dp of :func:`bce_loss`; zero where the clip is active."""
    p, y = _check_pair(p, y)
    inside = (p > BCE_EPSILON) & (p < 1.0 - BCE_EPSILON)
    pc = np.clip(p, BCE_EPSILON, 1.0 - BCE_EPSILON)
    return np.where(inside, (pc - y) / (pc * (1.0 - pc)), 0.0) / p.size


def sigmoid_bce_grad(p, y) -> np.ndarray:
    """dL/dz for a sigmoid output ``p = sigmoid(z)`` fed into BCE.

    Equal to ``bce_grad * p * (1 - p)`` wherever the clip is inactive, and
    keeps a useful gradient on saturated outputs.
    """
    p, y = _check_pair(p, y)
    return (p - y) / p.size
