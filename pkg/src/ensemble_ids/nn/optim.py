"""Adam with bias correction."""
from __future__ import annotations

import numpy as np


class NonFiniteGradientError(FloatingPointError):
    pass


class Adam:
    def __init__(self, learning_rate: float = 0.006, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8):
        if not learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < beta1 < 1 and 0 < beta2 < 1):
            raise ValueError("betas must lie in (0, 1)")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, named_params) -> None:
        """Update ``(name, param, grad)`` triples in place."""
        named_params = list(named_params)
        for name, _, g in named_params:
            if not np.all(np.isfinite(g)):
                bad = int(np.size(g) - np.count_nonzero(np.isfinite(g)))
                raise NonFiniteGradientError(
                    f"non-finite gradient for {name} at step {self.step_count + 1} ({bad} entries)")
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for name, p, g in named_params:
            m = self.m.get(name)
            if m is None:
                m = self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.epsilon)

    def config(self) -> dict:
        return {"learning_rate": self.learning_rate, "beta1": self.beta1,
                "beta2": self.beta2, "epsilon": self.epsilon}
