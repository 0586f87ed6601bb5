"""Sequential network container and its on-disk format."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .layers import Layer, layer_from_config

FORMAT = "ensemble-ids/network"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


class Sequential:
    """A stack of layers ending in a single sigmoid probability."""

    def __init__(self, layers: list[Layer], input_shape: tuple, seed: int, name: str = "network"):
        self.layers = layers
        self.input_shape = tuple(input_shape)
        self.seed = int(seed)
        self.name = name
        rng = np.random.default_rng(seed)
        shape = self.input_shape
        for layer in layers:
            shape = layer.build(shape, rng)
        self.output_shape = shape

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1:] != self.input_shape:
            raise ValueError(f"{self.name}: expected input shape (batch,) + {self.input_shape}, got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dout: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def zero_grads(self):
        for layer in self.layers:
            layer.zero_grads()

    def named_params(self):
        """(name, param, grad) triples in a fixed order."""
        for i, layer in enumerate(self.layers):
            for key in layer.params:
                yield f"{i}.{layer.kind}.{key}", layer.params[key], layer.grads[key]

    def get_weights(self) -> list[np.ndarray]:
        return [p.copy() for _, p, _ in self.named_params()]

    def set_weights(self, weights: list[np.ndarray]) -> None:
        params = [p for _, p, _ in self.named_params()]
        if len(params) != len(weights):
            raise ValueError("weight list does not match the network")
        for p, w in zip(params, weights):
            if p.shape != w.shape:
                raise ValueError(f"weight shape {w.shape} does not match {p.shape}")
            p[...] = w

    def predict_proba(self, x: np.ndarray, batch_size: int = 4096) -> np.ndarray:
        out = np.empty(len(x))
        for start in range(0, len(x), batch_size):
            out[start:start + batch_size] = self.forward(x[start:start + batch_size])[:, 0]
        return out

    def n_params(self) -> int:
        return sum(p.size for _, p, _ in self.named_params())

    def config(self) -> dict:
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "seed": self.seed,
            "layers": [layer.config() for layer in self.layers],
        }

    def save(self, path, extra: dict | None = None) -> None:
        meta = {"format": FORMAT, "version": FORMAT_VERSION, "config": self.config(), "extra": extra or {}}
        arrays = {name: p for name, p, _ in self.named_params()}
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)

    @classmethod
    def load(cls, path) -> "Sequential":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"model file not found: {path}")
        with np.load(path, allow_pickle=False) as data:
            if "__meta__" not in data:
                raise ModelFormatError(f"{path}: missing metadata block")
            meta = json.loads(str(data["__meta__"]))
            if meta.get("format") != FORMAT or meta.get("version") != FORMAT_VERSION:
                raise ModelFormatError(
                    f"{path}: unsupported format {meta.get('format')!r} v{meta.get('version')}")
            cfg = meta["config"]
            net = cls([layer_from_config(c) for c in cfg["layers"]], tuple(cfg["input_shape"]),
                      cfg["seed"], cfg["name"])
            for name, p, _ in net.named_params():
                if name not in data or data[name].shape != p.shape:
                    raise ModelFormatError(f"{path}: parameter {name} missing or mis-shaped")
                p[...] = data[name]
        net.extra = meta.get("extra", {})
        return net
