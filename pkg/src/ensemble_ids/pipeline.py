"""End-to-end ensemble: preprocessing plus the three learners.

A trained :class:`Ensemble` is immutable from the caller's point of view and
safe to share between threads for inference.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import cnn_classifier, forest, gru_classifier
from .cnn_classifier import CnnConfig
from .dataset import Dataset
from .ensemble import DeciderLogic, decide_batch
from .gru_classifier import GruConfig
from .nn import Sequential
from .preprocess import FeatureMatrix, Preprocessor, fit_preprocessor, reshape_for_cnn, reshape_for_gru

LEARNERS = ("gru", "cnn", "rf")
MANIFEST = "manifest.json"
MANIFEST_VERSION = 1
FILES = {"gru": "gru.npz", "cnn": "cnn.npz", "rf": "rf.json", "preprocess": "preprocess.json"}


@dataclass
class RfConfig:
    n_estimators: int = 60
    max_features: int | str | None = None
    n_jobs: int = 1


@dataclass
class LearnerConfigs:
    gru: GruConfig = field(default_factory=GruConfig)
    cnn: CnnConfig = field(default_factory=CnnConfig)
    rf: RfConfig = field(default_factory=RfConfig)

    def to_dict(self) -> dict:
        return {"gru": asdict(self.gru), "cnn": asdict(self.cnn), "rf": asdict(self.rf)}

    @classmethod
    def from_dict(cls, d: dict) -> "LearnerConfigs":
        return cls(GruConfig(**d.get("gru", {})), CnnConfig(**d.get("cnn", {})), RfConfig(**d.get("rf", {})))


def learner_seed(seed: int, learner: str) -> int:
    return int(np.random.SeedSequence([seed, LEARNERS.index(learner)]).generate_state(1)[0])


@dataclass
class Ensemble:
    preprocessor: Preprocessor
    models: dict  # learner name -> Sequential | RandomForest
    seed: int = 0
    train_stats: dict = field(default_factory=dict)

    @property
    def learners(self) -> tuple[str, ...]:
        return tuple(name for name in LEARNERS if name in self.models)

    def features(self, data) -> FeatureMatrix:
        return data if isinstance(data, FeatureMatrix) else self.preprocessor.transform(data)

    def votes(self, data) -> dict[str, np.ndarray]:
        fm = self.features(data)
        out = {}
        if "gru" in self.models:
            out["gru"] = gru_classifier.predict(self.models["gru"], reshape_for_gru(fm))
        if "cnn" in self.models:
            out["cnn"] = cnn_classifier.predict(self.models["cnn"], reshape_for_cnn(fm))
        if "rf" in self.models:
            out["rf"] = self.models["rf"].predict(fm.values)
        return out

    def predict(self, data, logic: DeciderLogic | str = DeciderLogic.OR) -> np.ndarray:
        v = self.votes(data)
        missing = [name for name in LEARNERS if name not in v]
        if missing:
            raise ValueError(f"fusion needs all three learners; missing {missing}")
        return decide_batch(v["gru"], v["cnn"], v["rf"], logic)

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.preprocessor.save(directory / FILES["preprocess"])
        for name in self.learners:
            model = self.models[name]
            if name == "rf":
                model.save(directory / FILES[name])
            else:
                model.save(directory / FILES[name], extra={"seed": model.seed})
        manifest = {"format": "ensemble-ids/ensemble", "version": MANIFEST_VERSION,
                    "learners": list(self.learners), "seed": self.seed,
                    "train_stats": self.train_stats}
        (directory / MANIFEST).write_text(json.dumps(manifest, indent=2))

    @classmethod
    def load(cls, directory) -> "Ensemble":
        directory = Path(directory)
        path = directory / MANIFEST
        if not path.exists():
            raise FileNotFoundError(f"model file not found: {path}")
        manifest = json.loads(path.read_text())
        if manifest.get("version") != MANIFEST_VERSION:
            raise ValueError(f"{path}: unsupported ensemble version {manifest.get('version')}")
        pre_path = directory / FILES["preprocess"]
        if not pre_path.exists():
            raise FileNotFoundError(f"model file not found: {pre_path}")
        models = {}
        for name in manifest["learners"]:
            p = directory / FILES[name]
            models[name] = forest.RandomForest.load(p) if name == "rf" else Sequential.load(p)
        return cls(Preprocessor.load(pre_path), models, manifest.get("seed", 0),
                   manifest.get("train_stats", {}))


def _train_one(name, fm_train, fm_valid, seed, cfg: LearnerConfigs):
    t0 = time.perf_counter()
    s = learner_seed(seed, name)
    yv = fm_valid.labels if fm_valid is not None else None
    if name == "gru":
        model, stats = gru_classifier.train(
            reshape_for_gru(fm_train), fm_train.labels,
            reshape_for_gru(fm_valid) if fm_valid is not None else None, yv, s, cfg.gru)
        info = stats.to_dict()
    elif name == "cnn":
        model, stats = cnn_classifier.train(
            reshape_for_cnn(fm_train), fm_train.labels,
            reshape_for_cnn(fm_valid) if fm_valid is not None else None, yv, s, cfg.cnn)
        info = stats.to_dict()
    else:
        model = forest.fit(fm_train.values, fm_train.labels, cfg.rf.n_estimators, s,
                           max_features=cfg.rf.max_features, n_jobs=cfg.rf.n_jobs)
        info = {}
    info["wall_time"] = time.perf_counter() - t0
    info["seed"] = s
    return model, info


def train_ensemble(train: Dataset, valid: Dataset | None, seed: int,
                   cfg: LearnerConfigs | None = None, learners=LEARNERS,
                   concurrent: bool = True) -> Ensemble:
    """Fit preprocessing on ``train`` and train the requested learners.

    With ``concurrent`` the learners train on separate threads; each one
    draws only from its own derived seed, so results do not depend on
    scheduling.
    """
    cfg = cfg or LearnerConfigs()
    pre = fit_preprocessor(train)
    fm_train = pre.transform(train)
    fm_valid = pre.transform(valid) if valid is not None and len(valid) else None
    t0 = time.perf_counter()
    if concurrent and len(learners) > 1:
        with ThreadPoolExecutor(len(learners)) as pool:
            futures = {name: pool.submit(_train_one, name, fm_train, fm_valid, seed, cfg) for name in learners}
            results = {name: f.result() for name, f in futures.items()}
    else:
        results = {name: _train_one(name, fm_train, fm_valid, seed, cfg) for name in learners}
    stats = {name: info for name, (_, info) in results.items()}
    stats["total_wall_time"] = time.perf_counter() - t0
    return Ensemble(pre, {name: model for name, (model, _) in results.items()}, seed, stats)
