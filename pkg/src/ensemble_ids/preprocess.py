"""Numericalization and min-max scaling of connection records.

Categorical columns are mapped to integer indices (sorted training-set
vocabulary), keeping the design matrix at 41 columns. Every column is then
scaled to [0, 1] with minima and maxima taken from the training set only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import (
    CATEGORICAL_COLUMNS,
    FEATURE_NAMES,
    N_FEATURES,
    NUMERIC_COLUMNS,
    Dataset,
)

SIDECAR_VERSION = 1
CNN_SIDE = 8


class SchemaError(ValueError):
    pass


@dataclass
class CategoryVocabulary:
    """Sorted distinct training values per categorical column.

    A value never seen at fit time maps to ``len(values)``, one past the last
    known index, which the scaler then clamps to 1.0.
    """

    values: dict[str, list[str]]

    def index(self, column: str, value: str) -> int:
        vals = self.values[column]
        lookup = self._lookup(column)
        return lookup.get(value, len(vals))

    def _lookup(self, column: str) -> dict[str, int]:
        cache = self.__dict__.setdefault("_cache", {})
        if column not in cache:
            cache[column] = {v: i for i, v in enumerate(self.values[column])}
        return cache[column]

    def encode(self, column: str, values: np.ndarray) -> np.ndarray:
        lookup = self._lookup(column)
        oov = len(self.values[column])
        return np.fromiter((lookup.get(v, oov) for v in values), dtype=np.float64, count=len(values))


@dataclass
class FeatureScaler:
    f_min: np.ndarray
    f_max: np.ndarray

    @classmethod
    def fit(cls, matrix: np.ndarray) -> "FeatureScaler":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] == 0:
            raise ValueError("cannot fit a scaler on an empty matrix")
        return cls(matrix.min(axis=0), matrix.max(axis=0))

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != len(self.f_min):
            raise SchemaError(f"expected {len(self.f_min)} columns, got shape {matrix.shape}")
        span = self.f_max - self.f_min
        constant = span == 0
        out = (matrix - self.f_min) / np.where(constant, 1.0, span)
        out[:, constant] = 0.0
        return np.clip(out, 0.0, 1.0)


@dataclass
class FeatureMatrix:
    values: np.ndarray  # (rows, 41), all in [0, 1]
    labels: np.ndarray  # (rows,) int8, 1 = attack

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != N_FEATURES:
            raise SchemaError(f"feature matrix must have {N_FEATURES} columns, got {self.values.shape}")
        if len(self.labels) != len(self.values):
            raise SchemaError("labels and rows disagree in length")

    def __len__(self):
        return len(self.values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass
class Preprocessor:
    """Fitted vocabulary + scaler pair, the state needed at inference time."""

    vocab: CategoryVocabulary
    scaler: FeatureScaler
    meta: dict = field(default_factory=dict)

    def transform(self, ds: Dataset) -> FeatureMatrix:
        return transform(ds, self.vocab, self.scaler)

    def save(self, path) -> None:
        payload = {
            "format": "ensemble-ids/preprocess",
            "version": SIDECAR_VERSION,
            "feature_names": list(FEATURE_NAMES),
            "vocabulary": self.vocab.values,
            "f_min": self.scaler.f_min.tolist(),
            "f_max": self.scaler.f_max.tolist(),
            "meta": self.meta,
        }
        Path(path).write_text(json.dumps(payload, indent=1))

    @classmethod
    def load(cls, path) -> "Preprocessor":
        payload = json.loads(Path(path).read_text())
        if payload.get("format") != "ensemble-ids/preprocess" or payload.get("version") != SIDECAR_VERSION:
            raise SchemaError(f"{path}: not a version-{SIDECAR_VERSION} preprocessing sidecar")
        if payload["feature_names"] != list(FEATURE_NAMES):
            raise SchemaError(f"{path}: feature layout differs from the NSL-KDD schema")
        scaler = FeatureScaler(np.array(payload["f_min"], dtype=np.float64),
                               np.array(payload["f_max"], dtype=np.float64))
        return cls(CategoryVocabulary(payload["vocabulary"]), scaler, payload.get("meta", {}))


def _numericalize(ds: Dataset, vocab: CategoryVocabulary) -> np.ndarray:
    out = np.empty((len(ds), N_FEATURES), dtype=np.float64)
    out[:, list(NUMERIC_COLUMNS)] = ds.numeric
    for j, col in enumerate(CATEGORICAL_COLUMNS):
        out[:, col] = vocab.encode(FEATURE_NAMES[col], ds.categorical[:, j])
    return out


def fit(train: Dataset) -> tuple[CategoryVocabulary, FeatureScaler]:
    if len(train) == 0:
        raise ValueError("cannot fit preprocessing on an empty dataset")
    vocab = CategoryVocabulary({
        FEATURE_NAMES[col]: sorted(set(train.categorical[:, j]))
        for j, col in enumerate(CATEGORICAL_COLUMNS)
    })
    return vocab, FeatureScaler.fit(_numericalize(train, vocab))


def fit_preprocessor(train: Dataset) -> Preprocessor:
    vocab, scaler = fit(train)
    return Preprocessor(vocab, scaler, {"fit_rows": len(train)})


def transform(ds: Dataset, vocab: CategoryVocabulary, scaler: FeatureScaler) -> FeatureMatrix:
    if ds.numeric.shape[1] != len(NUMERIC_COLUMNS) or ds.categorical.shape[1] != len(CATEGORICAL_COLUMNS):
        raise SchemaError("dataset does not follow the NSL-KDD column layout")
    values = scaler.transform(_numericalize(ds, vocab))
    return FeatureMatrix(values, ds.binary_labels())


def _check_cols(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values.values if isinstance(values, FeatureMatrix) else values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != N_FEATURES:
        raise SchemaError(f"expected {N_FEATURES} columns, got shape {values.shape}")
    return values


def reshape_for_cnn(m) -> np.ndarray:
    """(rows, 41) -> (rows, 8, 8, 1); cells 41..63 are zero padding."""
    values = _check_cols(m)
    padded = np.zeros((values.shape[0], CNN_SIDE * CNN_SIDE), dtype=np.float64)
    padded[:, :N_FEATURES] = values
    return padded.reshape(-1, CNN_SIDE, CNN_SIDE, 1)


def reshape_for_gru(m) -> np.ndarray:
    """(rows, 41) -> (rows, 41 timesteps, 1 feature)."""
    values = _check_cols(m)
    return values.reshape(values.shape[0], N_FEATURES, 1).copy()


def flatten_sequences(seq: np.ndarray) -> np.ndarray:
    if seq.ndim != 3 or seq.shape[1:] != (N_FEATURES, 1):
        raise SchemaError(f"expected (rows, {N_FEATURES}, 1) sequences, got {seq.shape}")
    return seq.reshape(seq.shape[0], N_FEATURES)
