"""NSL-KDD ingestion: typed records, file parsing and the validation split."""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

FEATURE_NAMES = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in",
    "num_compromised", "root_shell", "su_attempted", "num_root",
    "num_file_creations", "num_shells", "num_access_files", "num_outbound_cmds",
    "is_host_login", "is_guest_login", "count", "srv_count", "serror_rate",
    "srv_serror_rate", "rerror_rate", "srv_rerror_rate", "same_srv_rate",
    "diff_srv_rate", "srv_diff_host_rate", "dst_host_count", "dst_host_srv_count",
    "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate", "dst_host_srv_serror_rate", "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
)
N_FEATURES = len(FEATURE_NAMES)  # 41
CATEGORICAL_COLUMNS = (1, 2, 3)
NUMERIC_COLUMNS = tuple(i for i in range(N_FEATURES) if i not in CATEGORICAL_COLUMNS)
N_FIELDS = N_FEATURES + 2  # label + difficulty

SPLIT_TAGS = ("Train+", "Test+", "Test-21", "custom")
STANDARD_FILES = {
    "Train+": "KDDTrain+.txt",
    "Test+": "KDDTest+.txt",
    "Test-21": "KDDTest-21.txt",
}
DATA_DIR_ENV = "NSL_KDD_DIR"


class BinaryClass(enum.IntEnum):
    NORMAL = 0
    ATTACK = 1


class MalformedRecordError(ValueError):
    """A line in an NSL-KDD file does not follow the 43-field layout."""

    def __init__(self, line_number: int, field_count: int, reason: str = ""):
        self.line_number = line_number
        self.field_count = field_count
        msg = f"line {line_number}: expected {N_FIELDS} fields, got {field_count}"
        if reason:
            msg = f"line {line_number}: {reason} ({field_count} fields)"
        super().__init__(msg)


def binarize_label(label: str) -> BinaryClass:
    return BinaryClass.NORMAL if label == "normal" else BinaryClass.ATTACK


@dataclass(frozen=True)
class ConnectionRecord:
    """One NSL-KDD row.

    ``features`` holds the 41 raw values in file order: floats for numeric
    columns, strings for ``protocol_type``, ``service`` and ``flag``.
    """

    features: tuple
    label: str
    difficulty: int

    def __post_init__(self):
        if len(self.features) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} features, got {len(self.features)}")
        for i, v in enumerate(self.features):
            if i in CATEGORICAL_COLUMNS:
                if not isinstance(v, str) or not v:
                    raise ValueError(f"categorical field {FEATURE_NAMES[i]} must be a non-empty string")
            elif not math.isfinite(v):
                raise ValueError(f"numeric field {FEATURE_NAMES[i]} is not finite: {v!r}")
        if not self.label:
            raise ValueError("label must be non-empty")

    @property
    def binary_label(self) -> BinaryClass:
        return binarize_label(self.label)

    def __getattr__(self, name):
        if name.startswith("_") or name == "features":
            raise AttributeError(name)
        try:
            return self.features[FEATURE_NAMES.index(name)]
        except ValueError:
            raise AttributeError(name) from None

    @classmethod
    def from_fields(cls, fields: Sequence[str]) -> "ConnectionRecord":
        if len(fields) != N_FIELDS:
            raise ValueError(f"expected {N_FIELDS} fields, got {len(fields)}")
        feats = tuple(
            f.strip() if i in CATEGORICAL_COLUMNS else float(f)
            for i, f in enumerate(fields[:N_FEATURES])
        )
        return cls(feats, fields[N_FEATURES].strip(), int(float(fields[N_FEATURES + 1])))

    def to_line(self) -> str:
        parts = [v if isinstance(v, str) else _format_number(v) for v in self.features]
        parts += [self.label, str(self.difficulty)]
        return ",".join(parts)


def _format_number(v: float) -> str:
    # repr round-trips float64 exactly; integral values keep the file's style
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


class Dataset:
    """Ordered collection of connection records, stored column-wise.

    Iterating yields :class:`ConnectionRecord` objects in file order; the
    numeric block, the categorical block and the labels are also available
    as arrays for the preprocessing stage.
    """

    def __init__(self, numeric: np.ndarray, categorical: np.ndarray,
                 labels: np.ndarray, difficulty: np.ndarray, split_tag: str = "custom"):
        if split_tag not in SPLIT_TAGS:
            raise ValueError(f"unknown split tag {split_tag!r}")
        n = len(labels)
        numeric = np.asarray(numeric, dtype=np.float64).reshape(n, len(NUMERIC_COLUMNS))
        categorical = np.asarray(categorical, dtype=object).reshape(n, len(CATEGORICAL_COLUMNS))
        if len(difficulty) != n:
            raise ValueError("difficulty length does not match labels")
        self.numeric = numeric
        self.categorical = categorical
        self.labels = np.asarray(labels, dtype=object)
        self.difficulty = np.asarray(difficulty, dtype=np.int64)
        self.split_tag = split_tag

    @classmethod
    def from_records(cls, records: Sequence[ConnectionRecord], split_tag: str = "custom") -> "Dataset":
        records = list(records)
        numeric = np.array([[r.features[i] for i in NUMERIC_COLUMNS] for r in records],
                           dtype=np.float64).reshape(len(records), len(NUMERIC_COLUMNS))
        categorical = np.empty((len(records), len(CATEGORICAL_COLUMNS)), dtype=object)
        for row, r in enumerate(records):
            for j, i in enumerate(CATEGORICAL_COLUMNS):
                categorical[row, j] = r.features[i]
        labels = np.array([r.label for r in records], dtype=object)
        difficulty = np.array([r.difficulty for r in records], dtype=np.int64)
        return cls(numeric, categorical, labels, difficulty, split_tag)

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i: int) -> ConnectionRecord:
        feats = [None] * N_FEATURES
        for j, col in enumerate(NUMERIC_COLUMNS):
            feats[col] = float(self.numeric[i, j])
        for j, col in enumerate(CATEGORICAL_COLUMNS):
            feats[col] = self.categorical[i, j]
        return ConnectionRecord(tuple(feats), self.labels[i], int(self.difficulty[i]))

    def __iter__(self) -> Iterator[ConnectionRecord]:
        for i in range(len(self)):
            yield self[i]

    @property
    def records(self) -> list[ConnectionRecord]:
        return list(self)

    def binary_labels(self) -> np.ndarray:
        return (self.labels != "normal").astype(np.int8)

    def subset(self, indices, split_tag: str = "custom") -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.numeric[idx], self.categorical[idx], self.labels[idx],
                       self.difficulty[idx], split_tag)

    def concat(self, other: "Dataset", split_tag: str = "custom") -> "Dataset":
        return Dataset(
            np.concatenate([self.numeric, other.numeric]),
            np.concatenate([self.categorical, other.categorical]),
            np.concatenate([self.labels, other.labels]),
            np.concatenate([self.difficulty, other.difficulty]),
            split_tag,
        )

    def class_counts(self) -> tuple[int, int]:
        y = self.binary_labels()
        n_attack = int(y.sum())
        return len(y) - n_attack, n_attack

    def __repr__(self):
        normal, attack = self.class_counts()
        return f"Dataset({self.split_tag}, n={len(self)}, normal={normal}, attack={attack})"


def parse_file(path, split_tag: str | None = None) -> Dataset:
    """Read an NSL-KDD text file (43 comma-separated fields per line, no header)."""
    path = Path(path)
    if split_tag is None:
        split_tag = next((tag for tag, name in STANDARD_FILES.items() if name == path.name), "custom")
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != N_FIELDS:
                raise MalformedRecordError(lineno, len(fields))
            try:
                records.append(ConnectionRecord.from_fields(fields))
            except ValueError as exc:
                raise MalformedRecordError(lineno, len(fields), str(exc)) from exc
    return Dataset.from_records(records, split_tag)


def write_file(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in ds:
            fh.write(rec.to_line())
            fh.write("\n")


def data_dir(default=None) -> Path | None:
    value = os.environ.get(DATA_DIR_ENV, default)
    return Path(value) if value else None


def load_standard(split_tag: str, directory=None) -> Dataset:
    directory = Path(directory) if directory is not None else data_dir()
    if directory is None:
        raise FileNotFoundError(f"no dataset directory given and ${DATA_DIR_ENV} is unset")
    return parse_file(directory / STANDARD_FILES[split_tag], split_tag)


def stratified_split(ds: Dataset, valid_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split into (train, valid) with per-class proportions preserved.

    Each class contributes ``round(valid_fraction * class_size)`` records to
    the validation part. Both parts keep the input's relative order.
    """
    if not 0.0 < valid_fraction < 1.0:
        raise ValueError(f"valid_fraction must lie in (0, 1), got {valid_fraction}")
    rng = np.random.default_rng(seed)
    y = ds.binary_labels()
    valid_mask = np.zeros(len(ds), dtype=bool)
    for cls in (BinaryClass.NORMAL, BinaryClass.ATTACK):
        members = np.flatnonzero(y == cls)
        k = int(round(valid_fraction * len(members)))
        chosen = rng.permutation(members)[:k]
        valid_mask[chosen] = True
    return ds.subset(np.flatnonzero(~valid_mask)), ds.subset(np.flatnonzero(valid_mask))
