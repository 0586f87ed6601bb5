"""Experiment configuration, seeded repetitions, sweeps and result tables."""
from __future__ import annotations

import copy
import json
import logging
import math
import os
import statistics
import traceback
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import DATA_DIR_ENV, STANDARD_FILES, Dataset, parse_file, stratified_split
from .ensemble import ConfusionMatrix, DeciderLogic, confusion, decide_batch, metrics, render_confusion, round_pct
from .pipeline import LEARNERS, Ensemble, LearnerConfigs, train_ensemble

log = logging.getLogger(__name__)

REPORT_FILE = "report.json"
TABLE_FILE = "table.txt"
EVAL_SETS = ("train", "valid", "test", "test21")
SET_TITLES = {"train": "Train", "valid": "Valid", "test": "Test", "test21": "Test-21"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    data_dir: str | None = None
    train_file: str = STANDARD_FILES["Train+"]
    test_file: str | None = STANDARD_FILES["Test+"]
    test21_file: str | None = STANDARD_FILES["Test-21"]
    learners: list = field(default_factory=lambda: list(LEARNERS))
    models: LearnerConfigs = field(default_factory=LearnerConfigs)
    logic: str = "or"
    repetitions: int = 30
    base_seed: int = 0
    valid_fraction: float = 0.1
    concurrent: bool = True
    output_dir: str = "runs"

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        unknown = set(self.learners) - set(LEARNERS)
        if unknown or not self.learners:
            raise ConfigError(f"learners must be a non-empty subset of {LEARNERS}")
        DeciderLogic(self.logic)

    def resolve(self, name: str | None) -> Path | None:
        if name is None:
            return None
        p = Path(name)
        if not p.is_absolute() and self.data_dir:
            p = Path(self.data_dir) / p
        return p

    def check_paths(self) -> None:
        for attr in ("train_file", "test_file", "test21_file"):
            p = self.resolve(getattr(self, attr))
            if p is not None and not p.exists():
                raise ConfigError(f"{attr}: {p} does not exist")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["models"] = self.models.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        models = LearnerConfigs.from_dict(d.pop("models", {}))
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(models=models, **d)


def load_config(path=None, *, check_paths: bool = True, **overrides) -> ExperimentConfig:
    """Read a JSON config; ``$NSL_KDD_DIR`` overrides ``data_dir``."""
    d = json.loads(Path(path).read_text()) if path else {}
    d.update({k: v for k, v in overrides.items() if v is not None})
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        d["data_dir"] = env
    cfg = ExperimentConfig.from_dict(d)
    if check_paths:
        cfg.check_paths()
    return cfg


@dataclass
class ExperimentData:
    train: Dataset
    test: Dataset | None = None
    test21: Dataset | None = None

    @classmethod
    def load(cls, cfg: ExperimentConfig) -> "ExperimentData":
        def read(name):
            p = cfg.resolve(name)
            return parse_file(p) if p is not None else None
        return cls(read(cfg.train_file), read(cfg.test_file), read(cfg.test21_file))


def _aggregate(rows: list[dict]) -> dict:
    keys = sorted({k for r in rows if not r.get("error") for k in r["metrics"]})
    out = {}
    for k in keys:
        vals = [r["metrics"][k] for r in rows if not r.get("error") and k in r["metrics"]]
        out[k] = {
            "mean": statistics.fmean(vals),
            "std": statistics.stdev(vals) if len(vals) > 1 else 0.0,
            "n": len(vals),
        }
    return out


@dataclass
class ExperimentReport:
    config: dict
    rows: list[dict]
    aggregate: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.aggregate:
            self.aggregate = _aggregate(self.rows)

    @property
    def failed(self) -> list[int]:
        return [r["repetition"] for r in self.rows if r.get("error")]

    def mean(self, key: str) -> float:
        return self.aggregate[key]["mean"]

    def std(self, key: str) -> float:
        return self.aggregate[key]["std"]

    def to_dict(self) -> dict:
        return {"config": self.config, "rows": self.rows, "aggregate": self.aggregate}

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / REPORT_FILE).write_text(json.dumps(self.to_dict(), indent=1))
        (directory / TABLE_FILE).write_text(render_subsystem_table(self) + "\n")
        return directory / REPORT_FILE

    @classmethod
    def load(cls, path, tol: float = 1e-9) -> "ExperimentReport":
        d = json.loads(Path(path).read_text())
        report = cls(d["config"], d["rows"], d["aggregate"])
        fresh = _aggregate(report.rows)
        for k, v in fresh.items():
            stored = report.aggregate.get(k)
            if stored is None or any(not math.isclose(stored[s], v[s], rel_tol=0, abs_tol=tol)
                                     for s in ("mean", "std")):
                raise ValueError(f"{path}: aggregate for {k} disagrees with per-repetition rows")
        return report


def _evaluate_sets(ens: Ensemble, sets: dict[str, Dataset], row: dict) -> None:
    m, conf = row["metrics"], row["confusion"]
    for set_name, ds in sets.items():
        fm = ens.preprocessor.transform(ds)
        votes = ens.votes(fm)
        for learner, v in votes.items():
            cm = confusion(v, fm.labels)
            m[f"{learner}.{set_name}.acc"] = 100.0 * (cm.tp + cm.tn) / cm.total
            if set_name != "train":
                conf[f"{learner}.{set_name}"] = cm.to_dict()
                if cm.tp + cm.fn:
                    m[f"{learner}.{set_name}.dr"] = 100.0 * cm.tp / (cm.tp + cm.fn)
                if cm.fp + cm.tn:
                    m[f"{learner}.{set_name}.fpr"] = 100.0 * cm.fp / (cm.fp + cm.tn)
        if set(votes) == set(LEARNERS) and set_name != "train":
            for logic in DeciderLogic:
                cm = confusion(decide_batch(votes["gru"], votes["cnn"], votes["rf"], logic), fm.labels)
                key = f"ensemble.{logic.value}.{set_name}"
                conf[key] = cm.to_dict()
                m[f"{key}.acc"] = 100.0 * (cm.tp + cm.tn) / cm.total
                if cm.tp + cm.fn and cm.fp + cm.tn:
                    rep = metrics(cm)
                    m[f"{key}.dr"], m[f"{key}.fpr"] = rep.dr, rep.fpr


def run_repetition(cfg: ExperimentConfig, data: ExperimentData, repetition: int,
                   model_dir=None) -> dict:
    seed = cfg.base_seed + repetition
    row = {"repetition": repetition, "seed": seed, "metrics": {}, "confusion": {}, "error": None}
    try:
        train, valid = stratified_split(data.train, cfg.valid_fraction, seed)
        ens = train_ensemble(train, valid, seed, cfg.models, cfg.learners, cfg.concurrent)
        for learner in cfg.learners:
            row["metrics"][f"{learner}.train_time"] = ens.train_stats[learner]["wall_time"]
            epochs = ens.train_stats[learner].get("epochs_run")
            if epochs is not None:
                row["metrics"][f"{learner}.epochs"] = float(epochs)
        row["metrics"]["total_train_time"] = ens.train_stats["total_wall_time"]
        sets = {"train": train, "valid": valid}
        if data.test is not None:
            sets["test"] = data.test
        if data.test21 is not None:
            sets["test21"] = data.test21
        _evaluate_sets(ens, sets, row)
        if model_dir is not None:
            ens.save(Path(model_dir) / f"rep{repetition:03d}")
    except Exception as exc:  # recorded; the experiment carries on
        log.error("repetition %d failed: %s", repetition, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
        row["traceback"] = traceback.format_exc()
    return row


def run_experiment(cfg: ExperimentConfig, data: ExperimentData | None = None, *,
                   output_dir=None, save_models: bool = False) -> ExperimentReport:
    """Run ``cfg.repetitions`` seeded repetitions sequentially and aggregate them."""
    data = data or ExperimentData.load(cfg)
    out = Path(output_dir) if output_dir is not None else None
    rows = []
    for r in range(cfg.repetitions):
        log.info("repetition %d/%d (seed %d)", r + 1, cfg.repetitions, cfg.base_seed + r)
        model_dir = out / "models" if (out is not None and save_models) else None
        rows.append(run_repetition(cfg, data, r, model_dir))
    report = ExperimentReport(cfg.to_dict(), rows)
    if out is not None:
        report.save(out)
    return report


SWEEP_PARAMS = {
    "n_estimators": ("rf", "n_estimators"),
    "max_features": ("rf", "max_features"),
    "gru_units": ("gru", "units"),
    "gru_dense_units": ("gru", "dense"),
    "cnn_conv1_filters": ("cnn", "conv1_filters"),
    "cnn_conv2_filters": ("cnn", "conv2_filters"),
    "cnn_dense1": ("cnn", "dense1"),
    "cnn_dense2": ("cnn", "dense2"),
    "cnn_pooling": ("cnn", "pooling"),
    "learning_rate": (("gru", "cnn"), "learning_rate"),
    "batch_size": (("gru", "cnn"), "batch_size"),
    "epochs": (("gru", "cnn"), "epochs"),
    "patience": (("gru", "cnn"), "patience"),
}


def with_param(cfg: ExperimentConfig, param: str, value) -> ExperimentConfig:
    """Copy of ``cfg`` with one hyperparameter replaced.

    ``param`` is a name from ``SWEEP_PARAMS`` or a dotted ``learner.field``.
    """
    if param in SWEEP_PARAMS:
        learners, attr = SWEEP_PARAMS[param]
    elif "." in param and param.split(".", 1)[0] in LEARNERS:
        learners, attr = param.split(".", 1)
    else:
        raise ConfigError(f"unknown hyperparameter {param!r}; known: {sorted(SWEEP_PARAMS)}")
    learners = (learners,) if isinstance(learners, str) else learners
    new = copy.deepcopy(cfg)
    for learner in learners:
        target = getattr(new.models, learner)
        if not hasattr(target, attr):
            raise ConfigError(f"{learner} has no hyperparameter {attr!r}")
        if param == "gru_dense_units":
            act = target.dense[0].get("activation", "leaky_relu") if target.dense else "leaky_relu"
            value_ = [{"units": int(u), "activation": act} for u in np.atleast_1d(value)]
            setattr(target, attr, value_)
        else:
            setattr(target, attr, value)
    return new


def sweep(cfg: ExperimentConfig, param: str, values: list, data: ExperimentData | None = None,
          output_dir=None) -> list[ExperimentReport]:
    if not values:
        raise ConfigError("sweep needs at least one value")
    configs = [with_param(cfg, param, v) for v in values]  # validate names before any training
    data = data or ExperimentData.load(cfg)
    reports = []
    for v, c in zip(values, configs):
        sub = Path(output_dir) / f"{param}={v}" if output_dir is not None else None
        rep = run_experiment(c, data, output_dir=sub)
        rep.config["sweep"] = {"param": param, "value": v}
        reports.append(rep)
    if output_dir is not None:
        learner = SWEEP_PARAMS.get(param, (param.split(".")[0], None))[0]
        learner = learner if isinstance(learner, str) else cfg.learners[0]
        (Path(output_dir) / TABLE_FILE).write_text(
            render_sweep_table(reports, learner, param, values) + "\n")
    return reports


def _fmt(x, digits=3):
    return "-" if x is None else f"{x:.{digits}f}"


def _agg(report: ExperimentReport, key: str, stat: str):
    entry = report.aggregate.get(key)
    return None if entry is None else entry[stat]


def render_sweep_table(reports, learner: str, param: str, values) -> str:
    """Rows of mean/std accuracy per set plus learning time, one column per value."""
    header = [param] + [str(v) for v in values]
    rows = []
    for s in EVAL_SETS:
        for stat in ("mean", "std"):
            title = f"{SET_TITLES[s]} Acc {'Mean' if stat == 'mean' else 'Std.'}"
            rows.append([title] + [_fmt(_agg(r, f"{learner}.{s}.acc", stat), 3 if stat == "mean" else 4)
                                   for r in reports])
    rows.append(["Learning Dur.(s)"] + [_fmt(_agg(r, f"{learner}.train_time", "mean")) for r in reports])
    return _align([header] + rows)


def render_subsystem_table(report: ExperimentReport) -> str:
    """Per-learner mean accuracies and training time, plus fused results."""
    learners = report.config.get("learners", list(LEARNERS))
    rows = [["sub-sys", "Validation", "KDDTest+", "KDDTest-21", "Training time(s)"]]
    for learner in learners:
        rows.append([learner.upper()] + [
            _fmt(_agg(report, f"{learner}.{s}.acc", "mean"), 2) for s in ("valid", "test", "test21")
        ] + [_fmt(_agg(report, f"{learner}.train_time", "mean"), 2)])
    for logic in DeciderLogic:
        if _agg(report, f"ensemble.{logic.value}.valid.acc", "mean") is not None:
            rows.append([f"ensemble/{logic.value}"] + [
                _fmt(_agg(report, f"ensemble.{logic.value}.{s}.acc", "mean"), 2)
                for s in ("valid", "test", "test21")
            ] + [_fmt(_agg(report, "total_train_time", "mean"), 2)])
    text = _align(rows)
    n = len([r for r in report.rows if not r.get("error")])
    text += f"\n(mean over {n} repetition{'s' if n != 1 else ''}"
    if report.failed:
        text += f"; failed: {report.failed}"
    text += ")"
    last = next((r for r in reversed(report.rows) if not r.get("error")), None)
    if last is not None:
        logic = report.config.get("logic", "or")
        for s, title in (("test", "KDDTest+"), ("test21", "KDDTest-21")):
            cm = last["confusion"].get(f"ensemble.{logic}.{s}")
            if cm:
                text += "\n\n" + render_confusion(ConfusionMatrix(**cm),
                                                  f"{title} ({logic}, repetition {last['repetition']})")
    return text


def _align(rows: list[list[str]]) -> str:
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    return "\n".join(
        "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
        for r in rows)


def evaluate(model_dir, dataset_path, logic: DeciderLogic | str = DeciderLogic.OR) -> dict:
    """Load a saved ensemble and score it on one NSL-KDD file.

    Returns per-learner and fused metric reports keyed by name.
    """
    ens = Ensemble.load(model_dir)
    ds = parse_file(dataset_path)
    fm = ens.preprocessor.transform(ds)
    votes = ens.votes(fm)
    out = {name: metrics(confusion(v, fm.labels)) for name, v in votes.items()}
    if set(votes) == set(LEARNERS):
        logic = DeciderLogic(logic)
        fused = decide_batch(votes["gru"], votes["cnn"], votes["rf"], logic)
        out[f"ensemble.{logic.value}"] = metrics(confusion(fused, fm.labels))
    return out


__all__ = [
    "ConfigError", "ExperimentConfig", "ExperimentData", "ExperimentReport", "evaluate",
    "load_config", "render_subsystem_table", "render_sweep_table", "round_pct",
    "run_experiment", "sweep", "with_param",
]
