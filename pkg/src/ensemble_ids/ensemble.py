"""Vote fusion, confusion matrices and the Acc/DR/FPR metrics.

Attack is the positive class throughout.
"""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from typing import NamedTuple

import numpy as np

from .dataset import BinaryClass


class DeciderLogic(str, enum.Enum):
    MAJORITY = "majority"
    OR = "or"


class VoteSet(NamedTuple):
    gru: BinaryClass
    cnn: BinaryClass
    rf: BinaryClass


class UndefinedMetricError(ZeroDivisionError):
    pass


def decide(v: VoteSet, logic: DeciderLogic | str) -> BinaryClass:
    logic = DeciderLogic(logic)
    attacks = sum(int(x) for x in v)
    if logic is DeciderLogic.OR:
        return BinaryClass.ATTACK if attacks > 0 else BinaryClass.NORMAL
    return BinaryClass.ATTACK if attacks >= 2 else BinaryClass.NORMAL


def decide_batch(gru: np.ndarray, cnn: np.ndarray, rf: np.ndarray, logic: DeciderLogic | str) -> np.ndarray:
    """Vectorized :func:`decide` over aligned vote arrays."""
    logic = DeciderLogic(logic)
    attacks = np.asarray(gru, np.int64) + np.asarray(cnn, np.int64) + np.asarray(rf, np.int64)
    need = 1 if logic is DeciderLogic.OR else 2
    return (attacks >= need).astype(np.int8)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(predicted, truth) -> ConfusionMatrix:
    p = np.asarray(predicted).astype(bool)
    t = np.asarray(truth).astype(bool)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} predictions vs {t.shape} labels")
    return ConfusionMatrix(
        tp=int(np.sum(p & t)),
        tn=int(np.sum(~p & ~t)),
        fp=int(np.sum(p & ~t)),
        fn=int(np.sum(~p & t)),
    )


def round_pct(x: float) -> float:
    """Two decimals, round-half-even on the decimal expansion of ``x``."""
    return float(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


@dataclass(frozen=True)
class MetricsReport:
    acc: float
    dr: float
    fpr: float
    confusion: ConfusionMatrix

    def rounded(self) -> dict:
        return {"acc": round_pct(self.acc), "dr": round_pct(self.dr), "fpr": round_pct(self.fpr)}

    def to_dict(self) -> dict:
        return {"acc": self.acc, "dr": self.dr, "fpr": self.fpr, "confusion": self.confusion.to_dict()}


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise UndefinedMetricError("accuracy undefined for an empty confusion matrix")
    return 100.0 * (cm.tn + cm.tp) / cm.total


def detection_rate(cm: ConfusionMatrix) -> float:
    if cm.tp + cm.fn == 0:
        raise UndefinedMetricError("detection rate undefined: no attack records")
    return 100.0 * cm.tp / (cm.tp + cm.fn)


def false_positive_rate(cm: ConfusionMatrix) -> float:
    if cm.fp + cm.tn == 0:
        raise UndefinedMetricError("false positive rate undefined: no normal records")
    return 100.0 * cm.fp / (cm.fp + cm.tn)


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    return MetricsReport(accuracy(cm), detection_rate(cm), false_positive_rate(cm), cm)


def render_confusion(cm: ConfusionMatrix, title: str = "") -> str:
    """Aligned text table: rows are true classes, columns predicted classes."""
    w = max(len(str(v)) for v in (cm.tn, cm.fp, cm.fn, cm.tp)) + 2
    w = max(w, len("Predicted Attack") + 2)
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'':<8}{'Predicted Normal':>{w}}{'Predicted Attack':>{w}}")
    lines.append(f"{'Normal':<8}{cm.tn:>{w}}{cm.fp:>{w}}")
    lines.append(f"{'Attack':<8}{cm.fn:>{w}}{cm.tp:>{w}}")
    return "\n".join(lines)


def render_report(report: MetricsReport, title: str = "") -> str:
    r = report.rounded()
    return (render_confusion(report.confusion, title)
            + f"\nAcc {r['acc']:.2f}%  DR {r['dr']:.2f}%  FPR {r['fpr']:.2f}%")


def reports_to_json(reports: dict[str, MetricsReport]) -> str:
    return json.dumps({name: rep.to_dict() for name, rep in reports.items()}, indent=2)
