"""Operator-reported misclassifications and full retraining on the augmented set."""
from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .dataset import BinaryClass, ConnectionRecord, Dataset, N_FIELDS, stratified_split
from .ensemble import DeciderLogic
from .pipeline import Ensemble, LearnerConfigs, train_ensemble

log = logging.getLogger(__name__)


class EmptyQueueError(RuntimeError):
    pass


def relabel(rec: ConnectionRecord, truth: BinaryClass) -> ConnectionRecord:
    """Make the record's label agree with the reported truth."""
    truth = BinaryClass(truth)
    if truth is BinaryClass.NORMAL:
        return rec if rec.label == "normal" else replace(rec, label="normal")
    return rec if rec.label != "normal" else replace(rec, label="attack")


class FeedbackQueue:
    """Pending (record, truth) reports, deduplicated on the relabelled record.

    With a ``path`` every report is appended to a JSON-lines log, and a
    ``drain`` marker is appended once the reports have been consumed, so the
    queue survives restarts.
    """

    def __init__(self, path=None, trigger: int | None = None):
        self.path = Path(path) if path is not None else None
        self.trigger = trigger
        self.pending: list[tuple[ConnectionRecord, BinaryClass]] = []
        self._seen: set[ConnectionRecord] = set()
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._replay()

    def _replay(self):
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                entry = json.loads(line)
                if entry["op"] == "drain":
                    self.pending.clear()
                    self._seen.clear()
                else:
                    rec = ConnectionRecord.from_fields(entry["record"].split(","))
                    self._add(rec, BinaryClass[entry["truth"].upper()])

    def _append_log(self, entry: dict):
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")

    def _add(self, rec, truth) -> bool:
        rec = relabel(rec, truth)
        if rec in self._seen:
            return False
        self._seen.add(rec)
        self.pending.append((rec, BinaryClass(truth)))
        return True

    def report_misclassification(self, rec: ConnectionRecord, truth: BinaryClass) -> bool:
        """Queue a record; returns False if an identical report is already pending."""
        if not isinstance(rec, ConnectionRecord):
            raise TypeError("expected a ConnectionRecord")
        if len(rec.to_line().split(",")) != N_FIELDS:
            raise ValueError("record does not follow the NSL-KDD schema")
        with self._lock:
            added = self._add(rec, truth)
            if added:
                self._append_log({"op": "add", "record": rec.to_line(),
                                  "truth": BinaryClass(truth).name.lower()})
        return added

    def __len__(self) -> int:
        return len(self.pending)

    @property
    def needs_retrain(self) -> bool:
        return self.trigger is not None and len(self.pending) >= self.trigger

    def snapshot(self) -> list[tuple[ConnectionRecord, BinaryClass]]:
        with self._lock:
            return list(self.pending)

    def drain(self, items=None) -> None:
        """Drop ``items`` (default: everything) from the queue."""
        with self._lock:
            if items is None:
                self.pending.clear()
                self._seen.clear()
            else:
                taken = {rec for rec, _ in items}
                self.pending = [(r, t) for r, t in self.pending if r not in taken]
                self._seen -= taken
            if self.path is not None:
                if self.pending:
                    # rewrite so the log reflects what is still pending
                    lines = [json.dumps({"op": "drain"})] + [
                        json.dumps({"op": "add", "record": r.to_line(), "truth": t.name.lower()})
                        for r, t in self.pending]
                    with open(self.path, "a", encoding="utf-8") as fh:
                        fh.write("\n".join(lines) + "\n")
                else:
                    self._append_log({"op": "drain"})


def augment(base: Dataset, items, duplication: int = 1) -> Dataset:
    """``base`` followed by each queued record repeated ``duplication`` times."""
    if duplication < 1:
        raise ValueError("duplication must be >= 1")
    extra = [rec for rec, _ in items for _ in range(duplication)]
    if not extra:
        return base
    return base.concat(Dataset.from_records(extra))


def retrain(queue: FeedbackQueue, base: Dataset, configs: LearnerConfigs | None = None, *,
            seed: int = 0, valid_fraction: float = 0.1, duplication: int = 1,
            concurrent: bool = True) -> Ensemble:
    """Retrain all three learners from scratch on ``base`` plus the queued reports.

    Preprocessing is re-fit on the augmented set. The queue is drained only
    after training succeeds; on failure it is left untouched.
    """
    items = queue.snapshot()
    if not items:
        raise EmptyQueueError("feedback queue is empty; nothing to retrain on")
    if duplication < 1:
        raise ValueError("duplication must be >= 1")
    extra = Dataset.from_records([rec for rec, _ in items for _ in range(duplication)])
    # validation comes from the base set only; every reported copy is trained on
    train, valid = stratified_split(base, valid_fraction, seed)
    train = train.concat(extra)
    ensemble = train_ensemble(train, valid, seed, configs, concurrent=concurrent)
    queue.drain(items)
    return ensemble


def find_duplication(rec: ConnectionRecord, truth: BinaryClass, base: Dataset,
                     configs: LearnerConfigs | None = None, *, seed: int = 0,
                     candidates=(1, 2, 4, 8, 16, 32, 64), logic: DeciderLogic | str = DeciderLogic.OR,
                     valid_fraction: float = 0.1, concurrent: bool = True):
    """Smallest duplication factor after which retraining classifies ``rec`` as ``truth``.

    Tries ``candidates`` in order with a throwaway queue per attempt and
    returns ``(k, ensemble)``, or ``(None, last_ensemble)`` if none worked.
    """
    truth = BinaryClass(truth)
    probe = Dataset.from_records([relabel(rec, truth)])
    ensemble = None
    for k in candidates:
        q = FeedbackQueue()
        q.report_misclassification(rec, truth)
        ensemble = retrain(q, base, configs, seed=seed, valid_fraction=valid_fraction,
                           duplication=k, concurrent=concurrent)
        if int(ensemble.predict(probe, logic)[0]) == truth:
            return k, ensemble
    return None, ensemble


class EnsembleService:
    """Serves predictions while retraining happens in the background.

    The model reference is swapped in one assignment under a lock, so a
    caller always sees either the old or the new ensemble, never a mix.
    """

    def __init__(self, ensemble: Ensemble, logic: DeciderLogic | str = DeciderLogic.OR):
        self._ensemble = ensemble
        self.logic = DeciderLogic(logic)
        self._lock = threading.Lock()
        self._executor = ThreadPoolExecutor(1)
        self.generation = 0

    @property
    def ensemble(self) -> Ensemble:
        with self._lock:
            return self._ensemble

    def predict(self, data):
        return self.ensemble.predict(data, self.logic)

    def swap(self, ensemble: Ensemble) -> None:
        with self._lock:
            self._ensemble = ensemble
            self.generation += 1

    def retrain_async(self, queue: FeedbackQueue, base: Dataset, configs=None, **kwargs) -> Future:
        def job():
            try:
                new = retrain(queue, base, configs, **kwargs)
            except Exception:
                log.exception("retraining failed; keeping the current models")
                raise
            self.swap(new)
            return new
        return self._executor.submit(job)

    def close(self):
        self._executor.shutdown(wait=True)
