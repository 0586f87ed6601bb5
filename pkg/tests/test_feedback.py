import json
import threading

import numpy as np
import pytest
from conftest import fast_configs

from ensemble_ids.dataset import BinaryClass, Dataset, stratified_split
from ensemble_ids.feedback import (
    EmptyQueueError,
    EnsembleService,
    FeedbackQueue,
    augment,
    find_duplication,
    relabel,
    retrain,
)
from ensemble_ids.pipeline import train_ensemble

A, N = BinaryClass.ATTACK, BinaryClass.NORMAL


@pytest.fixture(scope="module")
def base_ensemble(synthetic_train):
    train, valid = stratified_split(synthetic_train, 0.1, 0)
    return train_ensemble(train, valid, 0, fast_configs())


def test_queue_dedup(synthetic_test):
    q = FeedbackQueue()
    assert q.report_misclassification(synthetic_test[0], A)
    assert len(q) == 1
    assert not q.report_misclassification(synthetic_test[0], A)
    assert len(q) == 1
    assert q.report_misclassification(synthetic_test[1], N)
    assert len(q) == 2


def test_queue_rejects_non_records():
    with pytest.raises(TypeError):
        FeedbackQueue().report_misclassification("0,tcp,http", A)


def test_trigger(synthetic_train):
    q = FeedbackQueue(trigger=100)
    for i in range(99):
        q.report_misclassification(synthetic_train[i], A)
    assert not q.needs_retrain
    q.report_misclassification(synthetic_train[99], A)
    assert q.needs_retrain
    assert not FeedbackQueue().needs_retrain


def test_relabel_follows_truth(synthetic_test):
    rec = next(r for r in synthetic_test if r.label == "normal")
    assert relabel(rec, A).binary_label is A
    assert relabel(rec, N) is rec
    attack = next(r for r in synthetic_test if r.label != "normal")
    assert relabel(attack, N).label == "normal"
    assert relabel(attack, A) is attack


def test_queue_persists_and_replays(tmp_path, synthetic_test):
    path = tmp_path / "queue.jsonl"
    q = FeedbackQueue(path)
    q.report_misclassification(synthetic_test[0], A)
    q.report_misclassification(synthetic_test[1], N)
    again = FeedbackQueue(path)
    assert again.snapshot() == q.snapshot()
    again.drain(again.snapshot()[:1])
    third = FeedbackQueue(path)
    assert third.snapshot() == again.snapshot()
    assert len(third) == 1
    third.drain()
    assert len(FeedbackQueue(path)) == 0
    ops = [json.loads(line)["op"] for line in path.read_text().splitlines()]
    assert ops[:2] == ["add", "add"] and ops[-1] == "drain"


def test_augment_sizes(synthetic_train, synthetic_test):
    items = [(synthetic_test[0], A)]
    assert len(augment(synthetic_train, items)) == len(synthetic_train) + 1
    assert len(augment(synthetic_train, items, duplication=3)) == len(synthetic_train) + 3
    with pytest.raises(ValueError):
        augment(synthetic_train, items, duplication=0)


def test_augmented_multiset(synthetic_train, synthetic_test):
    q = FeedbackQueue()
    for i in range(5):
        q.report_misclassification(synthetic_test[i], A)
    q.report_misclassification(synthetic_test[0], A)
    aug = augment(synthetic_train, q.snapshot())
    expected = sorted(r.to_line() for r in synthetic_train) + [rec.to_line() for rec, _ in q.snapshot()]
    assert sorted(r.to_line() for r in aug) == sorted(expected)


def test_retrain_empty_queue(synthetic_train):
    with pytest.raises(EmptyQueueError):
        retrain(FeedbackQueue(), synthetic_train, fast_configs())


def test_retrain_grows_training_set_and_drains(synthetic_train, synthetic_test):
    q = FeedbackQueue()
    q.report_misclassification(synthetic_test[3], A)
    ens = retrain(q, synthetic_train, fast_configs(epochs=2, n_estimators=3), seed=5)
    train, _ = stratified_split(synthetic_train, 0.1, 5)
    assert ens.preprocessor.meta["fit_rows"] == len(train) + 1
    assert len(q) == 0
    assert set(ens.learners) == {"gru", "cnn", "rf"}


def test_failed_retrain_keeps_queue(synthetic_train, synthetic_test):
    q = FeedbackQueue()
    q.report_misclassification(synthetic_test[3], A)
    bad = fast_configs()
    bad.cnn.pooling = "median"
    with pytest.raises(ValueError):
        retrain(q, synthetic_train, bad)
    assert len(q) == 1


def test_memorization_oracle(base_ensemble, synthetic_train, synthetic_test):
    y = synthetic_test.binary_labels()
    wrong = np.flatnonzero(base_ensemble.predict(synthetic_test, "or") != y)
    assert len(wrong) > 0
    i = int(wrong[0])
    rec, truth = synthetic_test[i], BinaryClass(int(y[i]))
    k, ens = find_duplication(rec, truth, synthetic_train, fast_configs(), seed=1,
                              candidates=(1, 2, 4, 8, 16, 32))
    print(f"memorization oracle: record {i} fixed with k={k}")
    assert k is not None
    assert ens.predict(Dataset.from_records([rec]), "or")[0] == truth


def test_service_serves_old_models_during_retrain(base_ensemble, synthetic_train, synthetic_test):
    service = EnsembleService(base_ensemble, "or")
    before = service.predict(synthetic_test)
    weights = {k: [w.copy() for w in m.get_weights()]
               for k, m in base_ensemble.models.items() if k != "rf"}
    q = FeedbackQueue()
    q.report_misclassification(synthetic_test[0], A)

    gate = threading.Event()
    import ensemble_ids.feedback as fb
    real = fb.train_ensemble

    def slow_train(*args, **kwargs):
        gate.wait(30)
        return real(*args, **kwargs)

    fb.train_ensemble = slow_train
    try:
        future = service.retrain_async(q, synthetic_train, fast_configs(epochs=2, n_estimators=3), seed=2)
        # retraining is blocked; predictions still come from the original models
        for _ in range(3):
            np.testing.assert_array_equal(service.predict(synthetic_test), before)
            assert service.ensemble is base_ensemble
        gate.set()
        new = future.result(timeout=120)
    finally:
        fb.train_ensemble = real
        service.close()
    assert service.ensemble is new and service.generation == 1
    for k, ws in weights.items():
        for a, b in zip(base_ensemble.models[k].get_weights(), ws):
            np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(base_ensemble.predict(synthetic_test, "or"), before)


def test_service_keeps_models_when_retrain_fails(base_ensemble, synthetic_train, synthetic_test):
    service = EnsembleService(base_ensemble)
    q = FeedbackQueue()
    q.report_misclassification(synthetic_test[0], A)
    bad = fast_configs()
    bad.cnn.pooling = "median"
    future = service.retrain_async(q, synthetic_train, bad)
    with pytest.raises(ValueError):
        future.result(timeout=120)
    service.close()
    assert service.ensemble is base_ensemble and service.generation == 0
    assert len(q) == 1
