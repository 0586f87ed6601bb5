import numpy as np
import pytest
from conftest import synthetic_records, write_lines
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_ids.dataset import (
    N_FIELDS,
    BinaryClass,
    ConnectionRecord,
    Dataset,
    MalformedRecordError,
    binarize_label,
    load_standard,
    parse_file,
    stratified_split,
    write_file,
)

LINE = ("0,tcp,http,SF,232,8153,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,5,5,0.2,0.2,0,0,1,0,0,"
        "30,255,1,0,0.03,0.04,0.03,0.01,0,0.01,normal,21")


def test_parse_single_line(tmp_path):
    path = tmp_path / "one.txt"
    path.write_text(LINE + "\n")
    ds = parse_file(path)
    rec = ds[0]
    assert len(ds) == 1
    assert rec.protocol_type == "tcp" and rec.service == "http" and rec.flag == "SF"
    assert rec.label == "normal" and rec.difficulty == 21
    assert rec.src_bytes == 232.0 and rec.dst_host_srv_rerror_rate == 0.01
    assert ds.split_tag == "custom"


def test_standard_file_name_sets_split_tag(tmp_path):
    path = tmp_path / "KDDTest-21.txt"
    path.write_text(LINE + "\n")
    assert parse_file(path).split_tag == "Test-21"
    assert load_standard("Test-21", tmp_path).split_tag == "Test-21"


def test_malformed_line_reports_number_and_count(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text(LINE + "\n" + ",".join(LINE.split(",")[:40]) + "\n")
    with pytest.raises(MalformedRecordError) as info:
        parse_file(path)
    assert info.value.line_number == 2
    assert info.value.field_count == 40
    assert "line 2" in str(info.value)


def test_non_numeric_field_is_malformed(tmp_path):
    fields = LINE.split(",")
    fields[4] = "lots"
    path = tmp_path / "bad.txt"
    path.write_text(",".join(fields) + "\n")
    with pytest.raises(MalformedRecordError, match="line 1"):
        parse_file(path)


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        parse_file("/nonexistent/KDDTrain+.txt")


def test_load_standard_without_directory(monkeypatch):
    monkeypatch.delenv("NSL_KDD_DIR", raising=False)
    with pytest.raises(FileNotFoundError, match="NSL_KDD_DIR"):
        load_standard("Train+")


def test_blank_lines_skipped_and_order_kept(tmp_path, synthetic_train):
    head = synthetic_train.subset(range(5))
    path = tmp_path / "x.txt"
    path.write_text("\n".join(r.to_line() for r in head) + "\n\n")
    assert [r.to_line() for r in parse_file(path)] == [r.to_line() for r in head]


def test_round_trip_is_exact(tmp_path, synthetic_test):
    path = write_lines(tmp_path / "t.txt", synthetic_test)
    back = parse_file(path)
    np.testing.assert_array_equal(back.numeric, synthetic_test.numeric)
    assert back.records == synthetic_test.records
    write_file(back, tmp_path / "t2.txt")
    assert (tmp_path / "t2.txt").read_text() == path.read_text()


finite = st.floats(min_value=0, max_value=1e12, allow_nan=False, allow_infinity=False)


@settings(max_examples=50)
@given(st.lists(finite, min_size=38, max_size=38), st.integers(0, 21))
def test_round_trip_property(numbers, difficulty):
    it = iter(numbers)
    feats = tuple("icmp" if i == 1 else "ecr_i" if i == 2 else "SF" if i == 3 else next(it)
                  for i in range(41))
    rec = ConnectionRecord(feats, "smurf", difficulty)
    line = rec.to_line()
    assert len(line.split(",")) == N_FIELDS
    assert ConnectionRecord.from_fields(line.split(",")) == rec


def test_record_validation():
    feats = list(ConnectionRecord.from_fields(LINE.split(",")).features)
    with pytest.raises(ValueError):
        ConnectionRecord(tuple(feats[:40]), "normal", 0)
    bad = feats.copy()
    bad[2] = ""
    with pytest.raises(ValueError):
        ConnectionRecord(tuple(bad), "normal", 0)
    bad = feats.copy()
    bad[0] = float("inf")
    with pytest.raises(ValueError):
        ConnectionRecord(tuple(bad), "normal", 0)
    with pytest.raises(ValueError):
        ConnectionRecord(tuple(feats), "", 0)


def test_binarize_label():
    assert binarize_label("normal") is BinaryClass.NORMAL
    assert binarize_label("neptune") is BinaryClass.ATTACK
    assert binarize_label("saint") is BinaryClass.ATTACK


@given(st.text(min_size=1))
def test_binarize_is_total(label):
    expected = BinaryClass.NORMAL if label == "normal" else BinaryClass.ATTACK
    assert binarize_label(label) is expected


def ten_records():
    recs = synthetic_records(40, 3)
    normal = [r for r in recs if r.label == "normal"][:5]
    attack = [r for r in recs if r.label != "normal"][:5]
    return Dataset.from_records(normal + attack)


def test_split_example():
    train, valid = stratified_split(ten_records(), 0.2, 7)
    assert valid.class_counts() == (1, 1)
    assert train.class_counts() == (4, 4)


def test_split_is_deterministic():
    ds = ten_records()
    a = stratified_split(ds, 0.2, 7)
    b = stratified_split(ds, 0.2, 7)
    assert a[0].records == b[0].records and a[1].records == b[1].records


@pytest.mark.parametrize("frac", [0.0, 1.0, -0.1, 1.5])
def test_split_fraction_out_of_range(frac):
    with pytest.raises(ValueError):
        stratified_split(ten_records(), frac, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 120), st.floats(0.01, 0.99), st.integers(0, 10_000))
def test_split_partitions_and_stratifies(n, frac, seed):
    ds = Dataset.from_records(synthetic_records(n, seed % 97))
    train, valid = stratified_split(ds, frac, seed)
    # union equals the input as a multiset
    lines = sorted(r.to_line() for r in ds)
    assert sorted([r.to_line() for r in train] + [r.to_line() for r in valid]) == lines
    for got, size in zip(valid.class_counts(), ds.class_counts()):
        assert abs(got - frac * size) <= 1


def test_split_parts_are_disjoint_and_ordered(synthetic_train):
    # tag every row with its position so membership is unambiguous
    ds = Dataset(synthetic_train.numeric.copy(), synthetic_train.categorical,
                 synthetic_train.labels, synthetic_train.difficulty)
    ds.numeric[:, 0] = np.arange(len(ds))
    train, valid = stratified_split(ds, 0.1, 0)
    t, v = train.numeric[:, 0], valid.numeric[:, 0]
    assert not set(t) & set(v)
    assert len(t) + len(v) == len(ds)
    assert np.all(np.diff(t) > 0) and np.all(np.diff(v) > 0)


def test_dataset_helpers(synthetic_train):
    head = synthetic_train.subset([0, 1, 2])
    both = head.concat(synthetic_train.subset([3]))
    assert len(both) == 4
    assert both.records == synthetic_train.records[:4]
    assert both.binary_labels().dtype == np.int8
    assert "n=4" in repr(both)
    with pytest.raises(ValueError):
        Dataset.from_records([], split_tag="Validation")
