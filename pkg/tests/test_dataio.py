import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcert.dataio import (
    CSV_HEADER,
    DatasetError,
    dump_dataset,
    load_dataset,
    parse_dataset,
    report_csv,
    report_json,
    save_dataset,
    save_report,
    synth_gaussian,
)
from fcert.evaluation import EvalConfig, run_benchmark

VALID = ['{"id": "a", "label": "cat", "features": [1, 2, 3]}',
         '{"id": "b", "label": "dog", "features": [4.5, 5, 6]}']


def test_two_valid_lines():
    ds = parse_dataset(VALID)
    assert len(ds) == 2 and ds.dim == 3
    assert ds.label_names == ["cat", "dog"] and ds.labels.tolist() == [0, 1]


def test_mixed_dims_names_line_two():
    bad = [VALID[0], '{"id": "b", "label": "dog", "features": [1, 2, 3, 4]}']
    with pytest.raises(DatasetError, match=r":2:.*'b'.*dimension 4"):
        parse_dataset(bad)


@pytest.mark.parametrize("line,pattern", [
    ('{"id": "x", "label": "c", "features": [1, NaN, 3]}', "non-finite"),
    ('{"id": "x", "label": "c", "features": [1, Infinity, 3]}', "non-finite"),
    ('{"id": "x", "label": "", "features": [1, 2, 3]}', "label"),
    ('{"id": "x", "label": "c", "features": []}', "features"),
    ('{"id": "x", "label": "c", "features": [1, "2", 3]}', "features"),
    ('{"id": 5, "label": "c", "features": [1]}', "id"),
    ('{"id": "x", "label": "c", ', "invalid JSON"),
    ('[1, 2]', "JSON object"),
])
def test_rejections(line, pattern):
    with pytest.raises(DatasetError, match=pattern):
        parse_dataset([VALID[0], line])


def test_meta_header_dim_enforced():
    with pytest.raises(DatasetError, match="expected 4"):
        parse_dataset(['{"_meta": {"dim": 4}}', VALID[0]])
    with pytest.raises(DatasetError, match="first record"):
        parse_dataset([VALID[0], '{"_meta": {"dim": 3}}'])


def test_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="cannot read"):
        load_dataset(tmp_path / "nope.jsonl")


def test_round_trip_bytes(tmp_path):
    ds = synth_gaussian(3, 4, 5, 2.0, 0.3, seed=1)
    path = tmp_path / "d.jsonl"
    save_dataset(ds, path)
    again = load_dataset(path)
    assert dump_dataset(again) == path.read_text()
    assert np.array_equal(again.features, ds.features) and again.ids == ds.ids


@settings(max_examples=300)
@given(st.lists(st.text(max_size=60), max_size=4))
def test_fuzz_only_structured_errors(lines):
    try:
        parse_dataset(lines)
    except DatasetError:
        pass


@settings(max_examples=100)
@given(st.lists(st.fixed_dictionaries({
    "id": st.one_of(st.text(max_size=3), st.integers()),
    "label": st.one_of(st.text(max_size=3), st.none()),
    "features": st.lists(st.one_of(st.floats(), st.integers(), st.text(max_size=2)), max_size=3),
}), max_size=4))
def test_fuzz_records(records):
    try:
        parse_dataset([json.dumps(r) for r in records])
    except DatasetError:
        pass


def test_synth_sigma_zero_hits_means():
    ds = synth_gaussian(4, 5, 6, 3.0, 0.0, seed=2)
    for c in range(4):
        rows = ds.features[ds.labels == c]
        assert np.all(rows == rows[0])
        assert np.linalg.norm(rows[0]) == pytest.approx(3.0)


def test_synth_means_spread():
    ds = synth_gaussian(6, 1, 8, 1.0, 0.0, seed=4)
    dots = ds.features @ ds.features.T
    assert np.all(dots[~np.eye(6, dtype=bool)] < 0.5)


def test_synth_deterministic():
    assert dump_dataset(synth_gaussian(3, 3, 4, 5, 0.1, 9)) == dump_dataset(synth_gaussian(3, 3, 4, 5, 0.1, 9))
    assert dump_dataset(synth_gaussian(3, 3, 4, 5, 0.1, 9)) != dump_dataset(synth_gaussian(3, 3, 4, 5, 0.1, 10))


def test_synth_impossible_geometry():
    with pytest.raises(ValueError, match="attempts"):
        synth_gaussian(5, 1, 1, 1.0, 0.1, seed=0)


@pytest.fixture(scope="module")
def small_report():
    ds = synth_gaussian(4, 8, 6, 2.0, 1.0, seed=3)
    return run_benchmark(ds, EvalConfig(batches=3, ways=3, shots=5, seed=1))


def test_csv_layout(small_report, tmp_path):
    path = tmp_path / "r.csv"
    save_report(small_report, path, "csv")
    rows = list(csv.reader(io.StringIO(path.read_text())))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + 4 * 2 * 3
    grid = [(r[0], r[1], int(r[2])) for r in rows[1:]]
    for m in ("fcert", "fcert-weighted", "protonet", "knn"):
        for model in ("individual", "group"):
            assert [t for mm, md, t in grid if (mm, md) == (m, model)] == [0, 1, 2]


def test_json_round_trip(small_report, tmp_path):
    path = tmp_path / "r.json"
    save_report(small_report, path, "json")
    back = json.loads(path.read_text())
    assert back["records"] == json.loads(json.dumps(small_report.records))
    assert back["summary"] == small_report.summary
    assert back["config"]["shots"] == 5 and back["seed"] == 1


def test_report_text_deterministic(small_report):
    assert report_csv(small_report) == report_csv(small_report)
    assert report_json(small_report) == report_json(small_report)


def test_bad_format(small_report, tmp_path):
    with pytest.raises(ValueError):
        save_report(small_report, tmp_path / "x", "xml")
