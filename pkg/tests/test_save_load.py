"""
Tests for result rendering and loading against checked-in golden files
File: tests/test_save_load.py
"""

import math
from pathlib import Path

import pytest

from utils.save_load import CSV_COLUMNS, SCHEMA_VERSION, ResultRecord, ResultStore

GOLDEN = Path(__file__).parent / 'golden'


@pytest.fixture
def record():
    record = ResultRecord(config={'command': 'estimate', 'experiment': 'golden', 'eps_leak': 1e-6},
                          timing={'elapsed_seconds': math.nan})
    columns = dict(field_family='constant', marking='geostatistical', seed=7, leakage_budget=0.0)
    record.add(experiment='golden', **columns, **{'lambda': 0.5}, value=0.25, ci_low=0.2,
               ci_high=0.3, reps=100)
    record.add(experiment='golden:closed_form', **columns, **{'lambda': 0.5}, value=0.79227,
               ci_low=0.79227, ci_high=0.79227, reps=0)
    return record


@pytest.fixture
def store(tmp_path):
    return ResultStore(str(tmp_path))


def test_csv_matches_golden(record, store):
    assert store.render_csv(record) == (GOLDEN / 'results.csv').read_text(encoding='utf-8')


def test_json_matches_golden(record, store, tmp_path):
    path = store.save(record, 'json', str(tmp_path / 'out' / 'golden.json'))
    written = store.load_json(path)
    golden = store.load_json(GOLDEN / 'results.json')
    assert written['schema_version'] == golden['schema_version'] == SCHEMA_VERSION
    written.pop('library_version')
    golden.pop('library_version')
    assert written == golden


def test_saved_csv_loads_back(record, store):
    path = store.save(record, 'csv')
    assert path.endswith('golden.csv')
    frame = store.load_csv(path)
    golden = store.load_csv(GOLDEN / 'results.csv')
    assert list(frame.columns) == CSV_COLUMNS
    assert frame['value'].tolist() == golden['value'].tolist() == [0.25, 0.79227]
    assert frame['n'].isna().all()
    assert frame['reps'].tolist() == [100, 0]


def test_json_has_no_bare_nan(record, store):
    text = store.render_json(record)
    assert 'NaN' not in text
    assert '"elapsed_seconds": null' in text
