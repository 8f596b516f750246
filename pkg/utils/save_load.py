"""
Result Persistence Utilities
File: utils/save_load.py
"""

import io
import json
import math
import os
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version

import pandas as pd

SCHEMA_VERSION = 1

CSV_COLUMNS = [
    'experiment', 'field_family', 'marking', 'lambda', 'n', 's', 'mu', 'p',
    'value', 'ci_low', 'ci_high', 'reps', 'seed', 'leakage_budget',
]

try:
    LIBRARY_VERSION = version('geoperc')
except PackageNotFoundError:
    LIBRARY_VERSION = '1.0.0'


def _finite(value):
    """NaN and infinities become None so that JSON stays standard"""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


@dataclass
class ResultRecord:
    """Config echo, flat result rows and timing of one CLI run"""

    config: dict
    results: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    def add(self, **row):
        self.results.append({column: row.get(column) for column in CSV_COLUMNS})

    def to_dataframe(self):
        return pd.DataFrame(self.results, columns=CSV_COLUMNS)


class ResultStore:
    """Renders and writes result records as CSV or JSON"""

    def __init__(self, output_dir='results'):
        self.output_dir = output_dir

    def render_csv(self, record):
        buffer = io.StringIO()
        record.to_dataframe().to_csv(buffer, index=False, lineterminator='\n')
        return buffer.getvalue()

    def render_json(self, record):
        payload = {
            'schema_version': SCHEMA_VERSION,
            'library_version': LIBRARY_VERSION,
            'config': _finite(record.config),
            'results': [_finite(row) for row in record.results],
            'timing': _finite(record.timing),
        }
        return json.dumps(payload, indent=2, allow_nan=False) + '\n'

    def render(self, record, fmt):
        return self.render_csv(record) if fmt == 'csv' else self.render_json(record)

    def default_path(self, record, fmt):
        name = record.config.get('experiment') or 'experiment'
        return os.path.join(self.output_dir, f"{name}.{fmt}")

    def save(self, record, fmt='json', path=None):
        """Write the record and return the path written"""
        path = path or self.default_path(record, fmt)
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(self.render(record, fmt))
        return path

    def load_csv(self, path):
        """Load a results CSV"""
        return pd.read_csv(path)

    def load_json(self, path):
        """Load a results JSON document"""
        with open(path, encoding='utf-8') as handle:
            return json.load(handle)
