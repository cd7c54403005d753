"""
The result of one estimate evaluated over a parameter grid.

Reports serialize to JSON (sorted keys, no timestamps, runtime_ms null) so
that two runs with the same configuration and seed produce identical files,
and to a CSV table with one row per grid point.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

CSV_FLOAT_FORMAT = '{!r}'


def plain(value: Any) -> Any:
    """Converts numpy scalars, arrays and non-finite floats to JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': plain(value.real), 'im': plain(value.imag)}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


@dataclass
class CheckReport:  # pylint: disable=too-many-instance-attributes
    """Observed constant of one estimate, its threshold and the verdict."""
    check_name: str
    anchor: str
    grid: Dict[str, Any]
    observed_constant: float
    threshold: float
    passed: bool
    rows: List[Dict[str, Any]] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    runtime_ms: Optional[float] = None
    # In-memory results (matrices, sections) that are never serialized.
    artifacts: Dict[str, Any] = field(default_factory=dict, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready dictionary. runtime_ms is always null here."""
        return plain({
            'check_name': self.check_name,
            'anchor': self.anchor,
            'grid': self.grid,
            'observed_constant': self.observed_constant,
            'threshold': self.threshold,
            'pass': bool(self.passed),
            'details': self.details,
            'runtime_ms': None,
        })

    def to_json(self) -> str:
        """Deterministic JSON text."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + '\n'

    def csv_columns(self) -> List[str]:
        """Union of the row keys in first-seen order."""
        columns: List[str] = []
        for row in self.rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
        return columns

    def write(self, out_dir: str) -> List[str]:
        """Writes <check>.json and <check>.csv into out_dir. Returns the paths."""
        os.makedirs(out_dir, exist_ok=True)
        json_path = os.path.join(out_dir, f'{self.check_name}.json')
        with open(json_path, 'w', encoding='utf-8') as out_file:
            out_file.write(self.to_json())
        csv_path = os.path.join(out_dir, f'{self.check_name}.csv')
        columns = self.csv_columns()
        with open(csv_path, 'w', encoding='utf-8', newline='') as out_file:
            writer = csv.writer(out_file)
            writer.writerow(columns)
            for row in self.rows:
                writer.writerow([format_cell(row.get(col, '')) for col in columns])
        return [json_path, csv_path]

    def summary_row(self) -> List[str]:
        """check, pass/fail, observed, threshold as strings."""
        return [
            self.check_name, 'PASS' if self.passed else 'FAIL', f'{self.observed_constant:.6g}',
            f'{self.threshold:.6g}'
        ]


def format_cell(value: Any) -> str:
    """CSV text for one cell; floats keep full precision."""
    value = plain(value)
    if isinstance(value, float):
        return CSV_FLOAT_FORMAT.format(value)
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True)
    return str(value)


def load_report(filename: str) -> Dict[str, Any]:
    """Reads a report JSON file back as a dictionary."""
    with open(filename, 'r', encoding='utf-8') as in_file:
        return json.load(in_file)
