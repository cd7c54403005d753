#!/usr/bin/env python3

import math
import os
import tempfile
import unittest

import numpy as np

from heatwave.check_report import CheckReport, format_cell, load_report, plain


def sample_report(passed=True):
    return CheckReport('davies_gaffney',
                       'Gaussian off-diagonal decay', {'times': [1.0, 2.0]},
                       np.float64(0.5356),
                       2.0,
                       passed,
                       rows=[{'x': 0, 'y': 8, 'ratio': 0.5356}, {'x': 0, 'y': 4, 'note': 'edge'}],
                       details={'worst_pair': np.array([0, 8])},
                       runtime_ms=12.5,
                       artifacts={'matrix': np.eye(2)})


class TestPlain(unittest.TestCase):

    def test_values(self):
        self.assertEqual(plain(np.int64(3)), 3)
        self.assertIs(plain(np.bool_(True)), True)
        self.assertEqual(plain(np.array([[1.0, 2.0]])), [[1.0, 2.0]])
        self.assertEqual(plain(1 + 2j), {'re': 1.0, 'im': 2.0})
        self.assertEqual(plain(math.inf), 'inf')
        self.assertEqual(plain(-math.inf), '-inf')
        self.assertEqual(plain(math.nan), 'nan')
        self.assertEqual(plain({1: (1.5,)}), {'1': [1.5]})

    def test_format_cell(self):
        self.assertEqual(format_cell(0.1), '0.1')
        self.assertEqual(format_cell(True), 'True')
        self.assertEqual(format_cell({'b': 1, 'a': 2}), '{"a": 2, "b": 1}')


class TestCheckReport(unittest.TestCase):

    def test_to_dict(self):
        data = sample_report().to_dict()
        self.assertIs(data['pass'], True)
        self.assertIsNone(data['runtime_ms'])
        self.assertEqual(data['details'], {'worst_pair': [0, 8]})
        self.assertNotIn('artifacts', data)
        self.assertNotIn('rows', data)

    def test_json_is_deterministic(self):
        first = sample_report()
        second = sample_report()
        second.runtime_ms = 99.0
        self.assertEqual(first.to_json(), second.to_json())

    def test_summary_row(self):
        self.assertEqual(sample_report().summary_row(), ['davies_gaffney', 'PASS', '0.5356', '2'])
        self.assertEqual(sample_report(False).summary_row()[1], 'FAIL')

    def test_write(self):
        report = sample_report()
        with tempfile.TemporaryDirectory() as tmp:
            json_path, csv_path = report.write(os.path.join(tmp, 'out'))
            data = load_report(json_path)
            with open(csv_path, 'r', encoding='utf-8') as in_file:
                lines = in_file.read().splitlines()
        self.assertEqual(data['check_name'], 'davies_gaffney')
        self.assertEqual(lines[0], 'x,y,ratio,note')
        self.assertEqual(lines[1], '0,8,0.5356,')
        self.assertEqual(lines[2], '0,4,,edge')


if __name__ == '__main__':
    unittest.main()
