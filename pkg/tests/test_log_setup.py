#!/usr/bin/env python3

import logging
import os
import tempfile
import unittest
from unittest import mock

from heatwave.colored_formatter import ColoredFormatter
from heatwave.colors import LEVEL_SGR, Color, set_nocolor, sgr
from heatwave.column import align_cell, column_print, columnize
from heatwave.log_setup import GOOD, attach_run_log, default_config, detach_run_log, log_setup
from heatwave.logging_handler import AnsiLoggingHandler


def make_record(level, msg='hello'):
    return logging.LogRecord('heatwave.test', level, __file__, 1, msg, None, None)


class TestColumn(unittest.TestCase):

    def test_align(self):
        self.assertEqual(align_cell('<', 'ab', 4), 'ab  ')
        self.assertEqual(align_cell('>', 'ab', 4), '  ab')
        self.assertEqual(align_cell(' ', 'ab', 4), 'ab')

    def test_column_print(self):
        lines = []
        column_print('<> ', [['check', 'observed', 'note'], '-', ['riesz_l2', '1', 'ok']],
                     lines.append)
        self.assertEqual(lines, [
            'check    observed note',
            '-------- -------- ----',
            'riesz_l2        1 ok',
        ])

    def test_columnize(self):
        lines = []
        columnize(['aaaa', 'bb', 'cc', 'd'], 10, lines.append)
        self.assertEqual(lines, ['aaaa  cc', 'bb    d'])
        lines = []
        columnize([], 10, lines.append)
        self.assertEqual(lines, [])


class TestColoredFormatter(unittest.TestCase):

    def test_wraps_message(self):
        formatter = ColoredFormatter('%(message)s')
        with mock.patch.object(Color, 'ERROR_COLOR', '<red>'), \
                mock.patch.object(Color, 'NO_COLOR', '</>'):
            self.assertEqual(formatter.format(make_record(logging.ERROR)), '<red>hello</>')

    def test_no_color(self):
        formatter = ColoredFormatter('%(message)s')
        with mock.patch.object(Color, 'INFO_COLOR', ''):
            self.assertEqual(formatter.format(make_record(logging.INFO)), 'hello')

    def test_level_lookup(self):
        with mock.patch.object(Color, 'GOOD_COLOR', '<green>'), \
                mock.patch.object(Color, 'INFO_COLOR', '<plain>'):
            self.assertEqual(Color.for_level('GOOD'), '<green>')
            self.assertEqual(Color.for_level('TRACE'), '<plain>')
        self.assertEqual(sgr(LEVEL_SGR['ERROR']), '\x1b[1;31m')
        self.assertEqual(sgr(LEVEL_SGR['INFO']), '')

    def test_set_nocolor(self):
        saved = {key: value for key, value in vars(Color).items() if key.endswith('_COLOR')}
        try:
            set_nocolor()
            for key in saved:
                self.assertEqual(getattr(Color, key), '', key)
            formatter = ColoredFormatter('%(message)s')
            self.assertEqual(formatter.format(make_record(logging.CRITICAL)), 'hello')
        finally:
            for key, value in saved.items():
                setattr(Color, key, value)

    def test_format_time(self):
        formatter = ColoredFormatter('%(asctime)s')
        record = make_record(logging.INFO)
        record.msecs = 7
        stamp = formatter.formatTime(record)
        self.assertRegex(stamp, r'^\d\d:\d\d:\d\d\.007$')
        self.assertRegex(formatter.formatTime(record, '%H'), r'^\d\d$')


class TestLogSetup(unittest.TestCase):

    def setUp(self):
        root = logging.getLogger()
        self.saved = (root.level, list(root.handlers))
        self.tmp = tempfile.TemporaryDirectory()  # pylint: disable=consider-using-with

    def tearDown(self):
        root = logging.getLogger()
        for handler in list(root.handlers):
            root.removeHandler(handler)
        level, handlers = self.saved
        root.setLevel(level)
        for handler in handlers:
            root.addHandler(handler)
        self.tmp.cleanup()

    def test_builtin_config(self):
        missing = os.path.join(self.tmp.name, 'missing.cfg')
        with mock.patch.dict(os.environ, {'HEATWAVE_LOG_CFG': ''}):
            log_setup(cfg_path=missing, level=logging.DEBUG, color=False, timestamp=True)
        root = logging.getLogger()
        self.assertEqual(root.level, logging.DEBUG)
        self.assertIsInstance(root.handlers[0], AnsiLoggingHandler)
        self.assertEqual(root.handlers[0].formatter._fmt, '%(asctime)s - %(message)s')  # pylint: disable=protected-access
        self.assertEqual(logging.GOOD, GOOD)  # pylint: disable=no-member
        self.assertEqual(logging.getLevelName(GOOD), 'GOOD')

    def test_config_file_from_environment(self):
        cfg = os.path.join(self.tmp.name, 'logging.cfg')
        with open(cfg, 'w', encoding='utf-8') as out_file:
            out_file.write('version: 1\n'
                           'disable_existing_loggers: false\n'
                           'handlers:\n'
                           '  quiet:\n'
                           '    class: logging.NullHandler\n'
                           'root:\n'
                           '  handlers: [quiet]\n')
        with mock.patch.dict(os.environ, {'HEATWAVE_LOG_CFG': cfg}):
            log_setup(level=logging.WARNING)
        root = logging.getLogger()
        self.assertEqual(root.level, logging.WARNING)
        self.assertIsInstance(root.handlers[0], logging.NullHandler)

    def test_default_config(self):
        config = default_config(logging.WARNING, color=True, timestamp=False)
        self.assertEqual(len(config['formatters']), 4)
        self.assertEqual(config['root'], {'level': 'WARNING', 'handlers': ['notime-color']})
        handler = config['handlers']['notime-color']
        self.assertEqual(handler['formatter'], 'notime-color')
        self.assertIsNot(default_config()['formatters'], config['formatters'])

    def test_run_log(self):
        root = logging.getLogger()
        root.setLevel(logging.INFO)
        handler = attach_run_log(self.tmp.name)
        self.assertIn(handler, root.handlers)
        logging.getLogger('heatwave.test').info('recorded')
        detach_run_log(handler)
        self.assertNotIn(handler, root.handlers)
        logging.getLogger('heatwave.test').info('dropped')
        with open(os.path.join(self.tmp.name, 'run.log'), 'r', encoding='utf-8') as in_file:
            text = in_file.read()
        self.assertIn('INFO heatwave.test recorded', text)
        self.assertNotIn('dropped', text)


class TestAnsiLoggingHandler(unittest.TestCase):

    def test_emit(self):
        handler = AnsiLoggingHandler()
        handler.setFormatter(logging.Formatter('%(levelname)s %(message)s'))
        with mock.patch('heatwave.logging_handler.print_formatted_text') as printer:
            handler.emit(make_record(logging.WARNING))
        printer.assert_called_once()
        self.assertEqual(str(printer.call_args.args[0].value), 'WARNING hello')

    def test_emit_failure_is_handled(self):
        handler = AnsiLoggingHandler()
        with mock.patch('heatwave.logging_handler.print_formatted_text',
                        side_effect=OSError('closed')), \
                mock.patch.object(handler, 'handleError') as handle_error:
            handler.emit(make_record(logging.INFO))
        handle_error.assert_called_once()


if __name__ == '__main__':
    unittest.main()
