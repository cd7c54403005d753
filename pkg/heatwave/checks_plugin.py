"""
Plugin with the model, check, suite and report commands.
"""

import argparse
from typing import Any, Dict, List, Optional, Sequence

import yaml

from heatwave.cli_plugin_base import CliPluginBase
from heatwave.column import column_print
from heatwave.command_argument_parser import Arg, Parser, SubParser, SubParsers
from heatwave.command_line_error import CommandLineError
from heatwave.model_spec import build_model
from heatwave.run_config import CheckSpec, RunConfig, apply_overrides, load_config
from heatwave.space import doubling_profile
from heatwave.suite import CHECKS, SUMMARY_COLUMNS, check_names, read_summary, run_suite


def config_arg() -> Arg:
    """--config FILE"""
    return Arg('-c', '--config', dest='config', metavar='FILE', help='YAML run configuration')


def model_arg() -> Arg:
    """--model SPEC"""
    return Arg('-m',
               '--model',
               dest='model',
               metavar='SPEC',
               help='Builtin model (cycle:64, grid:8x8, ...) or model file')


def run_args() -> List[Arg]:
    """Options shared by the commands that run checks."""
    return [
        config_arg(),
        model_arg(),
        Arg('-o', '--out', dest='out', metavar='DIR', help='Directory for the reports'),
        Arg('--seed', dest='seed', type=int, help='Seed for random models and probes'),
        Arg('-j', '--jobs', dest='jobs', type=int, help='Checks to run concurrently'),
        Arg('--tolerance-scale',
            dest='tolerance_scale',
            type=float,
            help='Multiplier applied to every check tolerance'),
    ]


def parse_params(items: Sequence[str]) -> Dict[str, Any]:
    """KEY=VALUE strings to a dictionary; values are read as YAML scalars or lists."""
    params = {}
    for item in items:
        key, sep, value = item.partition('=')
        if not sep or not key:
            raise CommandLineError(f"expecting KEY=VALUE, got '{item}'")
        try:
            params[key] = yaml.safe_load(value)
        except yaml.YAMLError as err:
            raise CommandLineError(f"can't parse value for {key}: {err}") from err
    return params


class ChecksPlugin(CliPluginBase):
    """Commands for validating models and running checks."""

    def resolve_config(self, args: argparse.Namespace) -> RunConfig:
        """The configuration file (if any) with the command line options applied."""
        config = load_config(args.config) if getattr(args, 'config', None) else RunConfig()
        return apply_overrides(config,
                               model=getattr(args, 'model', None),
                               output=getattr(args, 'out', None),
                               seed=getattr(args, 'seed', None),
                               jobs=getattr(args, 'jobs', None),
                               tolerance_scale=getattr(args, 'tolerance_scale', None))

    def print_summary(self, rows: List[List[str]]) -> int:
        """Prints the summary table and returns the exit status it implies."""
        column_print('<<>>', [SUMMARY_COLUMNS, '-', *rows], self.print)
        failed = [row[0] for row in rows if row[1] != 'PASS']
        if failed:
            self.error('%d of %d checks failed', len(failed), len(rows))
            return 1
        self.good('%d checks passed', len(rows))
        return 0

    argparse_model = Parser(
        SubParsers(
            SubParser('validate',
                      Arg('spec', metavar='SPEC', nargs='?', help='Model to validate'),
                      config_arg(),
                      Arg('--seed', dest='seed', type=int, help='Seed for random models'),
                      help='Build a model and report its geometry'),
            title='subcommands',
        ))

    def do_model(self, args: argparse.Namespace) -> Optional[int]:
        """model validate [SPEC] [--config FILE] [--seed N]

           Builds the model, validating its metric and measure, and prints
           its size, doubling constant and spectral range.
        """
        config = self.resolve_config(args)
        spec = args.spec or config.model
        model = build_model(spec, config.seed)
        profile = doubling_profile(model.space)
        dec = model.decomposition()
        rows = [[key, str(value)] for key, value in model.summary().items()]
        rows += [
            ['diameter', f'{model.space.diameter:.6g}'],
            ['c_doubling', f'{profile.c_doubling:.6g}'],
            ['d_exponent', f'{profile.d_exponent:.6g}'],
            ['spectral_radius', f'{dec.spectral_radius:.6g}'],
            ['null_dim', str(dec.null_dim)],
        ]
        column_print('< ', rows, self.print)
        self.good('model %s is valid', model.name)
        return 0

    argparse_check = Parser(
        SubParsers(
            SubParser('run',
                      Arg('name', metavar='CHECK', help='Check to run'),
                      *run_args(),
                      Arg('-p',
                          '--param',
                          dest='params',
                          action='append',
                          metavar='KEY=VALUE',
                          default=[],
                          help='Override a check parameter'),
                      help='Run a single check'),
            SubParser('list', help='List the registered checks'),
            title='subcommands',
        ))

    def do_check(self, args: argparse.Namespace) -> Optional[int]:
        """check run CHECK [options] [-p KEY=VALUE]...
        check list

           Runs one check against the model and writes its reports, or lists
           the registered checks with their default parameters.
        """
        if args.sub_cmd == 'list':
            rows = [['check', 'tolerance', 'description'], '-']
            rows += [[name, CHECKS[name].tolerance_key or '-', CHECKS[name].description]
                     for name in check_names()]
            column_print('<< ', rows, self.print)
            return 0
        config = self.resolve_config(args)
        params = dict(next((c.params for c in config.checks if c.name == args.name), {}))
        params.update(parse_params(args.params))
        config.checks = [CheckSpec(args.name, params)]
        status, reports = run_suite(config)
        self.print_summary([report.summary_row() for report in reports])
        return status

    argparse_suite = Parser(
        SubParsers(
            SubParser('run',
                      *run_args(),
                      Arg('--all',
                          dest='all',
                          action='store_true',
                          help='Run every registered check, not just the configured ones'),
                      help='Run the configured checks'),
            title='subcommands',
        ))

    def do_suite(self, args: argparse.Namespace) -> Optional[int]:
        """suite run [options] [--all]

           Runs the checks selected by the configuration and writes the
           report bundle: one JSON and CSV file per check, summary.csv,
           metadata.json, resolved_config.yaml and run.log.
        """
        config = self.resolve_config(args)
        if args.all:
            configured = {c.name: c for c in config.checks}
            config.checks = [configured.get(name, CheckSpec(name)) for name in check_names()]
        status, reports = run_suite(config)
        self.print_summary([report.summary_row() for report in reports])
        return status

    argparse_report = Parser(
        SubParsers(
            SubParser('summarize',
                      Arg('directory', metavar='DIR', nargs='?', help='Report directory'),
                      config_arg(),
                      help='Print the summary of a finished run'),
            title='subcommands',
        ))

    def do_report(self, args: argparse.Namespace) -> Optional[int]:
        """report summarize [DIR] [--config FILE]

           Prints the summary table of a report directory. The exit status
           is 0 when every check passed and 1 otherwise.
        """
        directory = args.directory or self.resolve_config(args).output
        return self.print_summary(read_summary(directory))
