#!/usr/bin/env python3
"""
Command line program for running the heat kernel and Riesz transform
checks against finite model spaces.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from heatwave.colors import set_nocolor
from heatwave.command_line import EXIT_ERROR, CommandLine
from heatwave.log_setup import log_setup


def real_main(argv: Optional[List[str]] = None) -> int:
    """Parses the global options, sets up logging and runs one command."""
    default_nocolor = not sys.stdout.isatty()

    parser = argparse.ArgumentParser(
        prog='heatwave',
        usage='%(prog)s [options] command [arguments]',
        description='Numerical checks of heat kernel bounds and Riesz transforms.',
        epilog='Commands: model validate, check run, check list, suite run, '
        'report summarize, help, version.\n'
        'Exit status: 0 all checks pass, 1 a check failed, 2 configuration error.\n'
        'The logging configuration can be set with the HEATWAVE_LOG_CFG '
        'environment variable.',
        formatter_class=argparse.RawTextHelpFormatter)
    parser.add_argument('-d',
                        '--debug',
                        dest='debug',
                        action='store_true',
                        help='Turn on debug logging')
    parser.add_argument('--nocolor',
                        dest='nocolor',
                        action='store_true',
                        help='Turn off colorized output',
                        default=default_nocolor)
    parser.add_argument('cmd', nargs=argparse.REMAINDER, help='Command to execute')

    try:
        args = parser.parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as err:
        return EXIT_ERROR if err.code else 0

    if args.debug:
        level = logging.DEBUG
        timestamp = True
    else:
        level = logging.INFO
        timestamp = False

    if args.nocolor:
        set_nocolor()
    log_setup(level=level, color=not args.nocolor, timestamp=timestamp)

    params: Dict[str, Any] = {'debug': args.debug}
    cli = CommandLine(params)
    return cli.execute_cmd(args.cmd)


def main():
    """Runs the command and exits with its status."""
    sys.exit(real_main())


if __name__ == '__main__':
    main()
