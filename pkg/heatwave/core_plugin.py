"""
Core plugin functionality.
"""
import argparse
from fnmatch import fnmatch
from typing import Optional

import numpy as np
import scipy

from heatwave.cli_plugin_base import trim, CliPluginBase
from heatwave.command_argument_parser import Arg, Parser
from heatwave.version import __version__


class CorePlugin(CliPluginBase):
    """Defines the help and version commands."""

    argparse_help = Parser(
        Arg('-v',
            '--verbose',
            dest='verbose',
            action='store_true',
            help='Display more help for each command',
            default=False),
        Arg('command', metavar='COMMAND', nargs='*', type=str, help='Command to get help on'),
    )

    def do_help(self, args: argparse.Namespace) -> Optional[int]:
        """help [-v] [CMD]...

           List available commands with "help" or detailed help with "help cmd".
        """
        if not args.command and not args.verbose:
            self.plugin_manager.help_command_list()
            return None
        help_cmd = args.command[0].replace('-', '_') if args.command else '*'

        cmd_found = False
        for cmd in sorted(self.plugin_manager.get_commands()):
            if not fnmatch(cmd, help_cmd):
                continue
            if cmd_found:
                self.print('-' * 62)
            cmd_found = True
            parser = self.plugin_manager.create_argparser(cmd)
            help_text = parser.format_help() or trim(self.plugin_manager.get_command_help(cmd))
            for line in help_text.rstrip().splitlines():
                self.print(line)
        if not cmd_found:
            self.error('No command found matching "%s"', help_cmd)
            return 2
        return None

    def do_version(self, _) -> Optional[int]:
        """version

           Prints the heatwave version and the numerical stack it runs on.
        """
        self.print(f'heatwave {__version__} (numpy {np.__version__}, scipy {scipy.__version__})')
        return None
