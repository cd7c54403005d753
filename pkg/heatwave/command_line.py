"""
Runs a single command line through the plugin commands and turns the
outcome into an exit status.
"""

import argparse
import logging
import shlex
from typing import Any, Dict, List, Optional, Union

from heatwave.command_line_error import CommandLineError
from heatwave.command_line_output import CommandLineOutput
from heatwave.errors import ConfigError, HeatwaveError
from heatwave.plugins import PluginManager

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


class CommandLine:
    """Class for managing the command line."""

    def __init__(self, params: Dict[str, Any], log: Optional[logging.Logger] = None) -> None:
        self.params = params
        self.params['cli'] = self
        self.output = CommandLineOutput(log=log)
        self.plugin_manager = PluginManager(params, self.output)
        self.plugin_manager.load_plugins()

    def handle_exception(self, err: Union[Exception, str]) -> int:
        """Common code for reporting an error; returns the exit status."""
        self.output.error('Error: %s', err)
        return EXIT_ERROR

    def execute_cmd(self, line: Union[str, List[str]]) -> int:
        """Executes a single command given as a string or an argument list."""
        if isinstance(line, str):
            try:
                argv = shlex.split(line, comments=True)
            except ValueError as err:
                return self.handle_exception(CommandLineError(str(err)))
        else:
            argv = list(line)
        if not argv:
            self.plugin_manager.help_command_list()
            return EXIT_OK
        try:
            args = self.line_to_args(argv)
            plugin, fn = self.plugin_manager.get_command(args.cmd)
            res = plugin.execute_cmd(fn, args)
        except (argparse.ArgumentError, CommandLineError, ConfigError) as err:
            return self.handle_exception(err)
        except HeatwaveError as err:
            return self.handle_exception(f'{type(err).__name__}: {err}')
        return EXIT_OK if res is None else int(res)

    def line_to_args(self, argv: List[str]) -> argparse.Namespace:
        """Parses the arguments for the command named by argv[0]."""
        cmd = argv[0].replace('-', '_')
        if self.plugin_manager.get_command(cmd)[1] is None:
            raise CommandLineError(f"Unrecognized command: '{argv[0]}'")
        parser = self.plugin_manager.create_argparser(cmd)
        args = parser.parse_args(argv[1:])
        args.cmd = cmd
        args.argv = argv
        return args
