"""
Class used for managing plugins.
"""

import importlib
import importlib.metadata
import logging

from typing import Any, Callable, Dict, List, Optional, Tuple

from heatwave.cli_plugin_base import CliPluginBase
from heatwave.column import columnize
from heatwave.command_argument_parser import Arg, CommandArgumentParser, Parser
from heatwave.command_line_error import CommandLineError
from heatwave.command_line_output import CommandLineOutput

LOGGER = logging.getLogger(__name__)

PLUGIN_GROUP = 'heatwave.plugin'

# Used when the package metadata isn't installed (running from a checkout).
BUILTIN_PLUGINS = {
    'core': 'heatwave.core_plugin:CorePlugin',
    'checks': 'heatwave.checks_plugin:ChecksPlugin',
}


def _entry_points() -> List[Tuple[str, Callable[[], Any]]]:
    try:
        found = importlib.metadata.entry_points(group=PLUGIN_GROUP)
    except TypeError:
        # python < 3.10
        found = importlib.metadata.entry_points().get(PLUGIN_GROUP, [])
    return [(ep.name, ep.load) for ep in found]


def _load_builtin(target: str) -> Callable[[], Any]:

    def load():
        module_name, _, class_name = target.partition(':')
        return getattr(importlib.import_module(module_name), class_name)

    return load


class PluginManager:
    """Class for working with plugins."""

    def __init__(self, params: Dict[str, Any], output: CommandLineOutput) -> None:
        self.params = params
        self.output = output
        self.plugins: Dict[str, CliPluginBase] = {}

    def load_plugins(self) -> None:
        """Loads the installed plugins, falling back to the builtin ones."""
        plugin_entry_points = _entry_points()
        if not plugin_entry_points:
            LOGGER.debug('no %s entry points installed, using builtin plugins', PLUGIN_GROUP)
            plugin_entry_points = [(name, _load_builtin(target))
                                   for name, target in BUILTIN_PLUGINS.items()]
        for plugin_name, load in plugin_entry_points:
            LOGGER.debug('Loading Plugin %s ...', plugin_name)
            try:
                plugin_class = load()
                self.plugins[plugin_name] = plugin_class(self, self.output, self.params)
            except Exception:  # pylint: disable=broad-exception-caught
                LOGGER.exception('Error encountered while loading plugin %s', plugin_name)
        LOGGER.debug('All plugins loaded')

    def get_commands(self) -> List[str]:
        """Gets a list of all of the commands."""
        commands = []
        for plugin in self.plugins.values():
            commands.extend(plugin.get_commands())
        return commands

    def get_command(self, command: str) -> Tuple[Optional[CliPluginBase], Optional[Callable]]:
        """Retrieves the function object associated with a command."""
        for plugin in self.plugins.values():
            cmd = plugin.get_command(command)
            if cmd:
                return plugin, cmd
        return None, None

    def get_command_help(self, command: str) -> str:
        """Retrieves the documentation associated with a command."""
        _plugin, fn = self.get_command(command)
        if fn is None:
            return ''
        return fn.__doc__ or ''

    def get_command_args(self, cmd: str) -> Parser:
        """Retrieves the argparse arguments for a command."""
        for plugin in self.plugins.values():
            args = plugin.get_command_args(cmd)
            if args:
                return args
        return Parser(Arg('argv', metavar='ARGV', nargs='*', help='Arguments'))

    def help_command_list(self) -> None:
        """Prints the list of commands."""
        commands = sorted(cmd.replace('_', '-') for cmd in self.get_commands())
        self.output.print('Type "heatwave help <command>" to get more information on a command:')
        self.output.print('-' * 79)
        columnize(commands, 78, self.output.print)

    def create_argparser(self, cmd: str) -> CommandArgumentParser:
        """Builds the parser for cmd from its argparse_xxx object and docstring."""
        argparse_args = self.get_command_args(cmd)
        if not isinstance(argparse_args, Parser):
            raise CommandLineError(
                f'Expecting argparse_{cmd} to be of type Parser. Found {type(argparse_args)}')
        doc_lines = self.get_command_help(cmd).expandtabs().splitlines()
        doc_lines = [line.strip() for line in doc_lines]
        if '' in doc_lines:
            blank_idx = doc_lines.index('')
            usage = doc_lines[:blank_idx]
            description = doc_lines[blank_idx + 1:]
        else:
            usage = doc_lines
            description = []
        # pylint: disable=unexpected-keyword-arg
        parser = CommandArgumentParser(self,
                                       prog=cmd.replace('_', '-'),
                                       usage='\n'.join(usage),
                                       description='\n'.join(description).strip(),
                                       add_help=False,
                                       exit_on_error=False)
        return argparse_args.populate_parser(cli=self, parser=parser)
