"""
Base class used for plugins.
"""

import argparse
import sys
from typing import Any, Callable, Dict, List, Optional, TYPE_CHECKING

from heatwave.command_argument_parser import Parser
from heatwave.command_line_output import CommandLineOutput

if TYPE_CHECKING:
    from heatwave.plugins import PluginManager

CommandFunction = Callable[[argparse.Namespace], Optional[int]]


def trim(docstring: str) -> str:
    """Trims the leading spaces from docstring comments.

    From http://www.python.org/dev/peps/pep-0257/

    """
    if not docstring:
        return ''
    lines = docstring.expandtabs().splitlines()
    # first line doesn't count towards the common indentation
    indent = sys.maxsize
    for line in lines[1:]:
        stripped = line.lstrip()
        if stripped:
            indent = min(indent, len(line) - len(stripped))
    trimmed = [lines[0].strip()]
    if indent < sys.maxsize:
        for line in lines[1:]:
            trimmed.append(line[indent:].rstrip())
    while trimmed and not trimmed[-1]:
        trimmed.pop()
    while trimmed and not trimmed[0]:
        trimmed.pop(0)
    return '\n'.join(trimmed)


class CliPluginBase:
    """Base class used for all plugins.

    A plugin contributes do_xxx methods; the first paragraph of each
    docstring is the usage and the rest the description. An argparse_xxx
    attribute holding a Parser describes the command's arguments.
    """

    def __init__(self, plugin_manager: 'PluginManager', output: CommandLineOutput,
                 params: Dict[str, Any]):
        self.plugin_manager = plugin_manager
        self.output = output
        self.params = params

    def get_commands(self) -> List[str]:
        """Gets a list of all of the commands."""
        return [x[3:] for x in dir(self.__class__) if x.startswith('do_')]

    def get_command(self, command: str) -> Optional[CommandFunction]:
        """Retrieves the function object associated with a command."""
        return getattr(self, 'do_' + command, None)

    def get_command_args(self, command: str) -> Optional[Parser]:
        """Retrieves the argparse arguments for a command."""
        return getattr(self, 'argparse_' + command, None)

    def execute_cmd(self, fn: CommandFunction, args: argparse.Namespace) -> Optional[int]:
        """Executes a command from this plugin.

            Plugins can override this function to do plugin wide checking.
        """
        return fn(args)

    def print(self, *args) -> None:
        """Like print, but allows for redirection."""
        self.output.print(*args)

    def good(self, *args, **kwargs) -> None:
        """Prints in the GOOD color."""
        self.output.good(*args, **kwargs)

    def error(self, *args, **kwargs) -> None:
        """Logs an error."""
        self.output.error(*args, **kwargs)

    def debug(self, *args, **kwargs) -> None:
        """Logs at debug level."""
        self.output.debug(*args, **kwargs)
