"""
Class for managing all command line output.
"""

import logging
from typing import List, Optional, Tuple

from heatwave.log_setup import GOOD


class CommandLineOutput:
    """Routes printed output through logging and optionally captures it,
    so commands can be tested without a console.

    """

    def __init__(self, log: Optional[logging.Logger] = None) -> None:
        self.captured_output: Optional[List[Tuple[str, str]]] = None
        self.error_count: int = 0
        self.fatal_count: int = 0
        self.log: logging.Logger = log or logging.getLogger(__name__)

    def set_capture_output(self, capture_output: bool) -> None:
        """Turns capturing of the output on or off."""
        self.captured_output = [] if capture_output else None

    def get_captured_output(self) -> Optional[List[Tuple[str, str]]]:
        """Returns the output which has been captured so far."""
        return self.captured_output

    def get_error_count(self) -> int:
        """Returns the number of errors recorded so far."""
        return self.error_count

    def _capture(self, kind: str, msg: str, args) -> None:
        if self.captured_output is not None:
            self.captured_output.append((kind, msg % args if args else msg))

    def print(self, *args) -> None:
        """Like print, but allows for redirection."""
        self.info('%s', ' '.join(str(arg) for arg in args))

    def debug(self, msg: str, *args, **kwargs) -> None:
        """Logs a debug level message."""
        self.log.debug(msg, *args, **kwargs)

    def info(self, msg: str, *args, **kwargs) -> None:
        """Captures and logs an info level message."""
        self._capture('info', msg, args)
        self.log.info(msg, *args, **kwargs)

    def good(self, msg: str, *args, **kwargs) -> None:
        """Captures and logs a GOOD level message, which the color
        formatter prints in green.

        """
        self._capture('good', msg, args)
        self.log.log(GOOD, msg, *args, **kwargs)

    def error(self, msg: str, *args, **kwargs) -> None:
        """Captures and logs an error level message."""
        self._capture('error', msg, args)
        self.error_count += 1
        self.log.error(msg, *args, **kwargs)

    def fatal(self, msg: str, *args, **kwargs) -> None:
        """Captures and logs a fatal level message."""
        self._capture('fatal', msg, args)
        self.fatal_count += 1
        self.log.critical(msg, *args, **kwargs)

    def reset(self) -> None:
        """Clears the captured output and the counters."""
        if self.captured_output is not None:
            self.captured_output = []
        self.error_count = 0
        self.fatal_count = 0
