"""
Logging handler which renders ANSI colored records through prompt_toolkit,
so the escape sequences also work on consoles without native ANSI support.
"""

import logging

from prompt_toolkit import print_formatted_text, ANSI


class AnsiLoggingHandler(logging.Handler):
    """Outputs formatted records via print_formatted_text."""

    def emit(self, record):
        """Outputs one logging message."""
        try:
            log_message = self.format(record)
            print_formatted_text(ANSI(log_message))
        except Exception:  # pylint: disable=broad-except
            self.handleError(record)
