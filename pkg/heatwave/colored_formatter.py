"""Implements a logging formatter which produces colorized output, suitable
for use on an ANSI console.

"""

import logging
import time

from heatwave.colors import Color


class ColoredFormatter(logging.Formatter):
    """A formatter which produces colorized messages (using ANSI escape
    sequences) for the console.

    """

    def format(self, record):
        """Add colors around the message."""
        # looked up at format time so set_nocolor() takes effect
        color = Color.for_level(record.levelname)
        message = logging.Formatter.format(self, record)
        if not color:
            return message
        return f'{color}{message}{Color.NO_COLOR}'

    def formatTime(self, record, datefmt=None):
        """Uses HH:MM:SS.mmm rather than the default date and comma."""
        rectime = self.converter(record.created)
        if datefmt:
            return time.strftime(datefmt, rectime)
        return f'{time.strftime("%H:%M:%S", rectime)}.{int(record.msecs):03d}'
