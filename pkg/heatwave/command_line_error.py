"""
Class used for reporting command line usage errors.
"""


class CommandLineError(Exception):
    """Raised instead of exiting when a command's arguments don't parse."""
