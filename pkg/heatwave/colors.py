"""Console colors for the log levels ColoredFormatter knows about."""

from typing import Dict

# SGR parameters per level name; empty leaves the level uncolored.
LEVEL_SGR: Dict[str, str] = {
    'DEBUG': '1;34',
    'INFO': '',
    'GOOD': '1;32',
    'WARNING': '1;33',
    'ERROR': '1;31',
    'CRITICAL': '1;31',
}


def sgr(params: str) -> str:
    """Escape sequence selecting the SGR params, or '' for none."""
    return f'\x1b[{params}m' if params else ''


class Color:  # pylint: disable=too-few-public-methods
    """Escape sequence per level name."""

    NO_COLOR: str = sgr('0')
    DEBUG_COLOR: str = sgr(LEVEL_SGR['DEBUG'])
    INFO_COLOR: str = sgr(LEVEL_SGR['INFO'])
    GOOD_COLOR: str = sgr(LEVEL_SGR['GOOD'])
    WARNING_COLOR: str = sgr(LEVEL_SGR['WARNING'])
    ERROR_COLOR: str = sgr(LEVEL_SGR['ERROR'])
    CRITICAL_COLOR: str = sgr(LEVEL_SGR['CRITICAL'])

    @classmethod
    def for_level(cls, level_name: str) -> str:
        """Sequence for a level name; unknown levels print like INFO."""
        if level_name not in LEVEL_SGR:
            level_name = 'INFO'
        return getattr(cls, f'{level_name}_COLOR')


def set_nocolor() -> None:
    """Disables color sequences."""
    Color.NO_COLOR = ''
    for level_name in LEVEL_SGR:
        setattr(Color, f'{level_name}_COLOR', '')
