"""
Run configuration: a versioned YAML document naming the model, the checks
and where the reports go.

    version: 1
    model: cycle:64
    checks:
      - davies_gaffney
      - name: subordination
        params: {s: 0.5, nodes: 64}
    output: out
    seed: 0
    jobs: 1
    tolerance_scale: 1.0
    tolerances: {davies_gaffney: 2.5}
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import yaml

from heatwave.errors import ConfigError

LOGGER = logging.getLogger(__name__)

CONFIG_VERSION = 1
CONFIG_KEYS = ('version', 'model', 'checks', 'output', 'seed', 'jobs', 'tolerance_scale',
               'tolerances')
CHECK_KEYS = ('name', 'params')


@dataclass
class CheckSpec:
    """One selected check and its parameter overrides."""
    name: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RunConfig:  # pylint: disable=too-many-instance-attributes
    """Fully resolved run configuration."""
    model: str = ''
    checks: List[CheckSpec] = field(default_factory=list)
    output: str = 'heatwave_out'
    seed: int = 0
    jobs: int = 1
    tolerance_scale: float = 1.0
    tolerances: Dict[str, float] = field(default_factory=dict)
    version: int = CONFIG_VERSION

    def to_dict(self) -> Dict[str, Any]:
        """Plain dictionary in the file layout."""
        return {
            'version': self.version,
            'model': self.model,
            'checks': [{
                'name': c.name,
                'params': dict(c.params)
            } if c.params else c.name for c in self.checks],
            'output': self.output,
            'seed': self.seed,
            'jobs': self.jobs,
            'tolerance_scale': self.tolerance_scale,
            'tolerances': dict(self.tolerances),
        }

    def check_names(self) -> List[str]:
        """Names of the selected checks in order."""
        return [c.name for c in self.checks]


def _parse_check(entry: Any) -> CheckSpec:
    if isinstance(entry, str):
        return CheckSpec(entry)
    if isinstance(entry, dict):
        unknown = sorted(set(entry) - set(CHECK_KEYS))
        if unknown:
            raise ConfigError(f"unknown keys in check entry: {', '.join(unknown)}")
        if 'name' not in entry:
            raise ConfigError('check entry is missing its name')
        params = entry.get('params') or {}
        if not isinstance(params, dict):
            raise ConfigError(f"params of check '{entry['name']}' must be a mapping")
        return CheckSpec(str(entry['name']), dict(params))
    raise ConfigError(f'check entry must be a name or a mapping, got {entry!r}')


def config_from_dict(data: Optional[Dict[str, Any]]) -> RunConfig:
    """Validates a parsed document and returns the RunConfig."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError('run configuration must be a mapping')
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    version = data.get('version', CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f'unsupported configuration version {version!r} '
                          f'(expected {CONFIG_VERSION})')
    checks = data.get('checks') or []
    if not isinstance(checks, list):
        raise ConfigError("'checks' must be a list")
    tolerances = data.get('tolerances') or {}
    if not isinstance(tolerances, dict):
        raise ConfigError("'tolerances' must be a mapping of check name to threshold")
    try:
        config = RunConfig(model=str(data.get('model') or ''),
                           checks=[_parse_check(entry) for entry in checks],
                           output=str(data.get('output', 'heatwave_out')),
                           seed=int(data.get('seed', 0)),
                           jobs=int(data.get('jobs', 1)),
                           tolerance_scale=float(data.get('tolerance_scale', 1.0)),
                           tolerances={str(k): float(v) for k, v in tolerances.items()},
                           version=version)
    except (TypeError, ValueError) as err:
        raise ConfigError(f'invalid configuration value: {err}') from err
    if config.jobs < 1:
        raise ConfigError(f'jobs must be at least 1, got {config.jobs}')
    if config.tolerance_scale <= 0:
        raise ConfigError(f'tolerance_scale must be positive, got {config.tolerance_scale}')
    return config


def load_config(filename: str) -> RunConfig:
    """Reads and validates a YAML run configuration."""
    try:
        with open(filename, 'r', encoding='utf-8') as in_file:
            data = yaml.safe_load(in_file)
    except OSError as err:
        raise ConfigError(f"unable to read configuration '{filename}': {err}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"configuration '{filename}' is not valid YAML: {err}") from err
    LOGGER.debug('loaded configuration %s', filename)
    return config_from_dict(data)


def apply_overrides(config: RunConfig, **overrides: Any) -> RunConfig:
    """Command line values win over the file; None means not given."""
    for key, value in overrides.items():
        if value is None:
            continue
        if not hasattr(config, key):
            raise ConfigError(f'unknown override {key}')
        setattr(config, key, value)
    if config.jobs < 1:
        raise ConfigError(f'jobs must be at least 1, got {config.jobs}')
    if config.tolerance_scale <= 0:
        raise ConfigError(f'tolerance_scale must be positive, got {config.tolerance_scale}')
    return config


def write_resolved(config: RunConfig, out_dir: str) -> str:
    """Writes resolved_config.yaml into out_dir and returns its path."""
    os.makedirs(out_dir, exist_ok=True)
    filename = os.path.join(out_dir, 'resolved_config.yaml')
    with open(filename, 'w', encoding='utf-8') as out_file:
        yaml.safe_dump(config.to_dict(), out_file, sort_keys=False)
    return filename
