"""
Plain-text experiment configuration.

One ``key = value`` pair per line; ``#`` starts a comment. List-valued keys
take comma- or whitespace-separated numbers::

    experiment = table_users
    n_t = 8
    u = 8
    snr_db_grid = 0, 5, 10, 15, 20, 25, 30
    trials = 1000
"""

import dataclasses

from .errors import ConfigError
from .experiments import ExperimentConfig

__all__ = ['parse_config', 'load_config']

_LISTS = {'snr_db_grid': float, 'alpha_grid': float, 'u_grid': int}
_BOOL = {'1': True, 'true': True, 'yes': True, 'on': True,
         '0': False, 'false': False, 'no': False, 'off': False}


def _convert(key: str, raw: str, kind):
    try:
        if key in _LISTS:
            items = raw.replace(',', ' ').split()
            return tuple(_LISTS[key](x) for x in items)
        if kind is bool:
            return _BOOL[raw.lower()]
        if kind is int:
            return int(raw, 0)
        if kind is float:
            return float(raw)
        return raw
    except (ValueError, KeyError):
        raise ConfigError(f'invalid value for {key}: {raw!r}') from None


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """
    Build an `ExperimentConfig` from config text.

    Keyword `overrides` (e.g. from command line flags) win over the file;
    ``None`` values are ignored.

    Raises
    ------
    ConfigError
        On syntax errors, unknown keys, bad values or invalid combinations.
    """
    kinds = {f.name: type(f.default) for f in dataclasses.fields(
        ExperimentConfig)}
    kinds['out_path'] = str
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f'line {lineno}: expected key = value')
        key, raw = (part.strip() for part in line.split('=', 1))
        if key not in kinds:
            raise ConfigError(f'line {lineno}: unknown key {key!r}')
        values[key] = _convert(key, raw, kinds[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f'cannot read config {path}: {exc.strerror}') \
            from None
    return parse_config(text, **overrides)
