# Experiment configuration handling
# Loads tool-wide defaults from config.yaml and one-experiment JSON documents, with validation

import copy
import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from core.errors import ConfigError

logger = logging.getLogger(__name__)

COMMANDS = ('solve', 'spectrum', 'classify', 'shnol', 'scan', 'perturb', 'wimp')

DEFAULT_SETTINGS: Dict[str, Any] = {
    'log_level': 'INFO',
    'output_dir': './results',
    'threads': 1,
    'rescale_period': 64,
    'certificate': {'threshold': 1e-9, 'widths': [0.25, 0.5]},
    'scan': {'residual_rms': 0.1, 'beta_cut': 1e-3},
    'classify': {'c1_cap': 10.0, 'min_sum': 10.0, 'min_decade_increase': 1.0},
}

THRESHOLD_KEYS = ('residual_rms', 'beta_cut', 'certificate', 'c1_cap', 'min_sum', 'min_decade_increase')
SEARCH_KEYS = ('r_grid', 'kinds', 'widths', 'n0', 'delta1', 'r_min', 'limit')
PERTURBATION_KEYS = ('eta', 'psi', 'alpha')


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(config_path: Optional[str] = None) -> Dict[str, Any]:
    """Tool-wide defaults: DEFAULT_SETTINGS overlaid with the `shnolkit:` section of config_path"""
    if config_path is None:
        return copy.deepcopy(DEFAULT_SETTINGS)
    with open(config_path, 'r') as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse settings file {config_path}: {e}")
    if not isinstance(data, dict) or not isinstance(data.get('shnolkit', {}), dict):
        raise ConfigError(f"Settings file {config_path} needs a top-level 'shnolkit' mapping", key='shnolkit')
    return _merge(DEFAULT_SETTINGS, data.get('shnolkit', {}))


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {value!r}", key=key)
    return float(value)


def _integer(value: Any, key: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"'{key}' must be an integer >= {minimum}, got {value!r}", key=key)
    return int(value)


def expand_grid(spec: Any, key: str = 'lambda_grid') -> List[float]:
    """A list of numbers, or {start, stop, step} with stop included up to rounding"""
    if isinstance(spec, dict):
        unknown = set(spec) - {'start', 'stop', 'step'}
        if unknown:
            raise ConfigError(f"Unknown key in '{key}': {sorted(unknown)[0]}", key=f"{key}.{sorted(unknown)[0]}")
        for part in ('start', 'stop', 'step'):
            if part not in spec:
                raise ConfigError(f"'{key}' is missing '{part}'", key=f"{key}.{part}")
        start = _number(spec['start'], f"{key}.start")
        stop = _number(spec['stop'], f"{key}.stop")
        step = _number(spec['step'], f"{key}.step")
        if step <= 0 or stop < start:
            raise ConfigError(f"'{key}' needs step > 0 and stop >= start", key=key)
        count = int(round((stop - start) / step)) + 1
        # rounded so 0.1-step grids print as short decimals
        return [round(start + k * step, 12) for k in range(count)]
    if isinstance(spec, list):
        return [_number(value, key) for value in spec]
    raise ConfigError(f"'{key}' must be a list or a {{start, stop, step}} mapping", key=key)


def _check_keys(section: Dict[str, Any], allowed, prefix: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"'{prefix}' must be a mapping", key=prefix)
    for key in section:
        if key not in allowed:
            raise ConfigError(f"Unknown key '{prefix}.{key}'", key=f"{prefix}.{key}")


@dataclass
class ExperimentConfig:
    """One experiment document

    Keys mirror the JSON document; `lambda` is stored as `lam`.
    """
    command: str
    model: Dict[str, Any] = field(default_factory=dict)
    lam: Optional[float] = None
    lambda_grid: List[float] = field(default_factory=list)
    N: Optional[int] = None
    N_list: List[int] = field(default_factory=list)
    form: str = 'eq1'
    window: Optional[List[int]] = None
    spectrum_window: Optional[List[float]] = None
    search: Dict[str, Any] = field(default_factory=dict)
    n0: Optional[int] = None
    perturbation: Dict[str, Any] = field(default_factory=dict)
    thresholds: Dict[str, float] = field(default_factory=dict)
    output: Optional[str] = None
    threads: Optional[int] = None
    seed: int = 0
    tol: Optional[float] = None

    @staticmethod
    def _document_keys() -> List[str]:
        return ['lambda' if f.name == 'lam' else f.name for f in fields(ExperimentConfig)]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        """Validate a parsed document; ConfigError names the offending key"""
        if not isinstance(data, dict):
            raise ConfigError("Experiment document must be a mapping")
        allowed = cls._document_keys()
        for key in data:
            if key not in allowed:
                raise ConfigError(f"Unknown key '{key}'", key=key)
        if 'command' not in data:
            raise ConfigError("Missing required key 'command'", key='command')
        command = data['command']
        if command not in COMMANDS:
            raise ConfigError(f"Unknown command {command!r}, expected one of {list(COMMANDS)}", key='command')

        model = data.get('model', {})
        if not isinstance(model, dict):
            raise ConfigError("'model' must be a mapping", key='model')
        if not model and command != 'wimp':
            raise ConfigError("Missing required key 'model'", key='model')

        lam = _number(data['lambda'], 'lambda') if data.get('lambda') is not None else None
        lambda_grid = expand_grid(data['lambda_grid']) if 'lambda_grid' in data else []
        if 'lambda_grid' in data and not lambda_grid:
            raise ConfigError("'lambda_grid' must be nonempty", key='lambda_grid')

        N = _integer(data['N'], 'N', 2) if data.get('N') is not None else None
        N_list = [_integer(value, 'N_list', 2) for value in data.get('N_list', [])]
        if any(b <= a for a, b in zip(N_list, N_list[1:])):
            raise ConfigError("'N_list' must be increasing", key='N_list')

        form = data.get('form', 'eq1')
        if form not in ('eq1', 'eq2'):
            raise ConfigError(f"'form' must be eq1 or eq2, got {form!r}", key='form')

        window = cls._pair(data.get('window'), 'window', integer=True)
        spectrum_window = cls._pair(data.get('spectrum_window'), 'spectrum_window', integer=False)

        _check_keys(data.get('search', {}), SEARCH_KEYS, 'search')
        search = dict(data.get('search', {}))
        if 'r_grid' in search:
            search['r_grid'] = [_integer(r, 'search.r_grid', 1) for r in search['r_grid']]
            if not search['r_grid']:
                raise ConfigError("'search.r_grid' must be nonempty", key='search.r_grid')
        if 'kinds' in search and (not isinstance(search['kinds'], list) or not search['kinds']):
            raise ConfigError("'search.kinds' must be a nonempty list", key='search.kinds')

        _check_keys(data.get('perturbation', {}), PERTURBATION_KEYS, 'perturbation')
        perturbation = dict(data.get('perturbation', {}))

        _check_keys(data.get('thresholds', {}), THRESHOLD_KEYS, 'thresholds')
        thresholds = {key: _number(value, f"thresholds.{key}") for key, value in data.get('thresholds', {}).items()}

        return cls(
            command=command,
            model=model,
            lam=lam,
            lambda_grid=lambda_grid,
            N=N,
            N_list=N_list,
            form=form,
            window=window,
            spectrum_window=spectrum_window,
            search=search,
            n0=_integer(data['n0'], 'n0') if data.get('n0') is not None else None,
            perturbation=perturbation,
            thresholds=thresholds,
            output=data.get('output'),
            threads=_integer(data['threads'], 'threads', 1) if data.get('threads') is not None else None,
            seed=_integer(data.get('seed', 0), 'seed'),
            tol=_number(data['tol'], 'tol') if data.get('tol') is not None else None,
        )

    @staticmethod
    def _pair(value: Any, key: str, integer: bool) -> Optional[List]:
        if value is None:
            return None
        if not isinstance(value, list) or len(value) != 2:
            raise ConfigError(f"'{key}' must be a [lo, hi] pair", key=key)
        convert = (lambda v: _integer(v, key)) if integer else (lambda v: _number(v, key))
        lo, hi = convert(value[0]), convert(value[1])
        if not lo < hi:
            raise ConfigError(f"'{key}' must satisfy lo < hi", key=key)
        return [lo, hi]

    @classmethod
    def from_file(cls, path: str) -> 'ExperimentConfig':
        """Parse a JSON experiment document"""
        with open(path, 'r') as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"Cannot parse experiment file {path}: {e}")
        logger.debug(f"Loaded experiment document {Path(path).name}")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        """Canonical document; from_dict(to_dict()) reproduces the config"""
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None or value == [] or value == {}:
                continue
            data['lambda' if f.name == 'lam' else f.name] = copy.deepcopy(value)
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def threshold(self, key: str, settings: Dict[str, Any]) -> float:
        """Experiment override, else the tool-wide default"""
        if key in self.thresholds:
            return self.thresholds[key]
        defaults = {
            'residual_rms': settings['scan']['residual_rms'],
            'beta_cut': settings['scan']['beta_cut'],
            'certificate': settings['certificate']['threshold'],
            'c1_cap': settings['classify']['c1_cap'],
            'min_sum': settings['classify']['min_sum'],
            'min_decade_increase': settings['classify']['min_decade_increase'],
        }
        return float(defaults[key])
