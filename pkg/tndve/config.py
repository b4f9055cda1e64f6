"""
Configuration layering: built-in defaults < environment (.env) < config file < CLI flags.
"""
import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import psutil
import yaml
from dotenv import load_dotenv

from .errors import ConfigError

logger = logging.getLogger(__name__)

# Load .env from the working directory if present
load_dotenv()

DEFAULT_DATABASE_URL = "sqlite:///./tndve_runs.db"

DEFAULT_CONFIG: Dict[str, Any] = {
    'seed': 20240101,
    'workers': None,
    'level': 0.95,
    'ci': 'sandwich',
    'ci_scale': 'natural',
    'boot_b': 500,
    'reps': 1000,
    'scenarios': [1, 2, 3, 4, 5, 6, 7, 8],
    'misspec': 'none',
    'n': None,
    'estimators': None,
    'truth_method': 'auto',
    'out_dir': 'tndve_output',
    'database_url': None,
    'design': 'tnd',
    'estimator': 'om',
    'omega': 1.0,
    'points': 41,
    'q_col': None,
    'col_v': 'v',
    'col_y': 'y',
    'cols_x': [],
    'drop_missing': False,
    'om_form': 'plugin',
    'ratio_model': 'logistic',
    'scenario': None,
    'data': None,
    'eta': 0.0,
    'covariates': None,
    'excel': False,
    'latent': False,
    'tested': False,
    'replicate': 0,
    'n_oracle': 2000000,
}


def default_workers() -> int:
    """Number of physical cores, or 1 when it cannot be determined."""
    try:
        return psutil.cpu_count(logical=False) or 1
    except Exception:
        return 1


def env_config() -> Dict[str, Any]:
    """Values provided through the environment (TNDVE_SEED, TNDVE_WORKERS, TNDVE_DATABASE_URL)."""
    values: Dict[str, Any] = {}
    seed = os.getenv('TNDVE_SEED')
    if seed:
        try:
            values['seed'] = int(seed)
        except ValueError:
            raise ConfigError(f"TNDVE_SEED must be an integer, got {seed!r}")
    workers = os.getenv('TNDVE_WORKERS')
    if workers:
        try:
            values['workers'] = int(workers)
        except ValueError:
            raise ConfigError(f"TNDVE_WORKERS must be an integer, got {workers!r}")
    url = os.getenv('TNDVE_DATABASE_URL')
    if url:
        values['database_url'] = url
    return values


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """Read a JSON or YAML config file into a dict.

    Args:
        path: File path; ``None`` returns an empty dict.

    Returns:
        The parsed mapping.
    """
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(p, 'r', encoding='utf-8') as f:
            if p.suffix.lower() in ('.yml', '.yaml'):
                data = yaml.safe_load(f) or {}
            else:
                data = json.load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot parse config file {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping")
    logger.info(f"Loaded config file {path}")
    return data


def resolve_config(cli_values: Optional[Dict[str, Any]] = None,
                   file_values: Optional[Dict[str, Any]] = None,
                   defaults: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Merge configuration layers; ``None`` CLI values mean "not given".

    Unknown keys in the config file are rejected; the ``scenario`` key may hold a
    mapping of custom ScenarioParams fields.
    """
    resolved = copy.deepcopy(defaults if defaults is not None else DEFAULT_CONFIG)
    file_values = file_values or {}
    unknown = sorted(set(file_values) - set(resolved))
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
    for layer in (env_config(), file_values, cli_values or {}):
        for key, value in layer.items():
            if value is None:
                continue
            resolved[key] = value
    if not resolved.get('workers'):
        resolved['workers'] = default_workers()
    return resolved
