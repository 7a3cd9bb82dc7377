"""
Configuration management for smoothcheck.

Handles loading, merging, and overriding configuration from multiple sources:
1. Default configuration
2. JSON or YAML configuration files (partial files are merged into defaults)
3. Environment variables
4. Command-line arguments
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)


def default_config() -> dict:
    """Return default configuration."""
    return {
        "mesh": {
            # geometric predicates use tolerance_factor * h
            "tolerance_factor": 1e-12,
        },
        "qform": {"r_hat": 0.25},
        "safe_radius": {"gamma": 1.0},
        "smoothness": {
            "median_factor": 10.0,
            "sample_rule": "centroid",
            "jump_threshold": None,
            "magnitude_threshold": None,
        },
        "study": {
            "levels": 5,
            "base_divisions": 4,
            "rate_floor": 1e-13,
            "rate_tolerance": 0.25,
            "bounded_ratio": 1.5,
        },
        "runtime": {"threads": 1, "seed": 0},
        "logging": {"level": "WARNING"},
    }


def load_config(config_path: Optional[str]) -> dict:
    """
    Load configuration from a JSON or YAML file merged over the defaults.

    Args:
        config_path: Path to configuration file (``.json``, ``.yaml`` or ``.yml``)

    Returns:
        Configuration dictionary

    Raises:
        ConfigError: If the file cannot be parsed or is not a mapping
    """
    defaults = default_config()
    if config_path is None:
        return defaults

    path = Path(config_path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        logger.warning("Config file %s not found, using defaults", config_path)
        return defaults

    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            loaded = yaml.safe_load(text)
        else:
            loaded = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Error parsing config file {config_path}: {e}") from e

    if loaded is None:
        return defaults
    if not isinstance(loaded, dict):
        raise ConfigError(
            f"Config file {config_path} must contain a mapping, "
            f"got {type(loaded).__name__}"
        )
    return merge_config(defaults, loaded)


def set_nested(config: dict, dot_path: str, value: Any) -> None:
    """
    Set a nested dictionary key from a dot-separated path.

    Args:
        config: Configuration dictionary to modify
        dot_path: Dot-separated path (e.g., 'study.levels')
        value: Value to set

    Example:
        >>> config = {}
        >>> set_nested(config, 'study.levels', 6)
        >>> config
        {'study': {'levels': 6}}
    """
    parts = dot_path.split(".")
    current = config
    for part in parts[:-1]:
        if part not in current:
            current[part] = {}
        current = current[part]
    current[parts[-1]] = value


def get_nested(config: dict, dot_path: str, default: Any = None) -> Any:
    """
    Get a value from a nested dictionary using a dot-separated path.

    Example:
        >>> get_nested({'qform': {'r_hat': 0.25}}, 'qform.r_hat')
        0.25
        >>> get_nested({}, 'qform.r_hat', 'default')
        'default'
    """
    parts = dot_path.split(".")
    current = config
    for part in parts:
        if not isinstance(current, dict) or part not in current:
            return default
        current = current[part]
    return current


def _log_level(value: str) -> str:
    level = value.strip().upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ValueError(f"unknown log level {value}")
    return level


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise ValueError(f"must be >= 1, got {number}")
    return number


# Mapping from environment variable names to config dot paths.
ENV_OVERRIDE_PATHS = {
    "SMOOTHCHECK_THREADS": "runtime.threads",
    "SMOOTHCHECK_SEED": "runtime.seed",
    "SMOOTHCHECK_LOG_LEVEL": "logging.level",
    "SMOOTHCHECK_GAMMA": "safe_radius.gamma",
}

# Explicit type mapping for environment variable overrides
ENV_OVERRIDE_TYPES = {
    "runtime.threads": _positive_int,
    "runtime.seed": int,
    "logging.level": _log_level,
    "safe_radius.gamma": float,
}


def apply_env_overrides(config: dict, verbose: bool = True) -> None:
    """
    Apply environment variable overrides to configuration.

    Environment variables override configuration file values. Supported
    variables are defined in ENV_OVERRIDE_PATHS; values that fail conversion
    are skipped with a warning.

    Args:
        config: Configuration dictionary to modify in-place
        verbose: Whether to log messages about applied overrides

    Example:
        >>> os.environ['SMOOTHCHECK_THREADS'] = '4'
        >>> config = default_config()
        >>> apply_env_overrides(config, verbose=False)
        >>> config['runtime']['threads']
        4
    """
    for env_var, dot_path in ENV_OVERRIDE_PATHS.items():
        value = os.environ.get(env_var)
        if value is None:
            continue
        converter = ENV_OVERRIDE_TYPES.get(dot_path)
        if converter is not None:
            try:
                value = converter(value)
            except (ValueError, TypeError):
                logger.warning("Invalid value for %s=%s, skipping", env_var, value)
                continue

        set_nested(config, dot_path, value)
        if verbose:
            logger.info("Applied env override: %s -> %s", env_var, dot_path)


# Mapping from CLI argument names to config dot paths
CLI_OVERRIDE_PATHS = {
    "threads": "runtime.threads",
    "seed": "runtime.seed",
    "log_level": "logging.level",
    "gamma": "safe_radius.gamma",
    "median_factor": "smoothness.median_factor",
    "sample_rule": "smoothness.sample_rule",
    "jump_threshold": "smoothness.jump_threshold",
    "magnitude_threshold": "smoothness.magnitude_threshold",
    "levels": "study.levels",
    "divisions": "study.base_divisions",
}


def apply_cli_overrides(config: dict, args: dict) -> None:
    """
    Apply command-line argument overrides to configuration.

    CLI arguments override both config file and environment variables.

    Args:
        config: Configuration dictionary to modify in-place
        args: Dictionary of argument names to values (e.g., vars(namespace))
    """
    for dest, dot_path in CLI_OVERRIDE_PATHS.items():
        if dest in args and args[dest] is not None:
            set_nested(config, dot_path, args[dest])


def merge_config(base_config: dict, overrides: dict) -> dict:
    """
    Merge override configuration into base configuration.

    Creates a new dictionary without modifying the originals. Override
    values take precedence; nested dicts are merged recursively.

    Example:
        >>> base = {'study': {'levels': 5, 'base_divisions': 4}}
        >>> result = merge_config(base, {'study': {'levels': 6}})
        >>> result['study']
        {'levels': 6, 'base_divisions': 4}
    """
    result = {}
    for key in list(base_config.keys()) + [
        k for k in overrides.keys() if k not in base_config
    ]:
        if key in overrides and key in base_config:
            if isinstance(base_config[key], dict) and isinstance(overrides[key], dict):
                result[key] = merge_config(base_config[key], overrides[key])
            else:
                result[key] = overrides[key]
        elif key in overrides:
            result[key] = overrides[key]
        else:
            result[key] = base_config[key]
    return result


def build_config(
    config_path: Optional[str], cli_args: Optional[dict] = None, verbose: bool = True
) -> dict:
    """Defaults, then file, then environment, then command-line flags."""
    config = load_config(config_path)
    apply_env_overrides(config, verbose=verbose)
    if cli_args:
        apply_cli_overrides(config, cli_args)
    return config
