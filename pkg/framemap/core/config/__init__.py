"""
Run settings.

``default.yaml`` next to this module is the one place defaults live. Layers are
applied in order: defaults, FRAMEMAP_CONFIG, ``--config``, ``--set`` overrides,
then FRAMEMAP_OUTPUT_DIR / FRAMEMAP_WORKERS. Every layer is checked against the
defaults so a misspelt ``sigma_m`` fails loudly instead of being ignored.
"""
import copy
import logging
import os
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import yaml

from framemap.core.exceptions import ConfigurationError

ENV_CONFIG = "FRAMEMAP_CONFIG"
ENV_LOG_LEVEL = "FRAMEMAP_LOG_LEVEL"
ENV_LOG_DIR = "FRAMEMAP_LOG_DIR"
ENV_OUTPUT_DIR = "FRAMEMAP_OUTPUT_DIR"
ENV_WORKERS = "FRAMEMAP_WORKERS"

DEFAULTS_FILE = Path(__file__).resolve().parent / "default.yaml"

Settings = dict[str, Any]

_loaded: Optional[Settings] = None

# logger.py imports the ENV_ names from here, so get_logger is not available
_log = logging.getLogger("framemap.core.config")


def _deep_merge(base: Mapping, layer: Mapping) -> Settings:
    """``layer`` on top of ``base``; nested sections merge, everything else replaces."""
    merged = copy.deepcopy(dict(base))
    for key, value in layer.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _read_yaml(path: Path, what: str) -> Settings:
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigurationError("cannot read %s %s: %s" % (what, path, e)) from None
    except yaml.YAMLError as e:
        raise ConfigurationError("%s %s is not valid YAML: %s" % (what, path, e)) from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigurationError("%s %s must be a mapping of sections" % (what, path))
    return doc


def _defaults() -> Settings:
    return _read_yaml(DEFAULTS_FILE, "default config")


def _check_layer(layer: Mapping, reference: Mapping, origin: str) -> None:
    """Reject sections and keys that the defaults do not know."""
    for section, values in layer.items():
        if section not in reference:
            raise ConfigurationError(
                "%s: unknown section %r (known: %s)" % (origin, section, ", ".join(reference))
            )
        if not isinstance(values, Mapping):
            raise ConfigurationError("%s: section %r must be a mapping" % (origin, section))
        unknown = sorted(set(values) - set(reference[section]))
        if unknown:
            raise ConfigurationError(
                "%s: unknown key(s) in %r: %s" % (origin, section, ", ".join(map(str, unknown)))
            )


def _apply_environment(settings: Settings) -> None:
    output_dir = os.environ.get(ENV_OUTPUT_DIR, "").strip()
    if output_dir:
        settings["run"]["output_dir"] = output_dir
    workers = os.environ.get(ENV_WORKERS, "").strip()
    if workers:
        try:
            settings["run"]["workers"] = int(workers)
        except ValueError:
            raise ConfigurationError(
                "%s must be an integer, got %r" % (ENV_WORKERS, workers)
            ) from None


def load_config(override_path: Union[str, os.PathLike, None] = None) -> Settings:
    """
    Merged settings. The result without ``override_path`` is cached until
    ``reset_config``; asking for an override file always reloads.

    Raises:
        ConfigurationError: A file is missing or malformed, names an unknown
            section or key, or FRAMEMAP_WORKERS is not an integer.
    """
    global _loaded
    if _loaded is not None and override_path is None:
        return _loaded

    defaults = _defaults()
    settings = defaults
    layers = []
    env_file = os.environ.get(ENV_CONFIG, "").strip()
    if env_file:
        if Path(env_file).is_file():
            layers.append((Path(env_file), ENV_CONFIG))
        else:
            _log.warning("%s points to %s, which is not a file; ignoring it", ENV_CONFIG, env_file)
    if override_path is not None:
        path = Path(override_path)
        if not path.is_file():
            raise ConfigurationError("config file not found: %s" % path)
        layers.append((path, "config file"))
    for path, what in layers:
        layer = _read_yaml(path, what)
        _check_layer(layer, defaults, str(path))
        settings = _deep_merge(settings, layer)

    _apply_environment(settings)
    _loaded = settings
    return settings


def get_config(override_path: Union[str, os.PathLike, None] = None) -> Settings:
    """Same as ``load_config``; reads more naturally at call sites that only look."""
    return load_config(override_path)


def merge_overrides(settings: Mapping, overrides: Optional[Mapping]) -> Settings:
    """A copy of ``settings`` with ``overrides`` merged in; unknown keys raise."""
    if not overrides:
        return copy.deepcopy(dict(settings))
    _check_layer(overrides, settings, "override")
    return _deep_merge(settings, overrides)


def parse_override(text: str) -> Settings:
    """``"inference.sigma_m=0.4"`` -> ``{"inference": {"sigma_m": 0.4}}``; values are YAML."""
    dotted, sep, raw = text.partition("=")
    keys = [k.strip() for k in dotted.split(".")]
    if not sep or not all(keys):
        raise ConfigurationError("override must look like section.key=value, got %r" % text)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        value = raw
    nested: Settings = {keys[-1]: value}
    for key in reversed(keys[:-1]):
        nested = {key: nested}
    return nested


def reset_config() -> None:
    global _loaded
    _loaded = None
