"""``key=value`` pipeline configuration files."""
from __future__ import annotations

import dataclasses

from ..pipeline import PipelineConfig

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigFileError(ValueError):
    pass


def _convert(key: str, text: str, default, lineno: int):
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigFileError(f"line {lineno}: bad value for {key}: {exc}") from None


def parse_config(text: str) -> dict:
    """Typed overrides from config text; unknown keys and bad lines raise."""
    defaults = {f.name: f.default for f in dataclasses.fields(PipelineConfig)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigFileError(f"line {lineno}: expected key=value, got {body!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        key = key.replace("-", "_")
        if key not in defaults:
            raise ConfigFileError(f"line {lineno}: unknown key {key!r}")
        out[key] = _convert(key, value, defaults[key], lineno)
    return out


def load_config_file(path, **overrides) -> PipelineConfig:
    """Defaults, then file values, then ``overrides`` (e.g. CLI flags)."""
    with open(path) as fh:
        values = parse_config(fh.read())
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values)
