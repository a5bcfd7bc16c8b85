"""Flat ``key = value`` config files.

Blank lines and lines starting with ``#`` or ``;`` are ignored. Keys are
normalised to lower case with dashes turned into underscores, so
``sigma-program`` and ``sigma_program`` are the same key.
"""
from __future__ import annotations

from pathlib import Path

from .errors import ConfigurationError


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def read_flat_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    out: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = line.split(sep, 1)
                break
        else:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key = normalize_key(key)
        if not key:
            raise ConfigurationError(f"{path}:{lineno}: empty key")
        out[key] = value.strip()
    return out


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"not a list of numbers: {text!r}") from exc
