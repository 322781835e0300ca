"""Key=value text configuration files (one `key = value` pair per line,
`#` comments, blank lines ignored)."""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError


def read_kv(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: key {key!r} given twice")
        out[key] = value
    return out


def parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError as e:
        raise ConfigError(f"{key}: expected integer, got {value!r}") from e


def parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError as e:
        raise ConfigError(f"{key}: expected number, got {value!r}") from e


def parse_bool(key: str, value: str) -> bool:
    low = value.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {value!r}")


def parse_int_list(key: str, value: str) -> tuple[int, ...]:
    items = [v.strip() for v in value.split(",") if v.strip()]
    if not items:
        raise ConfigError(f"{key}: expected a comma-separated integer list")
    return tuple(parse_int(key, v) for v in items)


def parse_weighted_names(key: str, value: str) -> dict[str, float]:
    """'name:weight,name:weight' pairs."""
    out: dict[str, float] = {}
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ConfigError(f"{key}: expected name:weight, got {item!r}")
        name, w = item.split(":", 1)
        out[name.strip()] = parse_float(key, w.strip())
    if not out:
        raise ConfigError(f"{key}: no name:weight pairs given")
    return out
