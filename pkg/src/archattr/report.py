"""Machine-readable JSON run reports.

Every report embeds the tool version, the fully resolved run configuration,
and all derived seeds, and contains no timestamps or environment state, so a
rerun with the same inputs is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def jsonable(value):
    """Recursively convert numpy scalars/arrays to plain Python values."""
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def build_report(command: str, config: dict, seeds: dict, payload: dict) -> dict:
    from . import __version__

    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "archattr", "version": __version__},
        "command": command,
        "config": jsonable(config),
        "seeds": jsonable(seeds),
        **jsonable(payload),
    }


def write_report(path: str | Path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8", newline="\n")
