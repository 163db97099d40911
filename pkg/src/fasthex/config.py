"""``key = value`` config files for parameter dataclasses.

Values are SI (angles in radians). A value with commas is read as a list of
floats. Lines starting with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path
from typing import Any

_SECTION = "params"


def parse_kv(text: str) -> dict[str, Any]:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string(f"[{_SECTION}]\n" + text)
    out: dict[str, Any] = {}
    for key, raw in cp[_SECTION].items():
        raw = raw.strip()
        if raw.lower() in ("true", "false"):
            out[key] = raw.lower() == "true"
        elif "," in raw:
            out[key] = tuple(float(x) for x in raw.split(",") if x.strip())
        else:
            try:
                out[key] = int(raw)
            except ValueError:
                try:
                    out[key] = float(raw)
                except ValueError:
                    out[key] = raw
    return out


def dump_kv(obj) -> str:
    lines = []
    for f in dataclasses.fields(obj):
        val = getattr(obj, f.name)
        if isinstance(val, (tuple, list)):
            val = ", ".join(repr(float(x)) for x in val)
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"


def load_dataclass(cls, path: str | Path | None = None, **overrides):
    """Instantiate ``cls`` from its defaults, a config file, then ``overrides``."""
    values: dict[str, Any] = {}
    if path is not None:
        values.update(parse_kv(Path(path).read_text()))
    values.update(overrides)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**values)


def save_dataclass(obj, path: str | Path) -> None:
    Path(path).write_text(dump_kv(obj))
