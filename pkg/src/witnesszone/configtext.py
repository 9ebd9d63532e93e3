"""Minimal indentation-based configuration syntax.

Policy and scenario files use the same small format: ``key: value`` lines,
nested mappings introduced by ``key:`` followed by a consistently indented
block, and block sequences of ``- item`` lines.  This is a strict subset
of common human-readable config syntax; anything outside the subset
(tabs, inline collections, duplicate keys) is rejected with a line-number
error.

Scalars parse to bool (``true``/``false``), int, or float where the text
is numeric; unit-suffixed values such as ``2s`` or ``20m`` are kept as
strings, and consumers coerce them with :func:`seconds` / :func:`meters`.
"""

from __future__ import annotations

import re
from typing import Any

__all__ = [
    "ConfigSyntaxError",
    "parse_config_text",
    "emit_config",
    "seconds",
    "meters",
]


class ConfigSyntaxError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_NUMBER_RE = re.compile(r"^-?\d+(\.\d+)?([eE][+-]?\d+)?$")
_SUFFIXED_RE = re.compile(r"^(-?\d+(\.\d+)?)([a-zA-Z]+)$")


def _parse_scalar(text: str) -> Any:
    if text == "true":
        return True
    if text == "false":
        return False
    if _NUMBER_RE.match(text):
        if re.match(r"^-?\d+$", text):
            return int(text)
        return float(text)
    return text


def seconds(value: Any) -> float:
    """Coerce a scalar or an ``<n>s`` string to seconds."""
    if isinstance(value, bool):
        raise ValueError(f"expected a duration, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = _SUFFIXED_RE.match(str(value))
    if m and m.group(3) == "s":
        return float(m.group(1))
    raise ValueError(f"expected a duration like '2s', got {value!r}")


def meters(value: Any) -> float:
    """Coerce a scalar or an ``<n>m`` string to meters."""
    if isinstance(value, bool):
        raise ValueError(f"expected a distance, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = _SUFFIXED_RE.match(str(value))
    if m and m.group(3) == "m":
        return float(m.group(1))
    raise ValueError(f"expected a distance like '20m', got {value!r}")


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse a config document into nested dicts/lists/scalars."""
    lines: list[tuple[int, int, str]] = []  # (line_no, indent, content)
    for i, raw in enumerate(text.splitlines(), start=1):
        if "\t" in raw:
            raise ConfigSyntaxError(i, "tabs are not allowed")
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip(" "))
        lines.append((i, indent, stripped))
    if not lines:
        raise ConfigSyntaxError(0, "empty document")
    if lines[0][1] != 0:
        raise ConfigSyntaxError(lines[0][0], "top level must not be indented")
    value, next_idx = _parse_block(lines, 0, 0)
    if next_idx != len(lines):
        raise ConfigSyntaxError(lines[next_idx][0], "unexpected dedent")
    if not isinstance(value, dict):
        raise ConfigSyntaxError(lines[0][0], "top level must be a mapping")
    return value


def _parse_block(lines, start: int, indent: int):
    """Parse one block (mapping or sequence) at the given indent level."""
    line_no, _, content = lines[start]
    if content.startswith("- "):
        return _parse_sequence(lines, start, indent)
    return _parse_mapping(lines, start, indent)


def _parse_sequence(lines, start: int, indent: int):
    items: list[Any] = []
    idx = start
    while idx < len(lines):
        line_no, ind, content = lines[idx]
        if ind < indent:
            break
        if ind > indent:
            raise ConfigSyntaxError(line_no, "unexpected indent in sequence")
        if not content.startswith("- "):
            raise ConfigSyntaxError(line_no, "cannot mix keys and sequence items")
        items.append(_parse_scalar(content[2:].strip()))
        idx += 1
    return items, idx


def _parse_mapping(lines, start: int, indent: int):
    mapping: dict[str, Any] = {}
    idx = start
    while idx < len(lines):
        line_no, ind, content = lines[idx]
        if ind < indent:
            break
        if ind > indent:
            raise ConfigSyntaxError(line_no, "unexpected indent")
        if content.startswith("- "):
            raise ConfigSyntaxError(line_no, "cannot mix sequence items and keys")
        if ":" not in content:
            raise ConfigSyntaxError(line_no, f"expected 'key: value', got {content!r}")
        key, _, rest = content.partition(":")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigSyntaxError(line_no, f"invalid key {key!r}")
        if key in mapping:
            raise ConfigSyntaxError(line_no, f"duplicate key {key!r}")
        rest = rest.strip()
        if rest:
            mapping[key] = _parse_scalar(rest)
            idx += 1
            continue
        # nested block: the next deeper line opens it
        if idx + 1 >= len(lines) or lines[idx + 1][1] <= indent:
            raise ConfigSyntaxError(line_no, f"key {key!r} has no value")
        child_indent = lines[idx + 1][1]
        mapping[key], idx = _parse_block(lines, idx + 1, child_indent)
    return mapping, idx


def _emit_scalar(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def emit_config(mapping: dict[str, Any], indent: int = 4) -> str:
    """Serialize nested dicts/lists/scalars back to the config syntax."""
    out: list[str] = []
    _emit_block(mapping, 0, indent, out)
    return "\n".join(out) + "\n"


def _emit_block(value: Any, level: int, indent: int, out: list[str]) -> None:
    pad = " " * (level * indent)
    if isinstance(value, dict):
        for key, child in value.items():
            if isinstance(child, (dict, list)):
                out.append(f"{pad}{key}:")
                _emit_block(child, level + 1, indent, out)
            else:
                out.append(f"{pad}{key}: {_emit_scalar(child)}")
    elif isinstance(value, list):
        for item in value:
            out.append(f"{pad}- {_emit_scalar(item)}")
    else:
        raise ValueError("top-level value must be a mapping or sequence")
