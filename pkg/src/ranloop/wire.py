"""Canonical text encodings for everything that crosses a file or API boundary.

One rule everywhere: floats are rendered with exactly 6 fractional digits so
that exports, API payloads, and traces are byte-stable for identical inputs
(golden-file friendly). Dict key order is preserved as authored, which the
producers keep fixed.
"""

from __future__ import annotations

import math
from typing import Any, Iterable, Iterator

FLOAT_DIGITS = 6


def format_value(v: float) -> str:
    """Render a number with exactly 6 fractional digits."""
    if isinstance(v, float) and not math.isfinite(v):
        raise ValueError(f"non-finite value not representable: {v}")
    return f"{v:.{FLOAT_DIGITS}f}"


def dumps(obj: Any) -> str:
    """Serialize to canonical JSON: fixed float formatting, no whitespace drift."""
    parts: list[str] = []
    _encode(obj, parts)
    return "".join(parts)


def _encode(obj: Any, parts: list[str]) -> None:
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(format_value(obj))
    elif isinstance(obj, str):
        parts.append(_encode_str(obj))
    elif isinstance(obj, dict):
        parts.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                parts.append(",")
            if not isinstance(k, str):
                raise TypeError(f"non-string key: {k!r}")
            parts.append(_encode_str(k))
            parts.append(":")
            _encode(v, parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, v in enumerate(obj):
            if i:
                parts.append(",")
            _encode(v, parts)
        parts.append("]")
    else:
        raise TypeError(f"unencodable type {type(obj).__name__}: {obj!r}")


_ESCAPES = {
    '"': '\\"',
    "\\": "\\\\",
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
    "\b": "\\b",
    "\f": "\\f",
}


def _encode_str(s: str) -> str:
    out = ['"']
    for ch in s:
        esc = _ESCAPES.get(ch)
        if esc is not None:
            out.append(esc)
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def dump_jsonl(records: Iterable[Any]) -> str:
    """One canonical JSON object per line."""
    return "".join(dumps(r) + "\n" for r in records)


def load_jsonl(text: str) -> Iterator[Any]:
    import json

    for line in text.splitlines():
        line = line.strip()
        if line:
            yield json.loads(line)
