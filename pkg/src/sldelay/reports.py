"""Deterministic CSV/JSON writers shared by the library and the CLI.

Floats are rendered with Python's repr (shortest string that round-trips
the exact double, at most 17 significant digits), lines end with "\n",
and files are written to a temporary sibling then renamed, so a rerun on
identical inputs produces bit-identical bytes and a crash never leaves a
truncated artifact behind.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

__all__ = ["fmt", "render_csv", "render_json", "write_csv", "write_json"]


def fmt(value):
    """Deterministic text form of a cell; None becomes the empty field."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        # numpy float scalars subclass float but repr as np.float64(...)
        return repr(float(value))
    if isinstance(value, (int, str)):
        return str(value)
    # numpy scalars land here
    try:
        return repr(float(value))
    except (TypeError, ValueError):
        return str(value)


def _replace_into(path, text):
    path = Path(path)
    tmp = path.parent / (path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def render_csv(columns, rows, comments=(), trailing_comments=()):
    """CSV text: '#' comment lines, one header line, rows, trailing comments.

    Cells must not contain commas or newlines; every schema written by
    this package is numeric or a bare word, so no quoting is needed.
    """
    lines = ["# " + c for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    lines.extend("# " + c for c in trailing_comments)
    return "\n".join(lines) + "\n"


def write_csv(path, columns, rows, comments=(), trailing_comments=()):
    _replace_into(path, render_csv(columns, rows, comments, trailing_comments))


def render_json(obj):
    """Canonical JSON text (sorted keys, two-space indent)."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    _replace_into(path, render_json(obj))
