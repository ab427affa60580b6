"""Deterministic report emission.

JSON reports wrap the rows with the tool version and the effective
configuration; CSV reports are plain rows with a header. Identical inputs
produce byte-identical output: keys are sorted, floats are rendered by a
fixed rule, and no timestamps or environment data are included.
"""

import csv
import io
import json
from pathlib import Path

from ._version import __version__
from .errors import InvalidInputError
from .validation import check_choice

FORMATS = frozenset({"json", "csv"})


def _csv_cell(value):
    # 9 significant digits keeps CSV output stable and readable.
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    if value is None:
        return ""
    return str(value)


def render_report(rows, fmt="json", config=None):
    """Render rows to report text.

    Args:
        rows: List of dicts sharing the same keys; key order of the first
            row fixes the CSV column order.
        fmt: "json" or "csv".
        config: Optional dict echoed into the JSON envelope.

    Returns:
        The report as a string (ends with a newline).
    """
    check_choice(fmt, "fmt", FORMATS)
    rows = list(rows)
    if rows:
        keys = list(rows[0].keys())
        for r in rows:
            if list(r.keys()) != keys:
                raise InvalidInputError("all report rows must share the same keys")
    if fmt == "json":
        doc = {
            "tool_version": __version__,
            "config": config or {},
            "rows": rows,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if rows:
        writer.writerow(keys)
        for r in rows:
            writer.writerow([_csv_cell(r[k]) for k in keys])
    return buf.getvalue()


def emit_report(rows, fmt="json", destination=None, config=None):
    """Render rows and write them to a file (or just return the text).

    Args:
        rows: Report rows (see render_report).
        fmt: "json" or "csv".
        destination: Path to write to; None or "-" returns the text only.
        config: Optional config dict for the JSON envelope.

    Returns:
        The rendered text.
    """
    text = render_report(rows, fmt=fmt, config=config)
    if destination is not None and destination != "-":
        Path(destination).write_text(text)
    return text
