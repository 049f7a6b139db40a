"""Reporting utilities: JSON documents and CSV / JSON / markdown tables."""
import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, TextIO

SCHEMA = "v1"
FORMATS = ("json", "csv", "markdown")


def fraction_to_json(q) -> Any:
    """Integers plainly, other rationals as ``"n/d"``."""
    if isinstance(q, bool) or q is None:
        return q
    q = Fraction(q)
    if q.denominator == 1:
        return q.numerator
    return f"{q.numerator}/{q.denominator}"


def _plain(value: Any) -> Any:
    if isinstance(value, (Fraction, int)) and not isinstance(value, bool):
        return fraction_to_json(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "to_json"):
        return _plain(value.to_json())
    return value


def dumps(payload: Dict[str, Any]) -> str:
    doc = dict(_plain(payload))
    doc.setdefault("schema", SCHEMA)
    return json.dumps(doc, indent=2, sort_keys=True)


def emit(payload: Dict[str, Any], fmt: str = "json", out: Optional[TextIO] = None) -> None:
    """Print a command result; tables inside ``payload["rows"]`` honour csv / markdown."""
    rows = payload.get("rows")
    if fmt != "json" and isinstance(rows, list) and rows:
        columns = payload.get("columns") or list(rows[0].keys())
        print(render_table(rows, columns, fmt), end="", file=out)
        return
    print(dumps(payload), file=out)


def render_table(rows: Sequence[Dict[str, Any]], columns: Sequence[str], fmt: str) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown table format {fmt!r}")
    plain = [{c: _plain(row.get(c, "")) for c in columns} for row in rows]
    if fmt == "json":
        return dumps({"columns": list(columns), "rows": plain}) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in plain:
            writer.writerow([_cell(row[c]) for c in columns])
        return buf.getvalue()
    lines = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
    for row in plain:
        lines.append("| " + " | ".join(_cell(row[c]) for c in columns) + " |")
    return "\n".join(lines) + "\n"


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def write_table(rows: Iterable[Dict[str, Any]], columns: Sequence[str], out: Optional[Path],
                fmt: str = "csv") -> str:
    """Render the table and write it to ``out`` (parents created); returns the text."""
    text = render_table(list(rows), columns, fmt)
    if out:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8", newline="") as f:
            f.write(text)
    return text


def write_json(payload: Dict[str, Any], out: Path) -> None:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as f:
        f.write(dumps(payload) + "\n")
