"""
CSV / JSON serialization of run records.

Both formats carry the same rows in the same column order; values are
formatted so that output bytes depend only on the record contents.
"""
import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable

METRIC_COLUMNS = (
    "command", "n", "seed", "metric", "param", "analytic", "empirical",
    "trials", "bound", "passed", "note",
)

TABLE1_COLUMNS = (
    "command", "n", "seed", "protocol", "cheat_sensitive",
    "identified_j_rate", "identified_j_analytic", "detection_rate", "detection_analytic",
    "leakage_bits", "data_bits", "interrogation_gain", "passed",
)

FORMATS = ("csv", "json")


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, float):
        return float(f"{value:.12g}")
    return value


def to_csv(columns: Iterable[str], rows: Iterable[dict]) -> str:
    columns = list(columns)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return buf.getvalue()


def to_json(command: str, config: dict, columns: Iterable[str], rows: Iterable[dict]) -> str:
    columns = list(columns)
    payload = {
        "command": command,
        "config": {k: _jsonable(v) for k, v in config.items()},
        "columns": columns,
        "rows": [{c: _jsonable(row.get(c)) for c in columns} for row in rows],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def render(record, fmt: str = "csv") -> str:
    """Serialize anything exposing ``command``, ``config``, ``columns`` and ``rows``."""
    if fmt == "csv":
        return to_csv(record.columns, record.rows)
    if fmt == "json":
        return to_json(record.command, record.config, record.columns, record.rows)
    raise ValueError(f"unknown output format {fmt!r}; choose from {FORMATS}")


def write_record(record, path: str = None, fmt: str = "csv") -> str:
    """Render ``record`` and write it to ``path`` when given; returns the text."""
    text = render(record, fmt)
    if path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    return text
