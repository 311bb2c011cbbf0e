import csv
import io
import json
import logging
import os
from fractions import Fraction

from utils.error_utils import ConfigValidationError
from utils.exact_utils import format_rational

RECORD_HEADERS = [
    "step", "primary", "primary_index", "partner", "partner_index",
    "level", "lo", "hi", "evidence",
]
SIGMA_HEADERS = ["x", "class", "level", "value"]
PLOT_HEADERS = ["x", "fx"]

EXPORT_FORMATS = ("jsonl", "csv")


def _csv_bytes(headers, rows):
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=headers, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue().encode("utf-8")


def _write_bytes(data, file_path):
    directory = os.path.dirname(file_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(file_path, mode="wb") as file:
        file.write(data)
    logging.info(f"Wrote {len(data)} bytes to {file_path}")
    return file_path


# ! --- Pair records ---


def export_records(records, fmt="jsonl"):
    """Serialize pair records in step order. Output is byte-stable."""
    if fmt == "csv":
        return _csv_bytes(RECORD_HEADERS, [r.to_row() for r in records])
    if fmt == "jsonl":
        lines = []
        for record in records:
            row = record.to_row()
            obj = {key: (int(row[key]) if key in ("step", "primary_index", "partner_index", "level") else row[key])
                   for key in RECORD_HEADERS}
            detail = record.evidence.detail()
            if detail:
                obj["evidence_detail"] = detail
            lines.append(json.dumps(obj, separators=(",", ":"), ensure_ascii=False))
        return "".join(line + "\n" for line in lines).encode("utf-8")
    raise ConfigValidationError(f"unknown export format {fmt!r}; use one of {', '.join(EXPORT_FORMATS)}")


def export(state, fmt="jsonl"):
    return export_records(state.records, fmt)


def save_export(state, fmt, file_path):
    return _write_bytes(export(state, fmt), file_path)


# ! --- Sigma tables ---


def sigma_table_bytes(rows):
    return _csv_bytes(SIGMA_HEADERS, [row.to_row() for row in rows])


def save_sigma_table(rows, file_path):
    return _write_bytes(sigma_table_bytes(rows), file_path)


# ! --- Plot data ---


def plot_rows(state):
    """(x, f(x)) for every rational point the construction has processed."""
    rows = []
    for point in state.history:
        if not isinstance(point, Fraction):
            continue
        image = state.image(point)
        if image is None:
            continue
        rows.append({"x": format_rational(point), "fx": format_rational(image)})
    return rows


def plot_data_bytes(state):
    return _csv_bytes(PLOT_HEADERS, plot_rows(state))


def save_plot_data(state, file_path):
    return _write_bytes(plot_data_bytes(state), file_path)


def load_csv_rows(file_path):
    """Loads a previously written export or table."""
    if os.path.exists(file_path):
        with open(file_path, mode="r", newline="", encoding="utf-8") as file:
            reader = csv.DictReader(file)
            return list(reader)
    return []
