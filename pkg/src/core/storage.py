"""
File helpers shared by every writer: deterministic JSON, pandas CSV and
consistent I/O error reporting.
"""
import json
import os
from pathlib import Path

import pandas as pd

from src.core.errors import DataError, StorageError

FLOAT_FORMAT = "%.17g"


def ensure_parent(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(path.parent, exc.strerror or str(exc)) from exc
    return path


def write_json(path, payload, indent=None):
    """Write JSON with a fixed layout so identical payloads give identical bytes."""
    path = ensure_parent(path)
    text = json.dumps(payload, indent=indent, sort_keys=False, allow_nan=False) + "\n"
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise StorageError(path, exc.strerror or str(exc)) from exc
    return path


def read_json(path):
    """Parse a JSON file; syntax errors report line and column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(path, exc.strerror or str(exc)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def write_csv(path, frame: pd.DataFrame, index=False):
    path = ensure_parent(path)
    try:
        frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as exc:
        raise StorageError(path, exc.strerror or str(exc)) from exc
    return path


def read_csv(path, **kwargs):
    path = Path(path)
    if not path.exists():
        raise StorageError(path, "file not found")
    try:
        return pd.read_csv(path, float_precision="round_trip", **kwargs)
    except OSError as exc:
        raise StorageError(path, exc.strerror or str(exc)) from exc


def default_data_dir():
    return Path(os.environ.get("TRIPLET_LAYOUT_DATA_DIR", "data"))
