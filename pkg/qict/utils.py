import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Sequence, Tuple, TypeVar

import numpy as np

from qict.errors import ScenarioParseError

T = TypeVar("T")
R = TypeVar("R")


def format_number(value: Any) -> str:
    """Fixed, locale-free number formatting so reruns are byte-identical"""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV table, numbers formatted with format_number"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else format_number(cell) for cell in row])
    return path


def write_fringe_csv(path: Path, record) -> Path:
    """Fringe record: a metadata row (axis_unit, kind) then axis, expected, sampled"""
    path.parent.mkdir(parents=True, exist_ok=True)
    sampled = record.sampled if record.sampled is not None else [None] * len(record.scan_axis)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["axis_unit", "kind"])
        writer.writerow([record.axis_unit, record.kind.value])
        writer.writerow(["axis", "expected", "sampled"])
        for axis, expected, counts in zip(record.scan_axis, record.expected, sampled):
            writer.writerow([format_number(axis), format_number(expected),
                             "" if counts is None else format_number(counts)])
    return path


def write_matrix_csv(path: Path, matrix: np.ndarray) -> Path:
    """Row-major matrix without header"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for row in np.asarray(matrix):
            writer.writerow([format_number(v) for v in row])
    return path


def write_pgm(path: Path, matrix: np.ndarray) -> Path:
    """8-bit binary PGM (P5), scaled so the maximum maps to 255"""
    values = np.asarray(matrix, dtype=float)
    peak = values.max() if values.size else 0.0
    scaled = np.zeros(values.shape) if peak <= 0 else np.clip(values / peak, 0.0, 1.0) * 255.0
    pixels = np.rint(scaled).astype(np.uint8)
    height, width = pixels.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes(order="C"))
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no infinities; keep them readable
        if math.isinf(value) or math.isnan(value):
            return format_number(value)
        return float(format_number(value))
    return value


def write_summary(path: Path, summary: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return path


def parse_override(text: str) -> Tuple[str, Any]:
    """Split ``a.b.c=value``; the value parses as JSON, falling back to a raw string"""
    if "=" not in text:
        raise ScenarioParseError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key or any(not part for part in key.split(".")):
        raise ScenarioParseError(f"override {text!r} has an empty key segment")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(document: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Set dotted-path keys in a nested scenario document (in place); list indices are allowed"""
    for text in overrides:
        key, value = parse_override(text)
        try:
            _set_path(document, key, value)
        except (IndexError, TypeError, AttributeError) as exc:
            raise ScenarioParseError(f"override {key!r} does not match the scenario structure: {exc}")
    return document


def _set_path(document: Dict[str, Any], key: str, value: Any):
    parts = key.split(".")
    node: Any = document
    for part in parts[:-1]:
        if isinstance(node, list):
            node = node[_list_index(part, key)]
        else:
            if not isinstance(node.get(part), (dict, list)):
                node[part] = {}
            node = node[part]
    last = parts[-1]
    if isinstance(node, list):
        node[_list_index(last, key)] = value
    else:
        node[last] = value


def _list_index(part: str, key: str) -> int:
    try:
        return int(part)
    except ValueError:
        raise ScenarioParseError(f"override {key!r}: {part!r} is not a list index")


def parallel_map(func: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """Order-preserving map, on a thread pool when threads > 1"""
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]
