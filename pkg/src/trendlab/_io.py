"""Small serialization helpers shared by the file-format owners."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .trend import DataError


def fmt_float(x: float | None) -> str:
    # repr round-trips exactly, which keeps artifacts byte-stable across runs
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def parse_float(text: str) -> float | None:
    text = text.strip()
    return None if text == "" else float(text)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> int:
    path = Path(path)
    n = 0
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(row)
                n += 1
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    return n


def read_csv(path: str | Path, header: Sequence[str]) -> list[tuple[int, dict[str, str]]]:
    """Read a CSV whose header must match exactly; returns (line_no, row) pairs."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if [h.strip() for h in got] != list(header):
            raise DataError(f"{path}:1: header {got!r} does not match {list(header)!r}")
        out = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            out.append((line_no, dict(zip(header, row))))
    return out


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    path = Path(path)
    n = 0
    try:
        with path.open("w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, ensure_ascii=False, separators=(", ", ": ")))
                fh.write("\n")
                n += 1
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    return n


def read_jsonl(path: str | Path) -> list[tuple[int, dict]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    out = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{line_no}: expected a JSON object")
            out.append((line_no, obj))
    return out


def write_json(path: str | Path, obj: object) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
