"""File formats: point streams in, coresets and JSON reports out.

Two input formats, both line-oriented and streamed in file order:

* csv: one point per row, comma-separated coordinates, '.' decimal.
  With weighted=True the first column is the weight.
* sparse: whitespace-separated ``index:value`` pairs, 0-based indices.
  With weighted=True the first bare token (no colon) is the weight.

NaN/Inf anywhere is a data error carrying the 1-based row number.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterator
from pathlib import Path

import numpy as np

from .points import Point, dense, sparse
from .weighted import WeightedSet

__all__ = ["DataError", "ingest_stream", "read_points", "write_coreset",
           "write_report", "read_report"]


class DataError(Exception):
    """Unreadable or malformed input data."""


def _parse_float(tok: str, row: int) -> float:
    try:
        v = float(tok)
    except ValueError as e:
        raise DataError(f"row {row}: bad number {tok!r}") from e
    if not math.isfinite(v):
        raise DataError(f"row {row}: non-finite value {tok!r}")
    return v


def _csv_row(line: str, row: int, weighted: bool) -> tuple[float, np.ndarray]:
    toks = [t.strip() for t in line.split(",")]
    if weighted and len(toks) < 2:
        raise DataError(f"row {row}: weighted csv needs a weight plus coordinates")
    vals = [_parse_float(t, row) for t in toks if t != ""]
    if not vals:
        raise DataError(f"row {row}: empty row")
    if weighted:
        w, coords = vals[0], vals[1:]
        if w <= 0:
            raise DataError(f"row {row}: weight must be positive")
        if not coords:
            raise DataError(f"row {row}: no coordinates after weight")
        return w, np.asarray(coords)
    return 1.0, np.asarray(vals)


def _sparse_row(line: str, row: int, weighted: bool) -> tuple[float, list[tuple[int, float]]]:
    toks = line.split()
    w = 1.0
    pairs: list[tuple[int, float]] = []
    for pos, tok in enumerate(toks):
        if ":" not in tok:
            if weighted and pos == 0:
                w = _parse_float(tok, row)
                if w <= 0:
                    raise DataError(f"row {row}: weight must be positive")
                continue
            raise DataError(f"row {row}: expected index:value, got {tok!r}")
        idx_s, _, val_s = tok.partition(":")
        try:
            idx = int(idx_s)
        except ValueError as e:
            raise DataError(f"row {row}: bad index {idx_s!r}") from e
        if idx < 0:
            raise DataError(f"row {row}: negative index {idx}")
        pairs.append((idx, _parse_float(val_s, row)))
    return w, pairs


def ingest_stream(path: str | Path, fmt: str = "csv",
                  weighted: bool = False) -> Iterator[tuple[Point, float]]:
    """Yield (point, weight) in file order; point ids are 0-based row ranks."""
    if fmt not in ("csv", "sparse"):
        raise DataError(f"unknown format {fmt!r}")
    p = Path(path)
    if not p.is_file():
        raise DataError(f"no such file: {p}")
    pid = 0
    with p.open() as fh:
        for row, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                if fmt == "csv":
                    w, coords = _csv_row(line, row, weighted)
                    pt = dense(pid, coords)
                else:
                    w, pairs = _sparse_row(line, row, weighted)
                    pt = sparse(pid, pairs)
            except DataError:
                raise
            except ValueError as e:
                raise DataError(f"row {row}: {e}") from e
            pid += 1
            yield pt, w


def read_points(path: str | Path, fmt: str = "csv",
                weighted: bool = False) -> WeightedSet:
    pts: list[Point] = []
    ws: list[float] = []
    for pt, w in ingest_stream(path, fmt, weighted):
        pts.append(pt)
        ws.append(w)
    if not pts:
        raise DataError(f"{path}: no points")
    return WeightedSet(pts, np.asarray(ws))


def write_coreset(path: str | Path, S: WeightedSet, fmt: str = "csv") -> None:
    """Dump a weighted point set in the input format, weight first."""
    lines: list[str] = []
    if fmt == "csv":
        dim = max((p.max_index() + 1 for p in S.points), default=0)
        for p, w in zip(S.points, S.weights):
            coords = p.to_dense(dim)
            lines.append(",".join([repr(float(w))] + [repr(float(c)) for c in coords]))
    elif fmt == "sparse":
        for p, w in zip(S.points, S.weights):
            if p.is_dense:
                pairs = [(i, v) for i, v in enumerate(p.vec) if v != 0.0]
            else:
                pairs = list(zip(p.idx, p.val))
            toks = [repr(float(w))] + [f"{int(i)}:{float(v)!r}" for i, v in pairs]
            lines.append(" ".join(toks))
    else:
        raise DataError(f"unknown format {fmt!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_report(path: str | Path, report: dict) -> None:
    """Canonical JSON: sorted keys, fixed separators, trailing newline.

    Identical dicts serialize to identical bytes, which is what the
    determinism contract checks.
    """
    Path(path).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


def read_report(path: str | Path) -> dict:
    with Path(path).open() as fh:
        return json.load(fh)
