"""Flat-file formats: fixture text for families, weights and coefficients; CSV/JSON tables.

Floats are written with ``repr`` so files round-trip exactly and identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .grid import DyadicInterval, GridFunction
from .norms import TestingReport
from .operators import CoefficientFamily
from .sparse import SparseCollection
from .weights import Weight


def _lines(text: str):
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            yield line


def _depth_header(text: str) -> int | None:
    for raw in text.splitlines():
        parts = raw.strip().lstrip("#").split()
        if raw.strip().startswith("#") and len(parts) == 2 and parts[0] == "depth":
            return int(parts[1])
    return None


def dump_family(S: SparseCollection) -> str:
    """One ``level index`` line per member, after a ``# depth L`` header."""
    body = "".join(f"{Q.level} {Q.index}\n" for Q in S.members)
    return f"# depth {S.depth}\n" + body


def load_family(text: str, depth: int | None = None) -> SparseCollection:
    members = []
    for line in _lines(text):
        level, index = line.split()
        members.append(DyadicInterval(int(level), int(index)))
    depth = depth if depth is not None else _depth_header(text)
    if depth is None:
        depth = max((Q.level for Q in members), default=0)
    return SparseCollection(depth, members)


def dump_weight(f: GridFunction) -> str:
    """Depth on the first line, then one cell value per line."""
    return f"{f.depth}\n" + "".join(f"{v!r}\n" for v in f.values.tolist())


def load_grid_function(text: str) -> GridFunction:
    lines = list(_lines(text))
    depth = int(lines[0])
    values = [float(x) for line in lines[1:] for x in line.split()]
    if len(values) != 1 << depth:
        raise ValueError(f"expected {1 << depth} values for depth {depth}, got {len(values)}")
    return GridFunction(values)


def load_weight(text: str) -> Weight:
    return Weight(load_grid_function(text).values)


def dump_coefficients(tau: CoefficientFamily) -> str:
    body = "".join(f"{Q.level} {Q.index} {v!r}\n" for Q, v in tau.items())
    return f"# depth {tau.collection.depth}\n" + body


def load_coefficients(text: str, depth: int | None = None) -> CoefficientFamily:
    entries = []
    for line in _lines(text):
        level, index, value = line.split()
        entries.append((DyadicInterval(int(level), int(index)), float(value)))
    depth = depth if depth is not None else _depth_header(text)
    if depth is None:
        depth = max((Q.level for Q, _ in entries), default=0)
    S = SparseCollection(depth, [Q for Q, _ in entries])
    return CoefficientFamily.from_mapping(S, dict(entries))


def dump_testing_report(report: TestingReport) -> str:
    """``side value`` header, then ``level index quotient`` per anchor."""
    lines = [f"# {report.side} {report.value!r}\n"]
    for Q, q in zip(report.collection.members, report.quotients.tolist()):
        lines.append(f"{Q.level} {Q.index} {q!r}\n")
    return "".join(lines)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def to_csv(rows: list[dict], columns=None) -> str:
    """CSV text with a header row and a fixed column order."""
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def to_json(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"


def write_table(rows: list[dict], path: str | None, fmt: str = "csv", columns=None, extra: dict | None = None) -> str:
    """Render rows as CSV or JSON; write to ``path`` when given and return the text."""
    if fmt == "csv":
        text = to_csv(rows, columns)
    elif fmt == "json":
        payload = {"rows": rows}
        if extra:
            payload.update(extra)
        text = to_json(payload)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path:
        Path(path).write_text(text)
    return text
