"""Parsers for the solver's plain-text output formats.

Three formats are consumed, exactly as the solver documents them; nothing
here reaches into solver internals.

* snapshot: '#' comment lines, then a header line ``M a b t``, then M rows
  of M decimal values;
* energy csv: '#' comments, header ``n,t,linf,E_h,E_c,decay_residual,fp_iters``;
* gamma-sweep csv: '#' comments, header ``alpha,gamma,error``.

Parse failures raise SchemaError carrying the file and line number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SchemaError(ValueError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def _content_lines(path) -> list[tuple[int, str]]:
    with open(path) as fh:
        raw = fh.readlines()
    return [
        (i, ln.strip())
        for i, ln in enumerate(raw, start=1)
        if ln.strip() and not ln.lstrip().startswith("#")
    ]


def _comment_headers(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for ln in fh:
            if not ln.startswith("#"):
                break
            body = ln[1:].strip()
            if "=" in body:
                key, val = body.split("=", 1)
                out[key.strip()] = val.strip()
    return out


@dataclass
class Snapshot:
    a: float
    b: float
    t: float
    values: np.ndarray
    header: dict


def read_snapshot(path) -> Snapshot:
    lines = _content_lines(path)
    if not lines:
        raise SchemaError(path, 1, "empty snapshot file")
    lineno, head = lines[0]
    parts = head.split()
    if len(parts) != 4:
        raise SchemaError(path, lineno, f"expected 'M a b t', got {head!r}")
    try:
        M = int(parts[0])
        a, b, t = (float(x) for x in parts[1:])
    except ValueError as exc:
        raise SchemaError(path, lineno, str(exc))
    rows = lines[1:]
    if len(rows) != M:
        raise SchemaError(path, lineno, f"expected {M} data rows, found {len(rows)}")
    values = np.empty((M, M))
    for j, (ln_no, row) in enumerate(rows):
        cells = row.split()
        if len(cells) != M:
            raise SchemaError(path, ln_no, f"expected {M} values, found {len(cells)}")
        try:
            values[j] = [float(c) for c in cells]
        except ValueError as exc:
            raise SchemaError(path, ln_no, str(exc))
    return Snapshot(a, b, t, values, _comment_headers(path))


def _read_csv(path, expected_header: str) -> tuple[list[list[str]], dict]:
    lines = _content_lines(path)
    if not lines:
        raise SchemaError(path, 1, "empty csv file")
    lineno, head = lines[0]
    if head != expected_header:
        raise SchemaError(path, lineno, f"expected header {expected_header!r}, got {head!r}")
    n_cols = len(expected_header.split(","))
    rows = []
    for ln_no, ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != n_cols:
            raise SchemaError(path, ln_no, f"expected {n_cols} columns, found {len(cells)}")
        rows.append(cells)
    return rows, _comment_headers(path)


@dataclass
class MonitorSeries:
    t: np.ndarray
    linf: np.ndarray
    energy: np.ndarray
    compat_energy: np.ndarray
    header: dict


def read_energy_csv(path) -> MonitorSeries:
    rows, header = _read_csv(path, "n,t,linf,E_h,E_c,decay_residual,fp_iters")
    try:
        data = np.array([[float(c) for c in row[1:5]] for row in rows])
    except ValueError as exc:
        raise SchemaError(path, 0, f"non-numeric monitor entry: {exc}")
    return MonitorSeries(data[:, 0], data[:, 1], data[:, 2], data[:, 3], header)


@dataclass
class GammaSweepSeries:
    alpha: float
    gammas: np.ndarray
    errors: np.ndarray
    header: dict


def read_gamma_sweep_csv(path) -> GammaSweepSeries:
    rows, header = _read_csv(path, "alpha,gamma,error")
    try:
        data = np.array([[float(c) for c in row] for row in rows])
    except ValueError as exc:
        raise SchemaError(path, 0, f"non-numeric sweep entry: {exc}")
    if len(data) == 0:
        raise SchemaError(path, 0, "gamma sweep has no rows")
    return GammaSweepSeries(float(data[0, 0]), data[:, 1], data[:, 2], header)
