"""CSV schemas shared by the CLI, the tests, and the plotting component.

All files are UTF-8, comma-separated, with ``#``-prefixed header comment
lines before the column row.  Floats are written with ``repr`` (shortest
round-trip decimal), so identical tables serialize bit-identically and parse
back exactly.
"""

from __future__ import annotations

import csv
import io as _io

import numpy as np
from pathlib import Path

from .errors import ConfigError
from .model import SystemSpec, Truncation
from .rates import RateTable

__all__ = [
    "format_value",
    "write_csv",
    "read_csv",
    "rate_rows",
    "write_rate_csv",
    "read_rate_csv",
    "RATE_COLUMNS",
    "NESS_COLUMNS",
    "BOUND_COLUMNS",
    "DIAG_COLUMNS",
    "CONVERGENCE_COLUMNS",
]

RATE_COLUMNS = ["beta", "j_from", "j_to", "nu", "rate", "e_cut", "nu_cut",
                "quad_points"]
NESS_COLUMNS = ["beta", "j", "population", "thermal_population", "deviation"]
BOUND_COLUMNS = ["j", "j_prime", "lambda", "bound"]
DIAG_COLUMNS = ["beta", "check_name", "j", "j_prime", "nu", "lhs", "rhs",
                "residual"]
CONVERGENCE_COLUMNS = ["beta", "e_cut", "nu_cut", "j", "residual"]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows, comments=()) -> None:
    """Write one CSV file with comment header lines and a column row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = _io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path):
    """Read back a CSV written by :func:`write_csv`.

    Returns (comments, columns, rows) with rows as lists of strings.
    """
    comments, columns, rows = [], None, []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                comments.append(line[1:].strip())
                continue
            cells = next(csv.reader([line]))
            if columns is None:
                columns = cells
            else:
                rows.append(cells)
    if columns is None:
        raise ConfigError(f"{path}: no column row found")
    return comments, columns, rows


def rate_rows(table: RateTable):
    """Rate-schema rows of a table, deterministically ordered."""
    t = table.trunc
    n = table.spec.n_levels
    for j_from in range(1, n + 1):
        for j_to in range(1, n + 1):
            for nu in range(-t.nu_cut, t.nu_cut + 1):
                yield (table.beta, j_from, j_to, nu,
                       table.rate(j_to, j_from, nu), t.e_cut, t.nu_cut,
                       t.quad_points)


def write_rate_csv(path, tables, comments=()) -> None:
    rows = [row for table in tables for row in rate_rows(table)]
    write_csv(path, RATE_COLUMNS, rows, comments)


def read_rate_csv(path, spec: SystemSpec):
    """Reconstruct RateTables from a rate CSV (one per distinct beta)."""
    _, columns, rows = read_csv(path)
    if columns != RATE_COLUMNS:
        raise ConfigError(f"{path}: unexpected columns {columns}")
    groups: dict = {}
    truncs: dict = {}
    for cells in rows:
        beta = float(cells[0])
        j_from, j_to, nu = int(cells[1]), int(cells[2]), int(cells[3])
        rate = float(cells[4])
        key = cells[0]
        groups.setdefault(key, {})[(j_to, j_from, nu)] = rate
        truncs[key] = Truncation(nu_cut=int(cells[6]), e_cut=float(cells[5]),
                                 quad_points=int(cells[7]))
    tables = []
    for key, per_nu in groups.items():
        trunc = truncs[key]
        totals = {}
        for jt in range(1, spec.n_levels + 1):
            for jf in range(1, spec.n_levels + 1):
                totals[(jt, jf)] = float(sum(
                    per_nu.get((jt, jf, nu), 0.0)
                    for nu in range(-trunc.nu_cut, trunc.nu_cut + 1)))
        tables.append(RateTable(spec=spec, trunc=trunc, beta=float(key),
                                per_nu=per_nu, totals=totals))
    tables.sort(key=lambda t: t.beta)
    return tables
