"""Loading and subsampling expression-style tables.

Tables are delimited text with a header row: an ID column followed by
one column per measured condition, then one row per gene with strictly
numeric, non-negative values. Rows are the observations downstream.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import DataMatrix
from .errors import InputError

# Environment variable naming a directory to search for relative table
# paths that do not resolve against the working directory.
DATA_DIR_ENV = "HDPCA_DATA_DIR"

BUNDLED_FIXTURE = "expression_200x74.tsv"


@dataclass(frozen=True)
class ExpressionTable:
    """A validated table: gene rows, condition columns, provenance path."""

    data: DataMatrix
    source: str

    @property
    def gene_ids(self):
        return self.data.row_labels

    @property
    def conditions(self):
        return self.data.col_labels


def _resolve(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    env = os.environ.get(DATA_DIR_ENV)
    if not p.is_absolute() and env:
        candidate = Path(env) / p
        if candidate.exists():
            return candidate
    raise InputError(f"table not found: {path}")


def bundled_fixture_path() -> Path:
    """Filesystem path of the expression table shipped with the package."""
    with resources.as_file(
        resources.files("hdpca").joinpath("data", BUNDLED_FIXTURE)
    ) as p:
        return Path(p)


def load_expression_table(path, delimiter: str | None = None) -> ExpressionTable:
    """Parse and validate a delimited expression table.

    Parameters
    ----------
    path : str or Path
        File to load. A relative path that does not exist is also tried
        under $HDPCA_DATA_DIR. The token "@bundled" loads the packaged
        fixture table.
    delimiter : str, optional
        Field separator. Default: tab for .tsv files, comma for .csv,
        otherwise whichever of the two appears in the header line.

    Raises
    ------
    InputError
        Structural or value problems, with the 1-based line number.
    """
    if str(path) == "@bundled":
        path = bundled_fixture_path()
    fp = _resolve(path)
    if delimiter is None:
        suffix = fp.suffix.lower()
        if suffix == ".tsv":
            delimiter = "\t"
        elif suffix == ".csv":
            delimiter = ","
        else:
            head = fp.open("r", encoding="utf-8").readline()
            delimiter = "\t" if "\t" in head else ","

    with fp.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{fp}: file is empty") from None
        if len(header) < 2:
            raise InputError(f"{fp}: line 1: header needs an ID column plus data")
        conditions = tuple(h.strip() for h in header[1:])
        if any(not c for c in conditions):
            raise InputError(f"{fp}: line 1: blank condition name")
        if len(set(conditions)) != len(conditions):
            raise InputError(f"{fp}: line 1: duplicate condition name")

        width = len(header)
        ids: list[str] = []
        seen: set[str] = set()
        rows: list[list[float]] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue  # ignore blank lines
            if len(rec) != width:
                raise InputError(
                    f"{fp}: line {lineno}: expected {width} fields, got {len(rec)}"
                )
            gid = rec[0].strip()
            if not gid:
                raise InputError(f"{fp}: line {lineno}: blank gene ID")
            if gid in seen:
                raise InputError(f"{fp}: line {lineno}: duplicate gene ID {gid!r}")
            seen.add(gid)
            vals = []
            for col, cell in enumerate(rec[1:], start=2):
                try:
                    v = float(cell)
                except ValueError:
                    raise InputError(
                        f"{fp}: line {lineno}: field {col} is not numeric: {cell!r}"
                    ) from None
                if not np.isfinite(v):
                    raise InputError(
                        f"{fp}: line {lineno}: field {col} is not finite"
                    )
                if v < 0:
                    raise InputError(
                        f"{fp}: line {lineno}: negative expression value {cell}"
                    )
                vals.append(v)
            ids.append(gid)
            rows.append(vals)

    if not rows:
        raise InputError(f"{fp}: no data rows")
    data = DataMatrix(
        values=np.array(rows, dtype=float),
        row_labels=tuple(ids),
        col_labels=conditions,
    )
    return ExpressionTable(data=data, source=str(fp))


def subsample_rows(table: ExpressionTable, n: int, seed) -> DataMatrix:
    """Draw n distinct gene rows, in sorted row order, reproducibly."""
    total = table.data.n
    if not (1 <= n <= total):
        raise InputError(f"subsample size {n} outside 1..{total}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(total, size=n, replace=False))
    return DataMatrix(
        values=table.data.values[idx],
        row_labels=tuple(table.data.row_labels[i] for i in idx),
        col_labels=table.data.col_labels,
    )
