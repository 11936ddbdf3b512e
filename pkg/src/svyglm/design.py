"""Survey dataset model and CSV ingestion.

A dataset is an immutable bundle of named columns plus the design vectors:
per-row sampling weights, stratum and PSU labels, and a per-stratum
sampling fraction. The CSV dialect is comma separated, header first,
with "." or an empty cell meaning missing.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadFpcError,
    BadWeightError,
    CsvFormatError,
    EmptyDataError,
    MissingColumnError,
    PsuStratumConflictError,
)

MISSING_TOKENS = ("", ".")


@dataclass(frozen=True)
class DesignColumns:
    """Column-name bindings for the design variables; None means default."""

    weight: str | None = None
    stratum: str | None = None
    psu: str | None = None
    fpc: str | None = None


@dataclass(frozen=True)
class SurveyDataset:
    """Validated rows plus design vectors.

    columns: name -> float64 array (NaN = missing) or object array of
             str | None for categorical columns, in file order.
    """

    columns: dict[str, np.ndarray]
    weight: np.ndarray
    stratum: np.ndarray
    psu: np.ndarray
    fpc: dict[str, float]
    design: DesignColumns = field(default_factory=DesignColumns)

    @property
    def n_rows(self):
        return len(self.weight)

    def column_names(self):
        return tuple(self.columns)

    def is_numeric(self, name):
        return self.columns[name].dtype.kind == "f"


@dataclass(frozen=True)
class DesignSummary:
    """Counts describing the realized design."""

    H: int
    strata: tuple[str, ...]
    n_h: tuple[int, ...]
    n: int
    n_psu: int
    sum_weights: float


def _read_text(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return fh.read()
    if isinstance(source, bytes):
        return source.decode("utf-8")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def _parse_csv(text):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDataError("input is empty") from None
    header = [h.strip() for h in header]
    if any(not h for h in header):
        raise CsvFormatError("blank column name in header", line=1)
    if len(set(header)) != len(header):
        raise CsvFormatError("duplicate column name in header", line=1)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CsvFormatError(
                f"expected {len(header)} cells, found {len(row)}", line=lineno)
        rows.append([cell.strip() for cell in row])
    if not rows:
        raise EmptyDataError("no data rows")
    return header, rows


def _detect_column(cells):
    """Numeric iff every non-missing cell parses as a real number."""
    values = np.empty(len(cells), dtype=float)
    numeric = True
    for i, cell in enumerate(cells):
        if cell in MISSING_TOKENS:
            values[i] = np.nan
            continue
        try:
            values[i] = float(cell)
        except ValueError:
            numeric = False
            break
    if numeric:
        return values
    out = np.empty(len(cells), dtype=object)
    for i, cell in enumerate(cells):
        out[i] = None if cell in MISSING_TOKENS else cell
    return out


def load_dataset(source, design=None, force_categorical=()):
    """Parse delimited text into a validated SurveyDataset.

    Defaults when a binding is absent: unit weights, a single stratum "0",
    one PSU per row, and zero sampling fraction everywhere. Columns named
    in `force_categorical` skip numeric detection (schema override).
    """
    design = design or DesignColumns()
    header, rows = _parse_csv(text=_read_text(source))
    raw = {name: [row[j] for row in rows] for j, name in enumerate(header)}
    n = len(rows)

    for name in force_categorical:
        if name not in raw:
            raise MissingColumnError(f"categorical override {name!r} not in header")
    for role, name in (("weight", design.weight), ("stratum", design.stratum),
                       ("psu", design.psu), ("fpc", design.fpc)):
        if name is not None and name not in raw:
            raise MissingColumnError(f"{role} column {name!r} not in header")

    columns = {}
    for name, cells in raw.items():
        if name in force_categorical:
            col = np.empty(n, dtype=object)
            for i, cell in enumerate(cells):
                col[i] = None if cell in MISSING_TOKENS else cell
            columns[name] = col
        else:
            columns[name] = _detect_column(cells)
    for name, arr in columns.items():
        arr.setflags(write=False)

    if design.weight is None:
        weight = np.ones(n)
    else:
        weight = np.empty(n, dtype=float)
        for i, cell in enumerate(raw[design.weight]):
            if cell in MISSING_TOKENS:
                raise BadWeightError(f"row {i + 1}: missing weight")
            try:
                weight[i] = float(cell)
            except ValueError:
                raise BadWeightError(
                    f"row {i + 1}: weight {cell!r} is not a number") from None
        bad = ~np.isfinite(weight) | (weight <= 0)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise BadWeightError(f"row {i + 1}: weight {weight[i]!r} must be finite and > 0")
    weight.setflags(write=False)

    stratum = _label_column(raw, design.stratum, n, "stratum", default="0")
    if design.psu is None:
        psu = np.array([str(i) for i in range(n)], dtype=object)
    else:
        psu = _label_column(raw, design.psu, n, "psu", default=None)
    psu.setflags(write=False)

    seen = {}
    for s, p in zip(stratum, psu):
        if p in seen and seen[p] != s:
            raise PsuStratumConflictError(
                f"PSU {p!r} appears in strata {seen[p]!r} and {s!r}")
        seen[p] = s

    fpc = _stratum_fpc(raw, design.fpc, stratum)
    return SurveyDataset(columns=columns, weight=weight, stratum=stratum,
                         psu=psu, fpc=fpc, design=design)


def _label_column(raw, name, n, role, default):
    if name is None:
        out = np.array([default] * n, dtype=object)
    else:
        out = np.empty(n, dtype=object)
        for i, cell in enumerate(raw[name]):
            if cell in MISSING_TOKENS:
                raise CsvFormatError(f"missing {role} label", line=i + 2)
            out[i] = cell
    out.setflags(write=False)
    return out


def _stratum_fpc(raw, name, stratum):
    if name is None:
        return {s: 0.0 for s in dict.fromkeys(stratum)}
    fpc = {}
    for i, cell in enumerate(raw[name]):
        if cell in MISSING_TOKENS:
            raise BadFpcError(f"row {i + 1}: missing fpc value")
        try:
            f = float(cell)
        except ValueError:
            raise BadFpcError(f"row {i + 1}: fpc {cell!r} is not a number") from None
        if not (0.0 <= f < 1.0):
            raise BadFpcError(f"row {i + 1}: fpc {f!r} outside [0, 1)")
        s = stratum[i]
        if s in fpc and fpc[s] != f:
            raise BadFpcError(
                f"stratum {s!r} carries conflicting fpc values {fpc[s]!r} and {f!r}")
        fpc.setdefault(s, f)
    return fpc


def design_summary(ds):
    """Counts for a loaded dataset; strata ordered lexicographically."""
    return summary_from_arrays(ds.stratum, ds.psu, ds.weight)


def summary_from_arrays(stratum, psu, weight):
    strata = sorted(set(stratum))
    psus_by_stratum = {s: set() for s in strata}
    for s, p in zip(stratum, psu):
        psus_by_stratum[s].add(p)
    n_h = tuple(len(psus_by_stratum[s]) for s in strata)
    return DesignSummary(
        H=len(strata),
        strata=tuple(strata),
        n_h=n_h,
        n=len(stratum),
        n_psu=int(sum(n_h)),
        sum_weights=float(np.sum(weight)),
    )


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return repr(value)
    return str(value)


def dataset_to_csv(ds):
    """Serialize back to the CSV dialect, appending the design columns.

    Reloading the result with the emitted bindings reproduces the design
    summary exactly.
    """
    names = list(ds.columns)
    reserved = []
    for base in ("_weight", "_stratum", "_psu", "_fpc"):
        name = base
        while name in names:
            name = "_" + name
        reserved.append(name)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(names + reserved)
    for i in range(ds.n_rows):
        row = [_format_cell(ds.columns[c][i]) for c in names]
        row.append(repr(float(ds.weight[i])))
        row.append(ds.stratum[i])
        row.append(ds.psu[i])
        row.append(repr(float(ds.fpc[ds.stratum[i]])))
        writer.writerow(row)
    return out.getvalue()


def roundtrip_bindings(ds):
    """Design bindings matching dataset_to_csv output."""
    names = list(ds.columns)
    reserved = []
    for base in ("_weight", "_stratum", "_psu", "_fpc"):
        name = base
        while name in names:
            name = "_" + name
        reserved.append(name)
    return DesignColumns(weight=reserved[0], stratum=reserved[1],
                         psu=reserved[2], fpc=reserved[3])
