"""Model frame construction: response vector and dense design matrix.

Terms are numeric columns, dummy-coded categoricals with an explicit
reference level, or mean-centered numerics. Rows with a missing value in
the response or any term column are dropped (listwise deletion) and the
surviving indices recorded so the deletion can be audited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AllRowsDroppedError,
    FormulaError,
    TypeMismatchError,
    UnknownColumnError,
    UnknownReferenceLevelError,
)


@dataclass(frozen=True)
class NumericTerm:
    column: str


@dataclass(frozen=True)
class CategoricalTerm:
    column: str
    reference: str | None = None  # None = lexicographically first observed level


@dataclass(frozen=True)
class CenteredTerm:
    column: str
    weighted: bool = True  # subtract the weighted (not plain) mean


@dataclass(frozen=True)
class ModelSpec:
    response: str
    terms: tuple
    intercept: bool = True

    def __post_init__(self):
        for term in self.terms:
            if term.column == self.response:
                raise FormulaError(
                    f"response {self.response!r} cannot appear among the terms")

    def term_columns(self):
        return tuple(t.column for t in self.terms)


@dataclass(frozen=True)
class ModelFrame:
    """Response, design matrix, and design vectors aligned to kept rows."""

    y: np.ndarray
    X: np.ndarray
    column_labels: tuple[str, ...]
    kept_rows: np.ndarray
    weights: np.ndarray
    strata: np.ndarray
    psu: np.ndarray
    fpc: np.ndarray

    @property
    def n(self):
        return len(self.y)

    @property
    def p(self):
        return self.X.shape[1]


def _numeric_column(ds, name):
    if name not in ds.columns:
        raise UnknownColumnError(f"no column named {name!r}")
    col = ds.columns[name]
    if col.dtype.kind != "f":
        raise TypeMismatchError(f"column {name!r} is categorical, numeric required")
    return col


def _term_missing_mask(ds, term):
    col = ds.columns.get(term.column)
    if col is None:
        raise UnknownColumnError(f"no column named {term.column!r}")
    if col.dtype.kind == "f":
        return np.isnan(col)
    return np.array([v is None for v in col], dtype=bool)


def _categorical_levels(ds, name, kept):
    col = ds.columns[name]
    if col.dtype.kind == "f":
        observed = {format(col[i], "g") for i in kept}
    else:
        observed = {col[i] for i in kept}
    return sorted(observed)


def _categorical_values(ds, name, kept):
    col = ds.columns[name]
    if col.dtype.kind == "f":
        return [format(col[i], "g") for i in kept]
    return [col[i] for i in kept]


def build_model_frame(ds, spec):
    """Realize a ModelSpec against a dataset.

    Column order: intercept first (when enabled), then the terms in spec
    order; a categorical with L observed levels contributes L - 1 indicator
    columns in lexicographic level order, reference omitted.
    """
    if not spec.intercept and not spec.terms:
        raise FormulaError("model has no columns (no intercept and no terms)")
    if spec.response not in ds.columns:
        raise UnknownColumnError(f"no column named {spec.response!r}")

    y_col = _numeric_column(ds, spec.response)
    drop = np.isnan(y_col)
    for term in spec.terms:
        drop |= _term_missing_mask(ds, term)
    kept = np.flatnonzero(~drop)
    if kept.size == 0:
        raise AllRowsDroppedError("every row has a missing response or term value")

    w = ds.weight[kept].astype(float)
    blocks = []
    labels = []
    if spec.intercept:
        blocks.append(np.ones((kept.size, 1)))
        labels.append("(Intercept)")

    for term in spec.terms:
        if isinstance(term, NumericTerm):
            col = _numeric_column(ds, term.column)[kept]
            blocks.append(col.reshape(-1, 1))
            labels.append(term.column)
        elif isinstance(term, CenteredTerm):
            col = _numeric_column(ds, term.column)[kept]
            if term.weighted:
                center = float(np.sum(w * col) / np.sum(w))
            else:
                center = float(np.mean(col))
            blocks.append((col - center).reshape(-1, 1))
            labels.append(f"center({term.column})")
        elif isinstance(term, CategoricalTerm):
            if term.column not in ds.columns:
                raise UnknownColumnError(f"no column named {term.column!r}")
            levels = _categorical_levels(ds, term.column, kept)
            ref = term.reference if term.reference is not None else levels[0]
            if ref not in levels:
                raise UnknownReferenceLevelError(
                    f"reference {ref!r} not among observed levels of {term.column!r}: "
                    f"{levels}")
            values = _categorical_values(ds, term.column, kept)
            for level in levels:
                if level == ref:
                    continue
                indicator = np.fromiter((1.0 if v == level else 0.0 for v in values),
                                        dtype=float, count=kept.size)
                blocks.append(indicator.reshape(-1, 1))
                labels.append(f"{term.column}={level}")
        else:
            raise FormulaError(f"unknown term type {type(term).__name__}")

    X = np.hstack(blocks)
    if len(set(labels)) != len(labels):
        raise FormulaError(f"duplicate design columns: {labels}")

    fpc_rows = np.array([ds.fpc[s] for s in ds.stratum[kept]], dtype=float)
    frame = ModelFrame(
        y=y_col[kept].astype(float),
        X=X,
        column_labels=tuple(labels),
        kept_rows=kept,
        weights=w,
        strata=ds.stratum[kept],
        psu=ds.psu[kept],
        fpc=fpc_rows,
    )
    for arr in (frame.y, frame.X, frame.kept_rows, frame.weights, frame.fpc):
        arr.setflags(write=False)
    return frame
