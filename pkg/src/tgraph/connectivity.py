"""Connectivity matrices: construction from time series, validation, fusion.

A connectivity matrix holds pairwise Pearson correlations between regional
time series.  Group templates produced elsewhere in the package are summed
into a single global template whose entrywise (Hadamard) product with a
subject matrix yields the augmented input used for classification.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConstantColumn,
    DataFormatError,
    DimensionMismatch,
    TooFewTimepoints,
)

VALIDATION_MODES = ("strict_correlation", "symmetric_only")


@dataclass
class TimeSeriesTable:
    """T x M table of regional signals with optional region names."""

    values: np.ndarray
    roi_names: list[str] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DimensionMismatch(
                f"time series must be 2-D, got shape {self.values.shape}"
            )
        if self.roi_names is not None and len(self.roi_names) != self.values.shape[1]:
            raise DimensionMismatch(
                f"{len(self.roi_names)} region names for "
                f"{self.values.shape[1]} columns"
            )

    @property
    def num_timepoints(self) -> int:
        return self.values.shape[0]

    @property
    def num_rois(self) -> int:
        return self.values.shape[1]


@dataclass
class ConnectivityMatrix:
    """Square symmetric matrix of edge weights for one subject."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2 or self.weights.shape[0] != self.weights.shape[1]:
            raise DimensionMismatch(
                f"connectivity matrix must be square, got shape {self.weights.shape}"
            )

    @property
    def num_rois(self) -> int:
        return self.weights.shape[0]


@dataclass
class GlobalTemplate:
    """Sum of all group templates, used as a multiplicative edge mask."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2 or self.weights.shape[0] != self.weights.shape[1]:
            raise DimensionMismatch(
                f"global template must be square, got shape {self.weights.shape}"
            )

    @property
    def num_rois(self) -> int:
        return self.weights.shape[0]


@dataclass
class Violation:
    """One validation finding: what failed and where."""

    kind: str
    location: tuple
    detail: str = ""


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def pearson_connectivity(series: TimeSeriesTable) -> ConnectivityMatrix:
    """Build the Pearson correlation matrix of a time-series table.

    Parameters
    ----------
    series : TimeSeriesTable
        T x M table with T >= 3 rows.

    Returns
    -------
    ConnectivityMatrix
        M x M matrix with unit diagonal.  The off-diagonal entries are the
        sample correlations; the matrix is symmetrized by averaging with its
        transpose, values within a few ulp of +-1 are snapped to exactly +-1
        (collinear columns must give exactly +-1 despite rounding), and the
        diagonal is forced to exactly 1.

    Raises
    ------
    TooFewTimepoints
        If T < 3.
    ConstantColumn
        If some column is constant (zero variance), reporting its index.
    """
    v = series.values
    t, m = v.shape
    if t < 3:
        raise TooFewTimepoints(f"need at least 3 time points, got {t}")
    for j in range(m):
        col = v[:, j]
        if col.min() == col.max():
            raise ConstantColumn(j)
    centered = v - v.mean(axis=0)
    norms = np.sqrt((centered * centered).sum(axis=0))
    corr = (centered.T @ centered) / np.outer(norms, norms)
    corr = (corr + corr.T) / 2.0
    snap = 1.0 - 64.0 * np.finfo(float).eps
    corr[corr >= snap] = 1.0
    corr[corr <= -snap] = -1.0
    np.fill_diagonal(corr, 1.0)
    return ConnectivityMatrix(corr)


def validate_connectivity(
    matrix: ConnectivityMatrix, mode: str = "strict_correlation"
) -> ValidationReport:
    """Check a matrix against the connectivity invariants.

    ``strict_correlation`` reports asymmetry, diagonal entries differing
    from 1, and entries outside [-1, 1].  ``symmetric_only`` reports
    asymmetry alone, which is the right mode for template-derived matrices
    whose entries may leave the correlation range.
    """
    if mode not in VALIDATION_MODES:
        raise ValueError(f"unknown validation mode {mode!r}")
    w = matrix.weights
    m = w.shape[0]
    report = ValidationReport()
    for i in range(m):
        for j in range(i + 1, m):
            if w[i, j] != w[j, i]:
                report.violations.append(
                    Violation(
                        "asymmetry",
                        (i, j),
                        f"w[{i},{j}]={w[i, j]!r} vs w[{j},{i}]={w[j, i]!r}",
                    )
                )
    if mode == "strict_correlation":
        for i in range(m):
            if w[i, i] != 1.0:
                report.violations.append(
                    Violation("diagonal", (i, i), f"diagonal entry {w[i, i]!r}")
                )
        for i in range(m):
            for j in range(m):
                if i != j and not (-1.0 <= w[i, j] <= 1.0):
                    report.violations.append(
                        Violation("range", (i, j), f"entry {w[i, j]!r} outside [-1, 1]")
                    )
    return report


def global_template(templates) -> GlobalTemplate:
    """Sum the group templates into one global template.

    Accepts a fitted template set or a plain sequence of square matrices.
    """
    mats = getattr(templates, "templates", templates)
    if len(mats) == 0:
        raise DimensionMismatch("no templates to sum")
    first = np.asarray(mats[0], dtype=float)
    total = np.zeros_like(first)
    for g in mats:
        g = np.asarray(g, dtype=float)
        if g.shape != first.shape:
            raise DimensionMismatch(
                f"template shapes differ: {g.shape} vs {first.shape}"
            )
        total += g
    return GlobalTemplate(total)


def augment(w: ConnectivityMatrix, g: GlobalTemplate) -> np.ndarray:
    """Entrywise product of a subject matrix with the global template."""
    wm = w.weights if isinstance(w, ConnectivityMatrix) else np.asarray(w, dtype=float)
    gm = g.weights if isinstance(g, GlobalTemplate) else np.asarray(g, dtype=float)
    if wm.shape != gm.shape:
        raise DimensionMismatch(f"shapes differ: {wm.shape} vs {gm.shape}")
    return wm * gm


# ---------------------------------------------------------------------------
# File formats.  Matrices are headerless CSV written with 17 significant
# digits so a write/read round trip reproduces the floats exactly.  Time
# series are CSV with an optional leading line of region names, detected by
# a non-numeric first token.
# ---------------------------------------------------------------------------

_MATRIX_FMT = "%.17g"


def write_matrix_csv(weights: np.ndarray, path) -> None:
    np.savetxt(path, np.asarray(weights, dtype=float), delimiter=",", fmt=_MATRIX_FMT)


def read_matrix_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"matrix file not found: {path}")
    try:
        w = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"cannot parse matrix file {path}: {exc}") from exc
    if w.shape[0] != w.shape[1]:
        raise DataFormatError(
            f"matrix file {path} is {w.shape[0]}x{w.shape[1]}, expected square"
        )
    if not np.isfinite(w).all():
        raise DataFormatError(f"matrix file {path} contains non-finite values")
    return w


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_timeseries_csv(path) -> TimeSeriesTable:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"time-series file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataFormatError(f"time-series file {path} is empty")
    names = None
    if not _is_number(rows[0][0].strip()):
        names = [tok.strip() for tok in rows[0]]
        rows = rows[1:]
    if not rows:
        raise DataFormatError(f"time-series file {path} has a header but no data")
    width = len(rows[0])
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataFormatError(
                f"time-series file {path} row {i} has {len(row)} values, expected {width}"
            )
        try:
            values[i] = [float(tok) for tok in row]
        except ValueError as exc:
            raise DataFormatError(f"cannot parse {path} row {i}: {exc}") from exc
    if not np.isfinite(values).all():
        raise DataFormatError(f"time-series file {path} contains non-finite values")
    return TimeSeriesTable(values, names)


def write_timeseries_csv(table: TimeSeriesTable, path) -> None:
    with open(path, "w", newline="") as fh:
        if table.roi_names is not None:
            fh.write(",".join(table.roi_names) + "\n")
        for row in table.values:
            fh.write(",".join(_MATRIX_FMT % x for x in row) + "\n")
