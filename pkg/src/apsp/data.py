"""Datasets, column typing, standardization, and CSV ingestion.

All types are immutable after construction (arrays are frozen), so datasets
and maps can be shared freely across concurrently running replicates.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import SchemaError, UserInputError

ROLES = ("internal", "external")
KINDS = ("continuous", "binary")
POLICIES = ("pooled", "per-dataset", "none")

_MISSING_TOKENS = {"", "na", "nan", "n/a", "null"}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Covariate matrix plus outcome with column metadata and a role flag."""

    name: str
    role: str
    columns: tuple[tuple[str, str], ...]  # (column name, kind)
    X: np.ndarray  # n x K
    y: np.ndarray  # n
    n_dropped: int = 0
    standardization: "StandardizationMap | None" = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise UserInputError(f"role must be one of {ROLES}, got {self.role!r}")
        object.__setattr__(self, "X", _frozen(np.atleast_2d(self.X)))
        object.__setattr__(self, "y", _frozen(self.y))
        n, k = self.X.shape
        if self.y.shape != (n,):
            raise UserInputError(f"y has shape {self.y.shape}, expected ({n},)")
        if n < 2:
            raise UserInputError(f"dataset {self.name!r} needs at least 2 rows, got {n}")
        if k < 1:
            raise UserInputError(f"dataset {self.name!r} needs at least one covariate")
        if len(self.columns) != k:
            raise UserInputError("column metadata does not match X width")
        names = [c for c, _ in self.columns]
        if len(set(names)) != len(names):
            raise UserInputError(f"duplicate column names in dataset {self.name!r}")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise UserInputError(f"dataset {self.name!r} contains non-finite values")
        for j, (col, kind) in enumerate(self.columns):
            if kind not in KINDS:
                raise UserInputError(f"column {col!r} has unknown kind {kind!r}")
            if kind == "binary" and not np.all(np.isin(self.X[:, j], (0.0, 1.0))):
                raise UserInputError(f"binary column {col!r} has values outside {{0,1}}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.columns)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(k for _, k in self.columns)

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.column_names.index(name)]

    def with_outcome(self, y: np.ndarray) -> "Dataset":
        """Same covariates, new outcome (used by the permutation null)."""
        return replace(self, y=_frozen(y))

    def write_csv(self, path, outcome_column: str = "y") -> None:
        """Re-serialize with shortest-roundtrip floats so re-ingesting is lossless."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([outcome_column, *self.column_names])
            for i in range(self.n):
                w.writerow([repr(float(self.y[i]))] + [repr(float(v)) for v in self.X[i]])


def same_schema(a: Dataset, b: Dataset) -> bool:
    return a.columns == b.columns


def require_same_schema(a: Dataset, b: Dataset) -> None:
    if not same_schema(a, b):
        only_a = set(a.column_names) - set(b.column_names)
        only_b = set(b.column_names) - set(a.column_names)
        raise SchemaError(
            f"datasets {a.name!r} and {b.name!r} have mismatched covariate schemas"
            + (f"; only in {a.name!r}: {sorted(only_a)}" if only_a else "")
            + (f"; only in {b.name!r}: {sorted(only_b)}" if only_b else "")
        )


def _parse_cell(text: str, row: int, col: str) -> float | None:
    stripped = text.strip()
    if stripped.lower() in _MISSING_TOKENS:
        return None
    try:
        return float(stripped)
    except ValueError:
        raise UserInputError(
            f"non-numeric value {text!r} in column {col!r}, data row {row}"
        ) from None


def infer_kind(values: np.ndarray) -> str:
    """Binary iff every value is 0 or 1; the rule is row-order invariant."""
    return "binary" if np.all(np.isin(values, (0.0, 1.0))) else "continuous"


def ingest_csv(path, outcome_column: str, role: str, column_kinds: dict | None = None,
               name: str | None = None) -> Dataset:
    """Read a header+rows CSV ('.' decimal, UTF-8); drop incomplete rows.

    Rows with any missing cell are dropped (the count lands in
    ``Dataset.n_dropped``); a non-numeric cell in a complete row is an error.
    Column kinds are inferred from the retained rows unless overridden.
    """
    path = Path(path)
    if not path.exists():
        raise UserInputError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise UserInputError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if outcome_column not in header:
            raise UserInputError(f"outcome column {outcome_column!r} not in header {header}")
        if len(set(header)) != len(header):
            raise UserInputError(f"duplicate header names in {path}")
        rows = []
        n_dropped = 0
        for i, raw in enumerate(reader, start=1):
            if len(raw) != len(header):
                raise UserInputError(f"row {i} has {len(raw)} cells, expected {len(header)}")
            if any(cell.strip().lower() in _MISSING_TOKENS for cell in raw):
                n_dropped += 1
                continue
            rows.append([_parse_cell(cell, i, col) for col, cell in zip(header, raw)])
    if len(rows) < 2:
        raise UserInputError(f"{path} has {len(rows)} complete rows; at least 2 required")
    table = np.array(rows, dtype=float)
    y_idx = header.index(outcome_column)
    y = table[:, y_idx]
    X = np.delete(table, y_idx, axis=1)
    cov_names = [h for h in header if h != outcome_column]
    column_kinds = dict(column_kinds or {})
    unknown = set(column_kinds) - set(cov_names)
    if unknown:
        raise UserInputError(f"column_kinds mentions unknown columns: {sorted(unknown)}")
    columns = []
    for j, col in enumerate(cov_names):
        kind = column_kinds.get(col, infer_kind(X[:, j]))
        if kind not in KINDS:
            raise UserInputError(f"invalid kind {kind!r} for column {col!r}")
        columns.append((col, kind))
    return Dataset(name or path.stem, role, tuple(columns), X, y, n_dropped=n_dropped)


@dataclass(frozen=True)
class StandardizationMap:
    """Center/scale per continuous column; binary columns are left on 0/1.

    Under the ``pooled`` policy one (center, scale) pair per column is shared
    by every dataset, keeping coefficients comparable across them; under
    ``per-dataset`` the entries are keyed by dataset name.
    """

    policy: str
    entries: tuple = ()  # pooled/none: ((column, center, scale), ...)
    per_dataset: tuple = ()  # per-dataset: ((dataset, column, center, scale), ...)

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise UserInputError(f"policy must be one of {POLICIES}")
        for entry in self.entries:
            if entry[2] <= 0:
                raise UserInputError(f"non-positive scale for column {entry[0]!r}")
        for entry in self.per_dataset:
            if entry[3] <= 0:
                raise UserInputError(f"non-positive scale for column {entry[1]!r}")

    def lookup(self, dataset_name: str) -> dict[str, tuple[float, float]]:
        if self.policy == "per-dataset":
            out = {c: (m, s) for d, c, m, s in self.per_dataset if d == dataset_name}
        else:
            out = {c: (m, s) for c, m, s in self.entries}
        return out

    def to_json(self) -> str:
        if self.policy == "per-dataset":
            rows = [
                {"dataset": d, "column": c, "center": m, "scale": s, "policy": self.policy}
                for d, c, m, s in self.per_dataset
            ]
        else:
            rows = [
                {"column": c, "center": m, "scale": s, "policy": self.policy}
                for c, m, s in self.entries
            ]
        return json.dumps(rows, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "StandardizationMap":
        rows = json.loads(text)
        if not rows:
            return cls(policy="none")
        policy = rows[0]["policy"]
        if policy == "per-dataset":
            return cls(policy=policy, per_dataset=tuple(
                (r["dataset"], r["column"], float(r["center"]), float(r["scale"])) for r in rows
            ))
        return cls(policy=policy, entries=tuple(
            (r["column"], float(r["center"]), float(r["scale"])) for r in rows
        ))


def fit_standardization(datasets: list[Dataset], policy: str = "pooled") -> StandardizationMap:
    """Fit centers/scales for the continuous columns of schema-identical datasets.

    Pooled centers are plain means and pooled scales standard deviations
    (denominator n-1) over the concatenated rows of all datasets.
    """
    if policy not in POLICIES:
        raise UserInputError(f"policy must be one of {POLICIES}")
    if not datasets:
        raise UserInputError("need at least one dataset")
    first = datasets[0]
    for other in datasets[1:]:
        require_same_schema(first, other)
    if policy == "none":
        return StandardizationMap(policy="none")
    if policy == "pooled":
        entries = []
        for j, (col, kind) in enumerate(first.columns):
            if kind != "continuous":
                continue
            pooled = np.concatenate([ds.X[:, j] for ds in datasets])
            scale = float(np.std(pooled, ddof=1))
            if scale <= 0:
                raise UserInputError(f"zero pooled variance in continuous column {col!r}")
            entries.append((col, float(np.mean(pooled)), scale))
        return StandardizationMap(policy="pooled", entries=tuple(entries))
    per = []
    for ds in datasets:
        for j, (col, kind) in enumerate(ds.columns):
            if kind != "continuous":
                continue
            scale = float(np.std(ds.X[:, j], ddof=1))
            if scale <= 0:
                raise UserInputError(
                    f"zero variance in continuous column {col!r} of dataset {ds.name!r}"
                )
            per.append((ds.name, col, float(np.mean(ds.X[:, j])), scale))
    return StandardizationMap(policy="per-dataset", per_dataset=tuple(per))


def apply_standardization(ds: Dataset, smap: StandardizationMap) -> Dataset:
    """Replace continuous columns x by (x - center) / scale; binary untouched."""
    if smap.policy == "none":
        return replace(ds, standardization=smap)
    table = smap.lookup(ds.name)
    X = np.array(ds.X)
    for j, (col, kind) in enumerate(ds.columns):
        if kind != "continuous":
            continue
        if col not in table:
            raise UserInputError(f"standardization map missing column {col!r}")
        center, scale = table[col]
        X[:, j] = (X[:, j] - center) / scale
    return replace(ds, X=X, standardization=smap)


def invert_standardization(ds: Dataset) -> Dataset:
    """Undo ``apply_standardization`` (recovers inputs to ~1e-12 relative)."""
    smap = ds.standardization
    if smap is None or smap.policy == "none":
        return replace(ds, standardization=None)
    table = smap.lookup(ds.name)
    X = np.array(ds.X)
    for j, (col, kind) in enumerate(ds.columns):
        if kind == "continuous":
            center, scale = table[col]
            X[:, j] = X[:, j] * scale + center
    return replace(ds, X=X, standardization=None)


def destandardized_coefficients(beta: np.ndarray, columns, smap: StandardizationMap | None,
                                dataset_name: str) -> np.ndarray:
    """Map coefficients fitted on standardized X back to the original scale."""
    beta = np.array(beta, dtype=float)
    if smap is None or smap.policy == "none":
        return beta
    table = smap.lookup(dataset_name)
    for j, (col, kind) in enumerate(columns):
        if kind == "continuous":
            beta[j] = beta[j] / table[col][1]
    return beta


def warn_if_unstandardized(ds: Dataset) -> None:
    if ds.standardization is None and any(k == "continuous" for k in ds.kinds):
        warnings.warn(
            f"dataset {ds.name!r} has continuous columns but no standardization applied",
            stacklevel=3,
        )
