"""Schema, CSV ingestion, one-hot encoding and index splitting.

Missing numeric cells are stored as NaN; missing categorical cells as ``None``.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

KINDS = ("numeric", "categorical")
GROUPS = ("general", "job", "fluid", "calculated_hf", "geological")
ROLES = ("feature", "target", "baseline")


class SchemaError(ValueError):
    """Raised for malformed schema configs or data that violates a schema."""


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    group: str
    role: str = "feature"


@dataclass(frozen=True)
class FeatureSchema:
    columns: tuple[ColumnSpec, ...]
    target_name: str

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        targets = [c for c in self.columns if c.role == "target"]
        if len(targets) != 1 or targets[0].name != self.target_name:
            raise SchemaError("schema must declare exactly one target column")
        if targets[0].kind != "numeric":
            raise SchemaError(f"target column {self.target_name!r} must be numeric")
        for c in self.columns:
            if c.kind not in KINDS:
                raise SchemaError(f"unknown kind {c.kind!r} for column {c.name!r}")
            if c.group not in GROUPS:
                raise SchemaError(f"unknown group {c.group!r} for column {c.name!r}")
            if c.role not in ROLES:
                raise SchemaError(f"unknown role {c.role!r} for column {c.name!r}")
            if c.role == "baseline" and c.kind != "numeric":
                raise SchemaError(f"baseline column {c.name!r} must be numeric")

    @property
    def features(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.columns if c.role == "feature")

    @property
    def baseline_name(self) -> Optional[str]:
        for c in self.columns:
            if c.role == "baseline":
                return c.name
        return None

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self) -> str:
        lines = []
        for c in self.columns:
            parts = [c.name, c.kind, c.group]
            if c.role != "feature":
                parts.append(c.role)
            lines.append(",".join(parts))
        return "\n".join(lines) + "\n"


def parse_schema(config_text: str) -> FeatureSchema:
    """Parse a schema config.

    One column per line as ``name,kind,group[,role]`` where role is ``target``
    or ``baseline`` (a column holding an existing model's predictions).
    Blank lines and lines starting with ``#`` are ignored.
    """
    columns = []
    for lineno, raw in enumerate(config_text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (3, 4):
            raise SchemaError(f"line {lineno}: expected name,kind,group[,role], got {raw!r}")
        name, kind, group = parts[:3]
        role = parts[3] if len(parts) == 4 else "feature"
        if not name:
            raise SchemaError(f"line {lineno}: empty column name")
        if kind not in KINDS:
            raise SchemaError(f"line {lineno}: unknown kind {kind!r}")
        if group not in GROUPS:
            raise SchemaError(f"line {lineno}: unknown group {group!r}")
        if role not in ("target", "baseline", "feature"):
            raise SchemaError(f"line {lineno}: unknown role {role!r}")
        columns.append(ColumnSpec(name, kind, group, role))
    names = [c.name for c in columns]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise SchemaError(f"duplicate column name(s): {', '.join(dupes)}")
    targets = [c.name for c in columns if c.role == "target"]
    if not targets:
        raise SchemaError("schema declares no target column")
    if len(targets) > 1:
        raise SchemaError(f"schema declares {len(targets)} targets: {', '.join(targets)}")
    if sum(c.role == "baseline" for c in columns) > 1:
        raise SchemaError("at most one baseline column may be declared")
    return FeatureSchema(tuple(columns), targets[0])


@dataclass(frozen=True)
class Dataset:
    """Column-oriented table.

    ``columns`` maps every non-target schema column to either a float array
    (numeric, NaN = missing) or a tuple of ``str | None`` (categorical).
    ``target`` is None for prediction-only data.
    """

    schema: FeatureSchema
    n_rows: int
    columns: Mapping[str, object]
    target: Optional[np.ndarray]
    n_dropped: int = 0

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        cols = {}
        for name, values in self.columns.items():
            if isinstance(values, np.ndarray):
                cols[name] = values[idx]
            else:
                cols[name] = tuple(values[i] for i in idx)
        target = None if self.target is None else self.target[idx]
        return Dataset(self.schema, len(idx), cols, target)

    def with_target(self, target) -> "Dataset":
        target = np.asarray(target, dtype=float)
        if target.shape != (self.n_rows,):
            raise ValueError("target length does not match n_rows")
        return Dataset(self.schema, self.n_rows, dict(self.columns), target, self.n_dropped)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = [c.name for c in self.schema.columns
                 if c.name in self.columns
                 or (c.role == "target" and self.target is not None)]
        writer.writerow(names)
        for i in range(self.n_rows):
            row = []
            for name in names:
                if name == self.schema.target_name:
                    row.append(_fmt(self.target[i]))
                    continue
                v = self.columns[name][i]
                if v is None or (isinstance(v, float) and math.isnan(v)):
                    row.append("")
                elif isinstance(v, str):
                    row.append(v)
                else:
                    row.append(_fmt(v))
            writer.writerow(row)
        return buf.getvalue()


def _fmt(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _parse_number(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(f"row {row}, column {col!r}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise SchemaError(f"row {row}, column {col!r}: non-finite value {text!r}")
    return value


def load_dataset(csv_text: str, schema: FeatureSchema, require_target: bool = True) -> Dataset:
    """Read CSV text against ``schema``.

    The header must name exactly the schema's columns, in any order. With
    ``require_target=False`` the target and baseline columns may be absent
    (prediction input). Rows with an empty target are dropped and counted in
    ``Dataset.n_dropped``.
    """
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("CSV is empty (no header row)") from None

    optional = set() if require_target else {
        c.name for c in schema.columns if c.role in ("target", "baseline")}
    known = {c.name for c in schema.columns}
    for c in schema.columns:
        if c.name not in header and c.name not in optional:
            raise SchemaError(f"column {c.name!r} declared in schema is missing from CSV header")
    for h in header:
        if h not in known:
            raise SchemaError(f"CSV column {h!r} is not declared in schema")
    if len(set(header)) != len(header):
        raise SchemaError("CSV header repeats a column name")

    pos = {h: j for j, h in enumerate(header)}
    has_target = schema.target_name in pos
    present = [c for c in schema.columns if c.name in pos and c.role != "target"]
    raw: dict[str, list] = {c.name: [] for c in present}
    target: list[float] = []
    dropped = 0
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise SchemaError(f"row {lineno}: expected {len(header)} cells, got {len(row)}")
        if has_target:
            cell = row[pos[schema.target_name]].strip()
            if cell == "":
                dropped += 1
                continue
            target.append(_parse_number(cell, lineno, schema.target_name))
        for c in present:
            cell = row[pos[c.name]].strip()
            if c.kind == "numeric":
                raw[c.name].append(math.nan if cell == "" else _parse_number(cell, lineno, c.name))
            else:
                raw[c.name].append(None if cell == "" else cell)
    if dropped:
        logger.warning("dropped %d row(s) with missing target %r", dropped, schema.target_name)

    columns: dict[str, object] = {}
    for c in schema.columns:
        if c.role == "target":
            continue
        if c.name not in raw:
            continue
        if c.kind == "numeric":
            columns[c.name] = np.asarray(raw[c.name], dtype=float)
        else:
            columns[c.name] = tuple(raw[c.name])
    n_rows = len(target) if has_target else (len(next(iter(raw.values()))) if raw else 0)
    return Dataset(schema, n_rows, columns,
                   np.asarray(target, dtype=float) if has_target else None, dropped)


EncodingMap = dict[str, tuple[str, ...]]


def fit_encoding(dataset: Dataset) -> EncodingMap:
    """Sorted distinct non-missing categories per categorical feature column."""
    if dataset.n_rows == 0:
        raise ValueError("cannot fit an encoding on an empty dataset")
    mapping: EncodingMap = {}
    for c in dataset.schema.features:
        if c.kind != "categorical":
            continue
        cats = tuple(sorted({v for v in dataset.columns[c.name] if v is not None}))
        if len(cats) > dataset.n_rows / 10:
            logger.warning("categorical column %r has %d categories for %d rows; "
                           "one-hot width may explode", c.name, len(cats), dataset.n_rows)
        mapping[c.name] = cats
    return mapping


@dataclass(frozen=True)
class EncodedMatrix:
    values: np.ndarray  # (n_rows, n_features), NaN = Missing
    feature_names: tuple[str, ...]
    encoding_map: EncodingMap = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


def encode(dataset: Dataset, encoding_map: Mapping[str, Sequence[str]]) -> EncodedMatrix:
    """Numeric columns verbatim, categorical columns as one-hot blocks.

    Missing and unseen categories give an all-zero block.
    """
    blocks = []
    names: list[str] = []
    for c in dataset.schema.features:
        if c.name not in dataset.columns:
            raise SchemaError(f"dataset lacks feature column {c.name!r}")
        values = dataset.columns[c.name]
        if c.kind == "numeric":
            blocks.append(np.asarray(values, dtype=float).reshape(-1, 1))
            names.append(c.name)
            continue
        if c.name not in encoding_map:
            raise SchemaError(f"encoding map has no entry for categorical column {c.name!r}")
        cats = tuple(encoding_map[c.name])
        lookup = {cat: j for j, cat in enumerate(cats)}
        block = np.zeros((dataset.n_rows, len(cats)))
        for i, v in enumerate(values):
            j = lookup.get(v)
            if j is not None:
                block[i, j] = 1.0
        blocks.append(block)
        names.extend(f"{c.name}={cat}" for cat in cats)
    if blocks:
        matrix = np.hstack(blocks)
    else:
        matrix = np.zeros((dataset.n_rows, 0))
    frozen = {k: tuple(v) for k, v in encoding_map.items()}
    return EncodedMatrix(np.ascontiguousarray(matrix), tuple(names), frozen)


def random_split(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random train/test partition of ``range(n)``; both halves sorted ascending."""
    if n < 2:
        raise ValueError(f"need at least 2 rows to split, got {n}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n_test = min(max(int(round(n * test_fraction)), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def kfold_indices(n: int, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    if not 2 <= k <= n:
        raise ValueError(f"k must satisfy 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    folds = []
    for chunk in np.array_split(perm, k):
        val = np.sort(chunk)
        mask = np.ones(n, dtype=bool)
        mask[val] = False
        folds.append((np.flatnonzero(mask), val))
    return folds
