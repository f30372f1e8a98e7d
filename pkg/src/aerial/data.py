"""Tabular input: CSV loading, equal-frequency discretization, one-hot schema.

A dataset here is a table of categorical features.  Each row picks exactly one
category per feature, so a row is stored as a vector of category indices and
encoded on demand into a concatenation of one-hot blocks.
"""

from __future__ import annotations

import bisect
import csv
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MISSING = "__missing__"
MISSING_TOKENS = frozenset({"", "?"})
DEFAULT_BINS = 10


class DataError(ValueError):
    """Malformed or unusable input data."""


# ---------------------------------------------------------------------------
# raw tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # "numeric" or "categorical"
    values: tuple  # str / float cells, None marks a missing cell

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RawTable:
    columns: tuple[Column, ...]

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def drop(self, names: Iterable[str]) -> "RawTable":
        names = set(names)
        unknown = names - set(self.names)
        if unknown:
            raise DataError(f"unknown column(s): {', '.join(sorted(unknown))}")
        return RawTable(tuple(c for c in self.columns if c.name not in names))


def _parse_number(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def _infer_column(name: str, cells: list[str]) -> Column:
    present = [c for c in cells if c not in MISSING_TOKENS]
    parsed = [_parse_number(c) for c in present]
    if present and all(p is not None for p in parsed):
        it = iter(parsed)
        values = tuple(None if c in MISSING_TOKENS else next(it) for c in cells)
        return Column(name, "numeric", values)
    values = tuple(None if c in MISSING_TOKENS else c for c in cells)
    return Column(name, "categorical", values)


def load_csv(
    path: str | Path,
    header: bool = True,
    delimiter: str = ",",
    categorical: bool = False,
) -> RawTable:
    """Read a delimiter-separated file into typed columns.

    A column is numeric when every non-missing cell parses as a number.  With
    ``categorical=True`` every column is kept as text.  Empty cells and ``?``
    are missing.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            records = [r for r in csv.reader(fh, delimiter=delimiter)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except csv.Error as exc:
        raise DataError(f"{path}: CSV parse error: {exc}") from exc

    # trailing blank lines are not rows
    while records and not any(cell.strip() for cell in records[-1]):
        records.pop()
    if not records:
        raise DataError(f"{path}: empty file")

    if header:
        names = [h.strip() for h in records[0]]
        body = records[1:]
        first_line = 2
    else:
        names = [f"c{i}" for i in range(len(records[0]))]
        body = records
        first_line = 1
    if not body:
        raise DataError(f"{path}: no data rows")
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate column names in header")

    width = len(names)
    for i, rec in enumerate(body):
        if len(rec) != width:
            raise DataError(
                f"{path}: row {i} (line {first_line + i}) has {len(rec)} "
                f"columns, expected {width}"
            )

    columns = []
    for j, name in enumerate(names):
        cells = [rec[j].strip() for rec in body]
        if categorical:
            vals = tuple(None if c in MISSING_TOKENS else c for c in cells)
            columns.append(Column(name, "categorical", vals))
        else:
            columns.append(_infer_column(name, cells))
    return RawTable(tuple(columns))


# ---------------------------------------------------------------------------
# equal-frequency binning
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.6g}"


@dataclass(frozen=True)
class BinningSpec:
    """Cut points per numeric column.

    Bin ``j`` of a column is ``[cut[j-1], cut[j])`` with the observed minimum
    and maximum closing the outer ends; the last bin is closed on the right.
    """

    cuts: dict[str, tuple[float, ...]]
    lows: dict[str, float]
    highs: dict[str, float]
    bins: int = DEFAULT_BINS

    def n_bins(self, name: str) -> int:
        return len(self.cuts[name]) + 1

    def assign(self, name: str, value: float) -> int:
        return bisect.bisect_right(self.cuts[name], value)

    def labels(self, name: str) -> list[str]:
        edges = [self.lows[name], *self.cuts[name], self.highs[name]]
        out = []
        for j in range(len(edges) - 1):
            close = "]" if j == len(edges) - 2 else ")"
            out.append(f"[{_fmt(edges[j])},{_fmt(edges[j + 1])}{close}")
        return out

    def label(self, name: str, value: float) -> str:
        return self.labels(name)[self.assign(name, value)]


def equal_frequency_cuts(values: Sequence[float], bins: int) -> tuple[float, ...]:
    """Cut points splitting sorted ``values`` into ``bins`` near-equal groups.

    The ``j``-th cut sits between order statistics ``m`` and ``m + 1`` with
    ``m = floor(j * n / bins)``; a cut that would fall between two equal values
    is dropped, so heavy duplication yields fewer bins.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    xs = sorted(values)
    n = len(xs)
    cuts: list[float] = []
    for j in range(1, bins):
        m = (j * n) // bins  # size of the lower part
        if m <= 0 or m >= n:
            continue
        lo, hi = xs[m - 1], xs[m]
        if lo == hi:
            continue
        cut = (lo + hi) / 2.0
        if not cuts or cut > cuts[-1]:
            cuts.append(cut)
    return tuple(cuts)


def equal_frequency_bin(
    values: Sequence[float], bins: int = DEFAULT_BINS, name: str = "x"
) -> tuple[BinningSpec, list[str]]:
    """Discretize one numeric column; returns the spec and per-value labels."""
    bad = [i for i, v in enumerate(values) if v is None or not math.isfinite(v)]
    if bad:
        shown = ", ".join(str(i) for i in bad[:10])
        raise DataError(f"column {name!r}: non-finite values at rows {shown}")
    if not values:
        raise DataError(f"column {name!r}: no values to bin")
    cuts = equal_frequency_cuts(values, bins)
    if len(cuts) + 1 < bins:
        warnings.warn(
            f"column {name!r}: only {len(cuts) + 1} of {bins} bins are "
            "distinguishable (duplicate values)",
            stacklevel=2,
        )
    spec = BinningSpec({name: cuts}, {name: min(values)}, {name: max(values)}, bins)
    labels = spec.labels(name)
    return spec, [labels[spec.assign(name, v)] for v in values]


def discretize(table: RawTable, bins: int = DEFAULT_BINS) -> tuple[RawTable, BinningSpec]:
    """Replace every numeric column by interval labels.

    Missing cells stay missing.  ``bins == 0`` keeps numeric columns as their
    original text without binning.
    """
    cuts, lows, highs = {}, {}, {}
    columns = []
    for col in table.columns:
        if col.kind != "numeric":
            columns.append(col)
            continue
        if bins == 0:
            vals = tuple(None if v is None else _fmt(v) for v in col.values)
            columns.append(Column(col.name, "categorical", vals))
            continue
        present = [v for v in col.values if v is not None]
        if not present:
            raise DataError(f"column {col.name!r} has no values")
        spec, labels = equal_frequency_bin(present, bins, col.name)
        cuts.update(spec.cuts)
        lows.update(spec.lows)
        highs.update(spec.highs)
        it = iter(labels)
        vals = tuple(None if v is None else next(it) for v in col.values)
        columns.append(Column(col.name, "categorical", vals))
    return RawTable(tuple(columns)), BinningSpec(cuts, lows, highs, bins)


# ---------------------------------------------------------------------------
# schema and dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered features with their category vocabularies.

    Item ``(f, c)`` lives at flat position ``offsets[f] + c`` of the one-hot
    vector.
    """

    features: tuple[tuple[str, tuple[str, ...]], ...]
    offsets: tuple[int, ...] = field(init=False)
    total_dim: int = field(init=False)

    def __post_init__(self):
        seen = set()
        offsets = []
        pos = 0
        for name, cats in self.features:
            if name in seen:
                raise DataError(f"duplicate feature {name!r}")
            seen.add(name)
            if len(cats) < 1:
                raise DataError(f"feature {name!r} has no categories")
            if len(set(cats)) != len(cats):
                raise DataError(f"feature {name!r} has duplicate categories")
            offsets.append(pos)
            pos += len(cats)
        object.__setattr__(self, "offsets", tuple(offsets))
        object.__setattr__(self, "total_dim", pos)

    @classmethod
    def from_dict(cls, mapping: dict[str, Sequence[str]]) -> "FeatureSchema":
        return cls(tuple((k, tuple(v)) for k, v in mapping.items()))

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.features]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(c) for _, c in self.features], dtype=np.int64)

    @property
    def bounds(self) -> np.ndarray:
        """``k + 1`` block boundaries: ``offsets`` followed by ``total_dim``."""
        return np.array([*self.offsets, self.total_dim], dtype=np.int64)

    def categories(self, feature: int) -> tuple[str, ...]:
        return self.features[feature][1]

    def feature_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.features):
            if n == name:
                return i
        raise KeyError(name)

    def item_feature(self) -> np.ndarray:
        """Feature index of every flat position."""
        return np.repeat(np.arange(self.n_features), self.sizes)

    def flat(self, feature: int, category: int) -> int:
        return self.offsets[feature] + category

    def unflat(self, pos: int) -> tuple[int, int]:
        f = bisect.bisect_right(self.offsets, pos) - 1
        return f, pos - self.offsets[f]

    def label(self, feature: int, category: int) -> str:
        name, cats = self.features[feature]
        return f"{name}={cats[category]}"

    def parse_label(self, label: str) -> tuple[int, int]:
        """Inverse of :meth:`label`; feature names may themselves contain ``=``."""
        for f, (name, cats) in enumerate(self.features):
            prefix = name + "="
            if label.startswith(prefix):
                value = label[len(prefix):]
                if value in cats:
                    return f, cats.index(value)
        raise DataError(f"item {label!r} is not in the schema")

    def to_dict(self) -> dict:
        return {
            "features": [{"name": n, "categories": list(c)} for n, c in self.features],
            "offsets": list(self.offsets),
            "total_dim": self.total_dim,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FeatureSchema":
        return cls(tuple((f["name"], tuple(f["categories"])) for f in d["features"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class Dataset:
    schema: FeatureSchema
    rows: np.ndarray  # (n, k) category indices

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != self.schema.n_features:
            raise DataError(
                f"rows must have shape (n, {self.schema.n_features}), got {rows.shape}"
            )
        if rows.size and (rows.min() < 0 or np.any(rows >= self.schema.sizes)):
            raise DataError("row contains an out-of-range category index")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def encoded(self) -> np.ndarray:
        return encode_rows(self.schema, self.rows)

    def transactions(self) -> list[tuple[int, ...]]:
        """Rows as tuples of flat item positions."""
        flat = self.rows + np.asarray(self.schema.offsets)
        return [tuple(int(x) for x in r) for r in flat]


def build_schema(table: RawTable, binning: BinningSpec | None = None) -> FeatureSchema:
    """Schema from a table; categories ordered by first appearance.

    Numeric columns covered by ``binning`` are discretized first; other numeric
    columns are rejected.
    """
    if binning is not None and any(c.kind == "numeric" for c in table.columns):
        table = _apply_binning(table, binning)
    features = []
    for col in table.columns:
        if col.kind != "categorical":
            raise DataError(f"column {col.name!r} is numeric; discretize it first")
        cats = dict.fromkeys(MISSING if v is None else v for v in col.values)
        if not cats:
            raise DataError(f"column {col.name!r} has no observed categories")
        features.append((col.name, tuple(cats)))
    return FeatureSchema(tuple(features))


def _apply_binning(table: RawTable, binning: BinningSpec) -> RawTable:
    columns = []
    for col in table.columns:
        if col.kind == "numeric" and col.name in binning.cuts:
            vals = tuple(
                None if v is None else binning.label(col.name, v) for v in col.values
            )
            columns.append(Column(col.name, "categorical", vals))
        else:
            columns.append(col)
    return RawTable(tuple(columns))


def table_to_dataset(table: RawTable, schema: FeatureSchema) -> Dataset:
    index = [{c: j for j, c in enumerate(cats)} for _, cats in schema.features]
    if table.names != schema.names:
        raise DataError("table columns do not match schema features")
    rows = np.empty((table.n_rows, schema.n_features), dtype=np.int64)
    for f, col in enumerate(table.columns):
        lookup = index[f]
        for i, v in enumerate(col.values):
            key = MISSING if v is None else v
            try:
                rows[i, f] = lookup[key]
            except KeyError:
                raise DataError(
                    f"row {i}, column {col.name!r}: unknown category {key!r}"
                ) from None
    return Dataset(schema, rows)


def encode_row(schema: FeatureSchema, row: Sequence[int]) -> np.ndarray:
    """One-hot vector for one row of category indices."""
    if len(row) != schema.n_features:
        raise DataError(f"row has {len(row)} entries, schema has {schema.n_features}")
    out = np.zeros(schema.total_dim)
    for f, c in enumerate(row):
        if not 0 <= c < len(schema.features[f][1]):
            raise DataError(f"category index {c} out of range for feature {f}")
        out[schema.offsets[f] + c] = 1.0
    return out


def encode_rows(schema: FeatureSchema, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64)
    out = np.zeros((rows.shape[0], schema.total_dim))
    cols = rows + np.asarray(schema.offsets, dtype=np.int64)
    np.put_along_axis(out, cols, 1.0, axis=1)
    return out


def decode_row(schema: FeatureSchema, vector: Sequence[float]) -> list[int]:
    """Per-block argmax; inverse of :func:`encode_row` on one-hot input."""
    v = np.asarray(vector)
    b = schema.bounds
    return [int(np.argmax(v[b[i]:b[i + 1]])) for i in range(schema.n_features)]


def load_dataset(
    path: str | Path,
    bins: int = DEFAULT_BINS,
    header: bool = True,
    delimiter: str = ",",
    ignore: Iterable[str] = (),
    categorical: bool = False,
) -> tuple[Dataset, BinningSpec]:
    """Load, discretize and encode a CSV file in one step."""
    table = load_csv(path, header=header, delimiter=delimiter, categorical=categorical)
    ignore = list(ignore)
    if ignore:
        table = table.drop(ignore)
    if not table.columns:
        raise DataError(f"{path}: no columns left")
    table, binning = discretize(table, bins)
    schema = build_schema(table)
    return table_to_dataset(table, schema), binning


def dataset_from_records(
    records: Sequence[Sequence[str]], names: Sequence[str]
) -> Dataset:
    """Build a dataset straight from categorical records (no binning)."""
    cols = tuple(
        Column(str(n), "categorical", tuple(str(r[j]) for r in records))
        for j, n in enumerate(names)
    )
    table = RawTable(cols)
    return table_to_dataset(table, build_schema(table))
