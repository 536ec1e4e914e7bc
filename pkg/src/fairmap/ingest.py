"""Load raw tabular CSVs and encode them into numeric datasets with group masks.

A dataset carries the encoded feature matrix, binary labels, and two
two-group partitions (attribute X, e.g. female/male, and attribute Y, e.g.
young/old) used as the fairness axes downstream. Encoding is dumb on
purpose: dummy variables for categoricals, min-max scaling for numerics,
no imputation, no train/test split.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

_DATASET_MAGIC = "# fairmap-dataset"


@dataclass(frozen=True)
class RawTable:
    """A parsed CSV: header plus rows of text cells."""

    column_names: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        cols = tuple(self.column_names)
        rows = tuple(tuple(r) for r in self.rows)
        object.__setattr__(self, "column_names", cols)
        object.__setattr__(self, "rows", rows)
        if not rows:
            raise DataError("table has no rows")
        for i, row in enumerate(rows):
            if len(row) != len(cols):
                raise DataError(
                    f"row {i + 1}: expected {len(cols)} cells, got {len(row)}")

    def column(self, name: str) -> list[str]:
        try:
            j = self.column_names.index(name)
        except ValueError:
            raise DataError(f"no column named {name!r}") from None
        return [row[j] for row in self.rows]


@dataclass(frozen=True)
class ProtectedSpec:
    """How one protected attribute splits cases into group A vs group B.

    kind "equals": group A holds rows whose cell equals ``value``.
    kind "threshold": group A holds rows whose numeric cell is <= the
    schema-wide age threshold (the young side).
    """

    column: str
    kind: str
    value: str | None = None
    name_a: str = "a"
    name_b: str = "b"

    def __post_init__(self):
        if self.kind not in ("equals", "threshold"):
            raise ConfigError(f"protected kind must be equals|threshold, got {self.kind!r}")
        if self.kind == "equals" and self.value is None:
            raise ConfigError(f"protected column {self.column!r}: equals needs a value")
        for nm in (self.name_a, self.name_b):
            if not nm or any(c.isspace() or c == "/" for c in nm):
                raise ConfigError(f"bad group name {nm!r} (no spaces or '/')")


@dataclass(frozen=True)
class SchemaSpec:
    """Which columns become the label, the features and the group masks."""

    label_column: str
    positive_value: str
    numeric_columns: tuple[str, ...]
    categorical_columns: tuple[str, ...]
    protected_x: ProtectedSpec
    protected_y: ProtectedSpec
    age_threshold: int = 34

    def __post_init__(self):
        object.__setattr__(self, "numeric_columns", tuple(self.numeric_columns))
        object.__setattr__(self, "categorical_columns", tuple(self.categorical_columns))
        feats = self.numeric_columns + self.categorical_columns
        if self.label_column in feats:
            raise ConfigError(f"label column {self.label_column!r} listed among features")
        dupes = {c for c in feats if feats.count(c) > 1}
        if dupes:
            raise ConfigError(f"feature columns listed twice: {sorted(dupes)}")
        if self.age_threshold <= 0:
            raise ConfigError(f"age_threshold must be > 0, got {self.age_threshold}")


def schema_from_dict(cfg: dict) -> SchemaSpec:
    try:
        label = cfg["label"]
        prot = {}
        for key in ("protected_x", "protected_y"):
            p = cfg[key]
            if "equals" in p:
                kind, value = "equals", str(p["equals"])
            elif p.get("threshold"):
                kind, value = "threshold", None
            else:
                raise ConfigError(f"{key}: need either 'equals' or 'threshold': true")
            prot[key] = ProtectedSpec(
                column=p["column"], kind=kind, value=value,
                name_a=p.get("name_a", "a"), name_b=p.get("name_b", "b"))
        return SchemaSpec(
            label_column=label["column"],
            positive_value=str(label["positive"]),
            numeric_columns=tuple(cfg.get("numeric", ())),
            categorical_columns=tuple(cfg.get("categorical", ())),
            protected_x=prot["protected_x"],
            protected_y=prot["protected_y"],
            age_threshold=int(cfg.get("age_threshold", 34)),
        )
    except KeyError as exc:
        raise ConfigError(f"schema config missing key {exc}") from None


def load_schema(path) -> SchemaSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read schema {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return schema_from_dict(cfg)


@dataclass(frozen=True)
class Dataset:
    """Encoded feature matrix + labels + the two group partitions.

    Immutable after construction: all arrays are marked read-only, so a
    dataset is safe to share across evaluation workers.
    """

    features: np.ndarray
    labels: np.ndarray
    mask_xa: np.ndarray
    mask_xb: np.ndarray
    mask_ya: np.ndarray
    mask_yb: np.ndarray
    feature_names: tuple[str, ...] = ()
    name_xa: str = "xa"
    name_xb: str = "xb"
    name_ya: str = "ya"
    name_yb: str = "yb"

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        y = np.asarray(self.labels, dtype=np.int8)
        if x.ndim != 2 or x.shape[0] < 1:
            raise DataError(f"features must be a non-empty 2-D matrix, got shape {x.shape}")
        n = x.shape[0]
        if y.shape != (n,):
            raise DataError("labels length does not match feature rows")
        if not np.all(np.isfinite(x)):
            raise DataError("features contain non-finite values")
        if not np.all((y == 0) | (y == 1)):
            raise DataError("labels must be 0 or 1")
        masks = {}
        for nm in ("mask_xa", "mask_xb", "mask_ya", "mask_yb"):
            m = np.asarray(getattr(self, nm), dtype=bool)
            if m.shape != (n,):
                raise DataError(f"{nm} length does not match feature rows")
            masks[nm] = m
        for a, b, tag in ((masks["mask_xa"], masks["mask_xb"], "X"),
                          (masks["mask_ya"], masks["mask_yb"], "Y")):
            if np.any(a & b) or not np.all(a | b):
                raise DataError(f"attribute {tag} masks must partition all cases")
            if not a.any() or not b.any():
                raise DataError(f"attribute {tag} has an empty group")
        for arr in (x, y, *masks.values()):
            arr.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        for nm, m in masks.items():
            object.__setattr__(self, nm, m)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        # cached bool labels for the counting kernels
        lp = y == 1
        lp.setflags(write=False)
        object.__setattr__(self, "_labels_pos", lp)

    @property
    def n_cases(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def labels_pos(self) -> np.ndarray:
        return self._labels_pos

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            labels=self.labels[idx],
            mask_xa=self.mask_xa[idx],
            mask_xb=self.mask_xb[idx],
            mask_ya=self.mask_ya[idx],
            mask_yb=self.mask_yb[idx],
            feature_names=self.feature_names,
            name_xa=self.name_xa, name_xb=self.name_xb,
            name_ya=self.name_ya, name_yb=self.name_yb,
        )


def load_csv(path) -> RawTable:
    """Parse an RFC-4180-style CSV with a header row."""
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: no header") from None
            rows = []
            for i, row in enumerate(reader, start=1):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(
                        f"{path}: row {i}: expected {len(header)} cells, got {len(row)}")
                rows.append(tuple(row))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return RawTable(column_names=tuple(header), rows=tuple(rows))


def _group_mask(raw: RawTable, spec: ProtectedSpec, age_threshold: int) -> np.ndarray:
    cells = raw.column(spec.column)
    if spec.kind == "equals":
        mask = np.array([c == spec.value for c in cells], dtype=bool)
    else:
        vals = np.empty(len(cells), dtype=np.float64)
        for i, c in enumerate(cells):
            try:
                vals[i] = float(c)
            except ValueError:
                raise DataError(
                    f"column {spec.column!r}, row {i + 1}: non-numeric cell {c!r}") from None
        mask = vals <= age_threshold
    if not mask.any() or mask.all():
        raise DataError(
            f"protected column {spec.column!r} produces an empty group "
            f"({spec.name_a if not mask.any() else spec.name_b})")
    return mask


def encode(raw: RawTable, schema: SchemaSpec) -> Dataset:
    """Encode a raw table: dummies for categoricals, min-max for numerics.

    Deterministic: category values are expanded in sorted order, columns in
    schema order (numerics first). Constant numeric columns encode to zeros.
    Missing (empty) cells are an error.
    """
    n = len(raw.rows)
    blocks: list[np.ndarray] = []
    names: list[str] = []
    for col in schema.numeric_columns:
        cells = raw.column(col)
        vals = np.empty(n, dtype=np.float64)
        for i, c in enumerate(cells):
            if c == "":
                raise DataError(f"column {col!r}, row {i + 1}: missing cell")
            try:
                vals[i] = float(c)
            except ValueError:
                raise DataError(
                    f"column {col!r}, row {i + 1}: unparseable numeric cell {c!r}") from None
        lo, hi = vals.min(), vals.max()
        if hi > lo:
            vals = (vals - lo) / (hi - lo)
        else:
            vals = np.zeros(n, dtype=np.float64)
        blocks.append(vals.reshape(n, 1))
        names.append(col)
    for col in schema.categorical_columns:
        cells = raw.column(col)
        for i, c in enumerate(cells):
            if c == "":
                raise DataError(f"column {col!r}, row {i + 1}: missing cell")
        cats = sorted(set(cells))
        index = {c: k for k, c in enumerate(cats)}
        dummies = np.zeros((n, len(cats)), dtype=np.float64)
        for i, c in enumerate(cells):
            dummies[i, index[c]] = 1.0
        blocks.append(dummies)
        names.extend(f"{col}={c}" for c in cats)

    if not blocks:
        raise ConfigError("schema lists no feature columns")
    features = np.hstack(blocks)
    label_cells = raw.column(schema.label_column)
    labels = np.array([1 if c == schema.positive_value else 0 for c in label_cells],
                      dtype=np.int8)
    mask_xa = _group_mask(raw, schema.protected_x, schema.age_threshold)
    mask_ya = _group_mask(raw, schema.protected_y, schema.age_threshold)
    return Dataset(
        features=features,
        labels=labels,
        mask_xa=mask_xa, mask_xb=~mask_xa,
        mask_ya=mask_ya, mask_yb=~mask_ya,
        feature_names=tuple(names),
        name_xa=schema.protected_x.name_a, name_xb=schema.protected_x.name_b,
        name_ya=schema.protected_y.name_a, name_yb=schema.protected_y.name_b,
    )


@dataclass(frozen=True)
class CheckReport:
    passed: bool
    actual: int
    expected: int

    @property
    def message(self) -> str:
        verdict = "ok" if self.passed else "MISMATCH"
        return f"feature count {verdict}: got {self.actual}, expected {self.expected}"


def feature_count_check(dataset: Dataset, expected: int) -> CheckReport:
    """Advisory comparison of the encoded width against an expected count."""
    actual = dataset.n_features
    return CheckReport(passed=actual == expected, actual=actual, expected=expected)


def save_dataset(dataset: Dataset, path) -> None:
    """Write an encoded dataset as a self-describing CSV.

    First line is a metadata comment, then a header row, then one row per
    case: feature values (full precision), label, and the two group-A mask
    bits (B groups are the complements).
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(
            f"{_DATASET_MAGIC} n={dataset.n_cases} d={dataset.n_features}"
            f" x={dataset.name_xa}/{dataset.name_xb}"
            f" y={dataset.name_ya}/{dataset.name_yb}\n")
        writer = csv.writer(fh)
        names = dataset.feature_names or tuple(
            f"f{j}" for j in range(dataset.n_features))
        writer.writerow(list(names) + ["label", "xa", "ya"])
        for i in range(dataset.n_cases):
            row = [repr(float(v)) for v in dataset.features[i]]
            row.append(str(int(dataset.labels[i])))
            row.append("1" if dataset.mask_xa[i] else "0")
            row.append("1" if dataset.mask_ya[i] else "0")
            writer.writerow(row)


def is_encoded_dataset(path) -> bool:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.readline().startswith(_DATASET_MAGIC)
    except OSError:
        return False


def load_dataset(path) -> Dataset:
    """Read back a CSV produced by ``save_dataset`` (lossless round trip)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            meta_line = fh.readline()
            if not meta_line.startswith(_DATASET_MAGIC):
                raise DataError(f"{path}: not an encoded dataset file")
            meta = dict(kv.split("=", 1) for kv in meta_line.split()[2:])
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or header[-3:] != ["label", "xa", "ya"]:
                raise DataError(f"{path}: line 2: bad dataset header")
            d = len(header) - 3
            feats, labels, xa, ya = [], [], [], []
            for i, row in enumerate(reader, start=3):
                if not row:
                    continue
                if len(row) != d + 3:
                    raise DataError(f"{path}: line {i}: expected {d + 3} cells, got {len(row)}")
                try:
                    feats.append([float(c) for c in row[:d]])
                    labels.append(int(row[d]))
                    xa.append(row[d + 1] == "1")
                    ya.append(row[d + 2] == "1")
                except ValueError as exc:
                    raise DataError(f"{path}: line {i}: {exc}") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not feats:
        raise DataError(f"{path}: no data rows")
    name_xa, name_xb = meta.get("x", "xa/xb").split("/", 1)
    name_ya, name_yb = meta.get("y", "ya/yb").split("/", 1)
    mask_xa = np.array(xa, dtype=bool)
    mask_ya = np.array(ya, dtype=bool)
    return Dataset(
        features=np.array(feats, dtype=np.float64),
        labels=np.array(labels, dtype=np.int8),
        mask_xa=mask_xa, mask_xb=~mask_xa,
        mask_ya=mask_ya, mask_yb=~mask_ya,
        feature_names=tuple(header[:d]),
        name_xa=name_xa, name_xb=name_xb, name_ya=name_ya, name_yb=name_yb,
    )
