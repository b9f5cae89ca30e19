"""Dataset ingestion and per-column transforms into [0, 1].

Numeric columns: missing values (empty cells or configured sentinels) are
imputed with the training mean, then mapped through the training
empirical CDF (average-rank convention, linear interpolation between
distinct values, clamping outside the observed range). Categorical
columns: smoothed target encoding toward the global positive rate,
followed by a quantile map fitted on the encoded training column.
"""

from __future__ import annotations

import csv
import json
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import LabelError, MisalignedInstanceError, SchemaError, UnfittableColumnError

SCHEMA_VERSION = 1

# Pseudo-count pulling rare categories toward the global positive rate.
TARGET_SMOOTHING = 10.0

MISSING_CATEGORY = "__missing__"

RawValue = object  # float | str | None


@dataclass
class RawDataset:
    """Column names, raw rows, and binary labels."""

    columns: list[str]
    rows: list[list[RawValue]]
    labels: np.ndarray

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=float)
        if len(self.rows) != len(self.labels):
            raise LabelError(f"{len(self.rows)} rows but {len(self.labels)} labels")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise SchemaError(f"row {i} has {len(row)} values, expected {len(self.columns)}")
        bad = set(np.unique(self.labels)) - {0.0, 1.0}
        if bad:
            raise LabelError(f"labels must be binary 0/1, found {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.rows)

    def subset(self, indices: Sequence[int]) -> "RawDataset":
        idx = list(indices)
        return RawDataset(self.columns, [self.rows[i] for i in idx], self.labels[idx])


def parse_numeric(value: RawValue) -> Optional[float]:
    """Parse a raw cell as a number; None when empty. A trailing '%' is stripped.

    Raises ValueError for non-numeric text.
    """
    if value is None:
        return None
    if isinstance(value, (int, float)):
        v = float(value)
        return None if np.isnan(v) else v
    text = str(value).strip()
    if not text:
        return None
    if text.endswith("%"):
        text = text[:-1].strip()
    return float(text)


def _is_missing(value: RawValue, sentinels: frozenset) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and np.isnan(value):
        return True
    if isinstance(value, str) and not value.strip():
        return True
    if value in sentinels:
        return True
    # Numeric sentinels also match their textual form ("-9" vs -9.0).
    try:
        return parse_numeric(value) in sentinels
    except ValueError:
        return False


@dataclass
class ColumnTransform:
    """Fitted transform for a single column."""

    name: str
    kind: str  # "numeric" | "categorical"
    sentinels: frozenset = frozenset()
    mean: Optional[float] = None
    target_map: dict[str, float] = field(default_factory=dict)
    prior: Optional[float] = None
    knots: list[float] = field(default_factory=list)
    knot_cdf: list[float] = field(default_factory=list)

    def encode(self, value: RawValue) -> float:
        """Map one raw value into [0, 1]."""
        if self.kind == "numeric":
            if _is_missing(value, self.sentinels):
                v = self.mean
            else:
                v = parse_numeric(value)
                if v is None:
                    v = self.mean
            return self._quantile(float(v))
        category = MISSING_CATEGORY if _is_missing(value, self.sentinels) else str(value)
        encoded = self.target_map.get(category, self.prior)
        return self._quantile(float(encoded))

    def _quantile(self, v: float) -> float:
        knots = self.knots
        if not knots:
            return 0.5
        if v <= knots[0]:
            return self.knot_cdf[0] if v == knots[0] else 0.0
        if v >= knots[-1]:
            return self.knot_cdf[-1] if v == knots[-1] else 1.0
        j = bisect_left(knots, v)
        if knots[j] == v:
            return self.knot_cdf[j]
        x0, x1 = knots[j - 1], knots[j]
        t0, t1 = self.knot_cdf[j - 1], self.knot_cdf[j]
        return t0 + (t1 - t0) * (v - x0) / (x1 - x0)


def _fit_quantile(values: np.ndarray) -> tuple[list[float], list[float]]:
    """Distinct sorted values with their average-rank CDF positions.

    A value with count c and C smaller observations maps to
    (C + c/2) / N, the mid-rank convention.
    """
    values = np.sort(np.asarray(values, dtype=float))
    n = len(values)
    distinct, counts = np.unique(values, return_counts=True)
    before = np.concatenate(([0], np.cumsum(counts)[:-1]))
    cdf = (before + counts / 2.0) / n
    return distinct.tolist(), cdf.tolist()


@dataclass
class PreprocessModel:
    """Fitted per-column transforms; immutable after fit."""

    columns: list[ColumnTransform]
    label_column: Optional[str] = None

    @property
    def feature_order(self) -> list[str]:
        return [c.name for c in self.columns]

    def apply(self, row: Sequence[RawValue]) -> np.ndarray:
        """Transform one raw row into x with every coordinate in [0, 1]."""
        if len(row) != len(self.columns):
            raise MisalignedInstanceError(
                f"row has {len(row)} values, model expects {len(self.columns)}"
            )
        return np.array([c.encode(v) for c, v in zip(self.columns, row)], dtype=float)

    def apply_mapping(self, features: dict) -> np.ndarray:
        """Transform a {column: raw value} mapping, catching misalignment."""
        missing = [c.name for c in self.columns if c.name not in features]
        extra = [k for k in features if k not in {c.name for c in self.columns}]
        if missing or extra:
            raise MisalignedInstanceError(
                f"features misaligned: missing {missing or 'none'}, unexpected {extra or 'none'}"
            )
        return self.apply([features[c.name] for c in self.columns])

    def apply_dataset(self, dataset: RawDataset) -> np.ndarray:
        if dataset.columns != self.feature_order:
            raise MisalignedInstanceError(
                f"dataset columns {dataset.columns} != fitted order {self.feature_order}"
            )
        return np.vstack([self.apply(r) for r in dataset.rows]) if dataset.rows else np.empty((0, len(self.columns)))

    def to_document(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "label_column": self.label_column,
            "columns": [
                {
                    "name": c.name,
                    "kind": c.kind,
                    "sentinels": sorted(c.sentinels, key=repr),
                    "mean": c.mean,
                    "target_map": c.target_map,
                    "prior": c.prior,
                    "knots": c.knots,
                    "knot_cdf": c.knot_cdf,
                }
                for c in self.columns
            ],
        }

    @classmethod
    def from_document(cls, doc: dict) -> "PreprocessModel":
        if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
            raise SchemaError(f"unknown preprocess schema version {doc.get('schema_version')!r}")
        columns = [
            ColumnTransform(
                name=cd["name"],
                kind=cd["kind"],
                sentinels=frozenset(cd.get("sentinels", [])),
                mean=cd.get("mean"),
                target_map=dict(cd.get("target_map", {})),
                prior=cd.get("prior"),
                knots=list(cd.get("knots", [])),
                knot_cdf=list(cd.get("knot_cdf", [])),
            )
            for cd in doc["columns"]
        ]
        return cls(columns=columns, label_column=doc.get("label_column"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_document(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PreprocessModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_document(json.load(fh))


def drop_empty_rows(dataset: RawDataset, sentinels_by_column: dict[str, frozenset]) -> RawDataset:
    """Remove rows whose every feature value is missing."""
    keep = []
    for i, row in enumerate(dataset.rows):
        if any(
            not _is_missing(v, sentinels_by_column.get(c, frozenset()))
            for c, v in zip(dataset.columns, row)
        ):
            keep.append(i)
    return dataset.subset(keep)


def infer_kind(values: list[RawValue], sentinels: frozenset) -> str:
    """Numeric when every non-missing value parses as a number."""
    for v in values:
        if _is_missing(v, sentinels):
            continue
        try:
            parse_numeric(v)
        except ValueError:
            return "categorical"
    return "numeric"


def fit(
    train: RawDataset,
    kinds: Optional[dict[str, str]] = None,
    sentinels: Optional[dict[str, Sequence]] = None,
    label_column: Optional[str] = None,
    smoothing: float = TARGET_SMOOTHING,
) -> PreprocessModel:
    """Fit per-column transforms on the training split only."""
    if len(train) == 0:
        raise UnfittableColumnError("empty training split")
    classes = set(np.unique(train.labels))
    if not classes <= {0.0, 1.0} or len(classes) < 2:
        raise LabelError(f"training labels must contain both classes, found {sorted(classes)}")

    kinds = kinds or {}
    sentinel_map = {c: frozenset(s) for c, s in (sentinels or {}).items()}
    labels = train.labels
    prior = float(labels.mean())

    transforms: list[ColumnTransform] = []
    for j, name in enumerate(train.columns):
        col_sentinels = sentinel_map.get(name, frozenset())
        values = [r[j] for r in train.rows]
        kind = kinds.get(name) or infer_kind(values, col_sentinels)
        if kind not in ("numeric", "categorical"):
            raise SchemaError(f"column {name!r}: unknown kind {kind!r}")

        if kind == "numeric":
            parsed: list[Optional[float]] = []
            for i, v in enumerate(values):
                if _is_missing(v, col_sentinels):
                    parsed.append(None)
                    continue
                try:
                    parsed.append(parse_numeric(v))
                except ValueError as exc:
                    raise UnfittableColumnError(f"column {name!r} row {i}: {exc}") from exc
            present = [v for v in parsed if v is not None]
            if not present:
                raise UnfittableColumnError(f"column {name!r} has no usable values")
            mean = float(np.mean(present))
            filled = np.array([mean if v is None else v for v in parsed], dtype=float)
            knots, cdf = _fit_quantile(filled)
            transforms.append(
                ColumnTransform(name=name, kind="numeric", sentinels=col_sentinels, mean=mean, knots=knots, knot_cdf=cdf)
            )
        else:
            categories = [
                MISSING_CATEGORY if _is_missing(v, col_sentinels) else str(v) for v in values
            ]
            target_map: dict[str, float] = {}
            for cat in sorted(set(categories)):
                mask = np.array([c == cat for c in categories])
                pos = float(labels[mask].sum())
                count = float(mask.sum())
                target_map[cat] = (pos + smoothing * prior) / (count + smoothing)
            encoded = np.array([target_map[c] for c in categories], dtype=float)
            knots, cdf = _fit_quantile(encoded)
            transforms.append(
                ColumnTransform(
                    name=name, kind="categorical", sentinels=col_sentinels,
                    target_map=target_map, prior=prior, knots=knots, knot_cdf=cdf,
                )
            )

    return PreprocessModel(columns=transforms, label_column=label_column)


def split_indices(n: int, seed: int, eval_fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Seeded 80-20 shuffle split; returns (train, eval) index arrays."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_eval = int(round(n * eval_fraction))
    return perm[n_eval:], perm[:n_eval]


def load_csv(
    path,
    label_column: str,
    label_positive: Optional[object] = None,
) -> RawDataset:
    """Read a CSV with a header row into a RawDataset.

    ``label_positive`` maps a categorical label value to 1 (e.g. "Bad");
    when None the label column must already be 0/1.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty CSV") from None
        if label_column not in header:
            raise LabelError(f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column)
        columns = [h for i, h in enumerate(header) if i != label_idx]
        rows: list[list[RawValue]] = []
        labels: list[float] = []
        for line in reader:
            if not line:
                continue
            raw_label = line[label_idx]
            if label_positive is not None:
                labels.append(1.0 if str(raw_label) == str(label_positive) else 0.0)
            else:
                try:
                    value = float(raw_label)
                except ValueError:
                    raise LabelError(f"{path}: non-numeric label {raw_label!r}; set label_positive") from None
                labels.append(value)
            rows.append([v for i, v in enumerate(line) if i != label_idx])
    return RawDataset(columns=columns, rows=rows, labels=np.array(labels))
