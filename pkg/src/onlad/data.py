"""Dataset loading, min-max normalization and seeded partitioning."""

from __future__ import annotations

import csv
import gzip
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import DatasetError


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray          # N x n, float64
    labels: np.ndarray            # N, int64 in [0, class_count)
    class_names: tuple[str, ...]
    name: str = ""
    norm: "NormStats | None" = field(default=None, repr=False)

    def __post_init__(self):
        if self.features.ndim != 2:
            raise DatasetError("features must be 2-D")
        if len(self.labels) != len(self.features):
            raise DatasetError("features and labels differ in length")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise DatasetError("label outside [0, class_count)")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def class_count(self) -> int:
        return len(self.class_names)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return replace(self, features=self.features[idx], labels=self.labels[idx])

    def select_classes(self, classes: Sequence[int]) -> "Dataset":
        """Keep only the given classes and re-encode their labels as 0..len-1."""
        classes = list(classes)
        mask = np.isin(self.labels, classes)
        remap = np.full(self.class_count, -1, dtype=np.int64)
        remap[classes] = np.arange(len(classes))
        return replace(self, features=self.features[mask], labels=remap[self.labels[mask]],
                       class_names=tuple(self.class_names[c] for c in classes))


@dataclass(frozen=True)
class NormStats:
    minimum: np.ndarray
    maximum: np.ndarray


def _open_text(path: Path):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8", newline="")


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _label_order(values: np.ndarray) -> list[str]:
    uniq = sorted(set(values.tolist()))
    if all(_is_number(u) for u in uniq):
        uniq.sort(key=float)
    return uniq


def load_csv(path, label_column: str | int = -1, name: str | None = None) -> Dataset:
    """Read a comma-separated file into a Dataset.

    ``label_column`` is a column name (requires a header) or an integer
    position (negative counts from the end). A header is detected when the
    first row contains a non-numeric field outside the label column. Labels
    are encoded by sorted unique value, numerically when all labels parse as
    numbers.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: no such file")
    with _open_text(path) as fh:
        first = next(csv.reader(fh), None)
    if not first:
        raise DatasetError(f"{path}: empty file")
    width = len(first)

    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if label_column not in first:
            raise DatasetError(f"{path}: label column {label_column!r} not in header")
        label_idx = first.index(label_column)
        has_header = True
    else:
        label_idx = int(label_column)
        if not -width <= label_idx < width:
            raise DatasetError(f"{path}: label column {label_idx} out of range for {width} columns")
        label_idx %= width
        has_header = any(not _is_number(v) for i, v in enumerate(first) if i != label_idx)
    if width < 2:
        raise DatasetError(f"{path}: need at least one feature column besides the label")

    try:
        frame = pd.read_csv(path, header=0 if has_header else None, dtype=str,
                            keep_default_na=False, skip_blank_lines=True)
    except pd.errors.ParserError as exc:
        raise DatasetError(f"{path}: malformed row: {exc}") from None
    if frame.shape[1] != width:
        raise DatasetError(f"{path}: inconsistent column count")
    offset = 2 if has_header else 1
    short = frame.isna().any(axis=1).to_numpy()
    if short.any():
        row = int(np.argmax(short))
        raise DatasetError(f"{path}:{row + offset}: malformed row, expected {width} fields")

    raw_labels = frame.iloc[:, label_idx].to_numpy(dtype=str)
    feats = frame.drop(columns=frame.columns[label_idx])
    try:
        features = feats.to_numpy(dtype=np.float64)
    except ValueError:
        for col in feats.columns:
            bad = pd.to_numeric(feats[col], errors="coerce").isna().to_numpy()
            if bad.any():
                row = int(np.argmax(bad))
                raise DatasetError(f"{path}:{row + offset}: non-numeric feature "
                                   f"{feats[col].iloc[row]!r} in column {col!r}") from None
        raise
    if (raw_labels == "").any():
        row = int(np.argmax(raw_labels == ""))
        raise DatasetError(f"{path}:{row + offset}: missing label")

    order = _label_order(raw_labels)
    lookup = {v: i for i, v in enumerate(order)}
    labels = np.fromiter((lookup[v] for v in raw_labels), dtype=np.int64, count=len(raw_labels))
    return Dataset(features, labels, tuple(order), name or path.name.split(".")[0])


def load_features_csv(path) -> np.ndarray:
    """Read an all-numeric CSV (optional header row) as an N x n float matrix."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: no such file")
    with _open_text(path) as fh:
        first = next(csv.reader(fh), None)
    if not first:
        raise DatasetError(f"{path}: empty file")
    has_header = any(not _is_number(v) for v in first)
    try:
        frame = pd.read_csv(path, header=0 if has_header else None, dtype=str,
                            keep_default_na=False, skip_blank_lines=True)
    except pd.errors.ParserError as exc:
        raise DatasetError(f"{path}: malformed row: {exc}") from None
    offset = 2 if has_header else 1
    short = frame.isna().any(axis=1).to_numpy()
    if short.any():
        row = int(np.argmax(short))
        raise DatasetError(f"{path}:{row + offset}: malformed row, expected {len(first)} fields")
    values = frame.apply(pd.to_numeric, errors="coerce")
    bad = values.isna().to_numpy()
    if bad.any():
        row, col = map(int, np.argwhere(bad)[0])
        raise DatasetError(f"{path}:{row + offset}: non-numeric value {frame.iat[row, col]!r}")
    return values.to_numpy(dtype=np.float64)


def minmax_normalize(ds: Dataset) -> tuple[Dataset, NormStats]:
    """Scale each feature to [0, 1] over the whole dataset; constant features become 0."""
    x = ds.features
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    varying = span > 0
    out = np.zeros_like(x)
    out[:, varying] = (x[:, varying] - lo[varying]) / span[varying]
    stats = NormStats(lo, hi)
    return replace(ds, features=out, norm=stats), stats


def partition_by_class(ds: Dataset) -> list[np.ndarray]:
    return [np.flatnonzero(ds.labels == c) for c in range(ds.class_count)]


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_without_replacement(indices, count: int, seed) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    if count > len(indices):
        raise DatasetError(f"requested {count} samples from {len(indices)}")
    if count < 0:
        raise DatasetError("count must be non-negative")
    return _rng(seed).choice(indices, size=count, replace=False)


def split_indices(indices, fractions: Sequence[float], seed) -> list[np.ndarray]:
    """Shuffle ``indices`` and cut consecutive parts of the given fractions.

    Part sizes are ``floor(f * N)``, except that when the fractions sum to 1
    the last part absorbs the rounding remainder.
    """
    fractions = [float(f) for f in fractions]
    if any(f <= 0 for f in fractions):
        raise DatasetError("fractions must be positive")
    total = sum(fractions)
    if total > 1 + 1e-9:
        raise DatasetError(f"fractions sum to {total} > 1")
    shuffled = _rng(seed).permutation(np.asarray(indices, dtype=np.int64))
    n = len(shuffled)
    sizes = [int(np.floor(f * n + 1e-9)) for f in fractions]
    if abs(total - 1) < 1e-9:
        sizes[-1] = n - sum(sizes[:-1])
    cuts = np.cumsum([0] + sizes)
    return [shuffled[cuts[i]:cuts[i + 1]] for i in range(len(sizes))]


def split(ds: Dataset, fractions: Sequence[float], seed, stratified: bool = False) -> list[Dataset]:
    """Split a dataset into disjoint parts; ``stratified`` splits each class separately."""
    rng = _rng(seed)
    if not stratified:
        return [ds.subset(p) for p in split_indices(np.arange(ds.n_samples), fractions, rng)]
    parts: list[list[np.ndarray]] = [[] for _ in fractions]
    for members in partition_by_class(ds):
        for i, p in enumerate(split_indices(members, fractions, rng)):
            parts[i].append(p)
    return [ds.subset(np.sort(np.concatenate(p))) for p in parts]
