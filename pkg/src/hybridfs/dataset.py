"""Labeled tabular datasets: CSV I/O, [0, 1] scaling, stratified folds, feature masks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable samples x features matrix with dense integer class labels.

    ``labels`` hold values in ``0..k-1`` and every class must occur. A dataset
    with zero feature columns is allowed; it is what an empty feature mask
    produces.
    """

    values: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels)
        if values.ndim != 2:
            raise DataError("values must be a 2-D matrix")
        n, d = values.shape
        if n < 2:
            raise DataError(f"n_samples < 2 (got {n})")
        if labels.shape != (n,):
            raise DataError("labels must have one entry per sample")
        if not np.issubdtype(labels.dtype, np.integer):
            raise DataError("labels must be integers")
        k = len(self.class_names)
        if k < 2:
            raise DataError(f"need at least 2 classes (got {k})")
        if labels.min() < 0 or labels.max() >= k:
            raise DataError("labels out of range [0, k)")
        if np.bincount(labels, minlength=k).min() == 0:
            raise DataError("every class must appear at least once")
        if len(self.feature_names) != d:
            raise DataError("feature_names length does not match n_features")
        if not np.all(np.isfinite(values)):
            raise DataError("values must be finite")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int64)))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def same_content(self, other: Dataset) -> bool:
        return (
            self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.labels, other.labels)
            and self.feature_names == other.feature_names
            and self.class_names == other.class_names
        )


@dataclass(frozen=True)
class FoldPlan:
    assignments: np.ndarray = field(repr=False)
    K: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def as_mask(bits, length: int | None = None) -> np.ndarray:
    """Coerce ``bits`` to a boolean feature mask.

    Accepts a sequence of booleans/ints or a string such as ``"10011"``.
    """
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError(f"mask string must contain only 0/1: {bits!r}")
        mask = np.array([c == "1" for c in bits], dtype=bool)
    else:
        mask = np.asarray(bits).astype(bool).ravel()
    if length is not None and mask.shape[0] != length:
        raise ValueError(f"mask length {mask.shape[0]} != {length}")
    return mask


def mask_to_str(mask: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in mask)


def load_csv(path: str | Path, label_column: str | int = "class") -> Dataset:
    """Read one sample per row; header row gives the feature names.

    Class labels are re-encoded to ``0..k-1`` in order of first appearance.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]

    if isinstance(label_column, int):
        if not -len(header) <= label_column < len(header):
            raise DataError(f"{path}: label column index {label_column} out of range")
        label_idx = label_column % len(header)
    else:
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not found")
        label_idx = header.index(label_column)

    feature_names = [h for j, h in enumerate(header) if j != label_idx]
    seen = set()
    for name in feature_names:
        if name in seen:
            raise DataError(f"{path}: duplicate feature name {name!r}")
        seen.add(name)

    values = np.empty((len(body), len(feature_names)))
    raw_labels = []
    for i, row in enumerate(body):
        lineno = i + 2
        if len(row) != len(header):
            raise DataError(
                f"{path}: line {lineno} has {len(row)} cells, expected {len(header)}"
            )
        raw_labels.append(row[label_idx].strip())
        col = 0
        for j, cell in enumerate(row):
            if j == label_idx:
                continue
            try:
                x = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell {cell!r} at line {lineno}, column {header[j]!r}"
                ) from None
            if not math.isfinite(x):
                raise DataError(
                    f"{path}: non-finite cell {cell!r} at line {lineno}, column {header[j]!r}"
                )
            values[i, col] = x
            col += 1

    if len(body) < 2:
        raise DataError(f"{path}: n_samples < 2 (got {len(body)})")
    if not feature_names:
        raise DataError(f"{path}: no feature columns")
    class_names = list(dict.fromkeys(raw_labels))
    if len(class_names) < 2:
        raise DataError(f"{path}: fewer than 2 distinct classes")
    code = {name: i for i, name in enumerate(class_names)}
    labels = np.array([code[c] for c in raw_labels], dtype=np.int64)
    return Dataset(values, labels, tuple(feature_names), tuple(class_names))


def write_csv(d: Dataset, path: str | Path, label_column: str = "class") -> None:
    """Write ``d`` in the layout :func:`load_csv` reads (17 significant digits)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*d.feature_names, label_column])
        for row, lab in zip(d.values, d.labels):
            w.writerow([*(f"{x:.17g}" for x in row), d.class_names[lab]])


def min_max_scale(d: Dataset) -> Dataset:
    """Linearly map each feature column onto [0, 1]; constant columns become 0."""
    x = d.values
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (x - lo) / safe, 0.0)
    # rounding can leave values a few ulps past the endpoints
    np.clip(scaled, 0.0, 1.0, out=scaled)
    return Dataset(scaled, d.labels, d.feature_names, d.class_names)


def stratified_kfold(d: Dataset | np.ndarray, K: int, rng_seed: int) -> FoldPlan:
    """Assign samples to ``K`` folds, dealing each class round-robin.

    Class members are shuffled with ``rng_seed`` and dealt to consecutive
    folds; the dealing position carries over from one class to the next, so
    fold sizes also differ by at most one and no fold is empty.
    """
    labels = d.labels if isinstance(d, Dataset) else np.asarray(d)
    n = labels.shape[0]
    if K < 2:
        raise ValueError(f"K must be >= 2 (got {K})")
    if K > n:
        raise DataError(f"K={K} exceeds n_samples={n}")
    rng = np.random.default_rng(rng_seed)
    assignments = np.empty(n, dtype=np.int64)
    offset = 0
    for c in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == c))
        assignments[members] = (offset + np.arange(members.size)) % K
        offset = (offset + members.size) % K
    return FoldPlan(_frozen(assignments), K)


def apply_mask(d: Dataset, mask: Sequence[bool] | np.ndarray | str) -> Dataset:
    """Keep the columns where ``mask`` is set, in original order."""
    m = as_mask(mask)
    if m.shape[0] != d.n_features:
        raise DataError(f"mask length {m.shape[0]} != n_features {d.n_features}")
    names = tuple(n for n, keep in zip(d.feature_names, m) if keep)
    return Dataset(d.values[:, m], d.labels, names, d.class_names)


def lift_mask(reduced_mask: np.ndarray, parent_mask: np.ndarray) -> np.ndarray:
    """Express a mask over the columns kept by ``parent_mask`` in parent coordinates."""
    parent = as_mask(parent_mask)
    reduced = as_mask(reduced_mask, int(parent.sum()))
    lifted = np.zeros_like(parent)
    lifted[np.flatnonzero(parent)[reduced]] = True
    return lifted
