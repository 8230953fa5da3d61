"""Entropy-based feature ranking on equal-width discretized columns."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset


@dataclass(frozen=True)
class DiscretizedColumn:
    bin_ids: np.ndarray
    v: int

    def __post_init__(self):
        if self.v < 1:
            raise ValueError(f"bin count must be >= 1 (got {self.v})")
        ids = np.asarray(self.bin_ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.v):
            raise ValueError("bin ids out of range [0, v)")


@dataclass(frozen=True)
class IgRanking:
    """Per-feature gains (bits) and the indices whose gain beats ``threshold``.

    ``selected`` is sorted by descending gain, ties by ascending index.
    """

    gains: np.ndarray
    selected: tuple[int, ...]
    threshold: float

    def order(self) -> np.ndarray:
        """All feature indices in ranking order."""
        return np.lexsort((np.arange(self.gains.size), -self.gains))

    def selected_mask(self) -> np.ndarray:
        mask = np.zeros(self.gains.size, dtype=bool)
        mask[list(self.selected)] = True
        return mask

    def top(self, m: int) -> np.ndarray:
        """Mask of the ``m`` highest-ranked features regardless of threshold."""
        mask = np.zeros(self.gains.size, dtype=bool)
        mask[self.order()[:m]] = True
        return mask


def discretize_equal_width(column, v: int) -> DiscretizedColumn:
    """Bin values in [0, 1] by ``floor(x * v)``; ``x == 1`` goes to the top bin."""
    if v < 1:
        raise ValueError(f"bin count must be >= 1 (got {v})")
    x = np.asarray(column, dtype=np.float64)
    ids = np.floor(x * v).astype(np.int64)
    np.clip(ids, 0, v - 1, out=ids)
    return DiscretizedColumn(ids, v)


def _entropy_from_counts(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits along the last axis; rows of all zeros give 0."""
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=-1, keepdims=True)
    p = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    logp = np.log2(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logp).sum(axis=-1)


def class_entropy(labels) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("class_entropy of an empty label vector")
    _, counts = np.unique(labels, return_counts=True)
    return float(_entropy_from_counts(counts))


def _contingency(bin_ids: np.ndarray, v: int, labels: np.ndarray) -> np.ndarray:
    _, codes = np.unique(labels, return_inverse=True)
    k = int(codes.max()) + 1
    table = np.zeros((v, k), dtype=np.int64)
    np.add.at(table, (bin_ids, codes), 1)
    return table


def conditional_entropy(col: DiscretizedColumn, labels) -> float:
    labels = np.asarray(labels)
    ids = np.asarray(col.bin_ids)
    if ids.shape != labels.shape:
        raise ValueError("column and labels differ in length")
    if labels.size == 0:
        raise ValueError("conditional_entropy of an empty label vector")
    table = _contingency(ids, col.v, labels)
    weights = table.sum(axis=1) / labels.size
    return float((weights * _entropy_from_counts(table)).sum())


def info_gain(col: DiscretizedColumn, labels) -> float:
    gain = class_entropy(labels) - conditional_entropy(col, labels)
    return max(gain, 0.0)


def _all_gains(values: np.ndarray, labels: np.ndarray, v: int) -> np.ndarray:
    n, d = values.shape
    info = class_entropy(labels)
    _, codes = np.unique(labels, return_inverse=True)
    k = int(codes.max()) + 1
    ids = np.clip(np.floor(values * v).astype(np.int64), 0, v - 1)
    # counts[j, bin, class], built independently per feature column
    counts = np.zeros((d, v, k), dtype=np.int64)
    feat = np.broadcast_to(np.arange(d), (n, d))
    cls = np.broadcast_to(codes[:, None], (n, d))
    np.add.at(counts, (feat, ids, cls), 1)
    weights = counts.sum(axis=2) / n
    cond = (weights * _entropy_from_counts(counts)).sum(axis=1)
    return np.maximum(info - cond, 0.0)


def rank_and_filter(d: Dataset, v: int = 10, threshold: float = 0.0) -> IgRanking:
    """Score every feature by information gain and keep those above ``threshold``."""
    if v < 1:
        raise ValueError(f"bin count must be >= 1 (got {v})")
    gains = _all_gains(d.values, d.labels, v)
    gains.flags.writeable = False
    order = np.lexsort((np.arange(gains.size), -gains))
    selected = tuple(int(j) for j in order if gains[j] > threshold)
    return IgRanking(gains, selected, float(threshold))


def write_ranking(d: Dataset, ranking: IgRanking, out) -> None:
    """Dump ``feature_index,feature_name,gain`` rows in ranking order.

    ``out`` is a path or an open text stream.
    """
    if isinstance(out, (str, Path)):
        with Path(out).open("w", newline="", encoding="utf-8") as fh:
            write_ranking(d, ranking, fh)
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["feature_index", "feature_name", "gain"])
    for j in ranking.order():
        w.writerow([int(j), d.feature_names[j], f"{ranking.gains[j]:.12g}"])
