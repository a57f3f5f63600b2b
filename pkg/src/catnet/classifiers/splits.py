"""Entropy helpers and the binary numeric split search shared by the trees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def entropy(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits of each row of a class-count array."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, counts / np.where(total > 0, total, 1), 0.0)
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1)), 0.0)
    return -(p * logs).sum(axis=-1)


def weighted_info(counts: np.ndarray) -> np.ndarray:
    """Sum over rows of (row total) * entropy(row)."""
    counts = np.asarray(counts, dtype=float)
    return counts.sum(axis=-1) * entropy(counts)


@dataclass
class NumericSplit:
    gain: float
    threshold: float
    left: np.ndarray
    right: np.ndarray
    candidates: int


def best_numeric_split(values: np.ndarray, y: np.ndarray, n_classes: int,
                       min_leaf: int) -> NumericSplit | None:
    """Best binary ``value <= threshold`` split by information gain.

    Thresholds sit at midpoints between consecutive distinct values; both
    sides must hold at least ``min_leaf`` instances. Ties go to the lowest
    threshold.
    """
    n = len(values)
    if n < 2 * min_leaf:
        return None
    order = np.argsort(values, kind="stable")
    vs = values[order]
    cum = np.cumsum(np.eye(n_classes)[y[order]], axis=0)
    total = cum[-1]
    pos = np.flatnonzero(vs[:-1] < vs[1:])
    pos = pos[(pos + 1 >= min_leaf) & (n - pos - 1 >= min_leaf)]
    if len(pos) == 0:
        return None
    left = cum[pos]
    right = total - left
    split_info = (weighted_info(left) + weighted_info(right)) / n
    gains = entropy(total) - split_info
    k = int(np.argmax(gains))
    i = pos[k]
    return NumericSplit(float(gains[k]), float((vs[i] + vs[i + 1]) / 2.0), left[k], right[k], len(pos))
