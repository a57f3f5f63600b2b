"""k-nearest-neighbour classification by linear scan."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .encoding import Encoded

# Distances closer than this (relative) count as ties.
TIE_RTOL = 1e-12


def mixed_sq_distances(a: Encoded, b: Encoded) -> np.ndarray:
    """Squared Euclidean distance over (normalized) continuous columns plus
    one per mismatching symbolic column. A value unseen in training matches
    nothing."""
    d = cdist(a.cont, b.cont, "sqeuclidean") if a.cont.shape[1] else np.zeros((len(a), len(b)))
    for j in range(a.sym.shape[1]):
        ca = a.sym[:, j][:, None]
        cb = b.sym[:, j][None, :]
        d += (ca != cb) | (ca < 0)
    return d


class NearestNeighbor:
    def __init__(self, spec):
        self.k = spec.k
        self.chunk = 256

    def fit(self, X: Encoded, y: np.ndarray, n_classes: int):
        self.X = X
        self.y = y
        self.n_classes = n_classes
        return self

    def predict(self, X: Encoded):
        n = len(X)
        K = self.n_classes
        k = min(self.k, len(self.y))
        onehot = np.eye(K)[self.y]
        labels = np.empty(n, dtype=np.int64)
        scores = np.empty((n, K))
        for lo in range(0, n, self.chunk):
            d = mixed_sq_distances(X.take(slice(lo, lo + self.chunk)), self.X)
            cutoff = np.partition(d, k - 1, axis=1)[:, k - 1:k]
            # every neighbour tied with the k-th closest votes
            near = d <= cutoff + TIE_RTOL * (1.0 + cutoff)
            votes = near.astype(float) @ onehot
            labels[lo:lo + len(d)] = votes.argmax(axis=1)
            scores[lo:lo + len(d)] = votes / votes.sum(axis=1, keepdims=True)
        return labels, scores

    def describe(self, names, classes, values=None) -> str:
        per = np.bincount(self.y, minlength=self.n_classes)
        lines = [f"{self.k}-nearest neighbour, linear scan",
                 f"stored instances: {len(self.y)}",
                 "per class: " + ", ".join(f"{c}={n}" for c, n in zip(classes, per))]
        return "\n".join(lines) + "\n"
