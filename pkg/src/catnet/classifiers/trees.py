"""C4.5 decision tree (J48) and the naive-Bayes-leaf hybrid tree (NBTree)."""

from __future__ import annotations

import math
import sys

import numpy as np
from scipy.stats import norm

from .bayes import GaussianNaiveBayes, value_precision
from .encoding import Encoded
from .splits import best_numeric_split, entropy, weighted_info


class Node:
    __slots__ = ("dist", "cls", "kind", "pos", "feature", "threshold", "children", "fallback", "model")

    def __init__(self, dist, cls):
        self.dist = dist  # training class counts reaching this node
        self.cls = cls
        self.kind = "leaf"  # or "cont" / "sym"
        self.pos = self.feature = -1
        self.threshold = 0.0
        self.children: list[Node] = []
        self.fallback = 0  # child for values unseen in training
        self.model = None

    @property
    def is_leaf(self):
        return self.kind == "leaf"

    def make_leaf(self):
        self.kind = "leaf"
        self.children = []

    def leaves(self):
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                yield node
            else:
                stack.extend(node.children)

    def size(self):
        return 1 + sum(c.size() for c in self.children)


def route(root: Node, X: Encoded) -> list[tuple[Node, np.ndarray]]:
    """Send every row to its leaf; returns (leaf, row indices) pairs."""
    out = []
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, rows = stack.pop()
        if len(rows) == 0:
            continue
        if node.is_leaf:
            out.append((node, rows))
        elif node.kind == "cont":
            left = X.cont[rows, node.pos] <= node.threshold
            stack.append((node.children[0], rows[left]))
            stack.append((node.children[1], rows[~left]))
        else:
            codes = X.sym[rows, node.pos]
            codes = np.where(codes < 0, node.fallback, codes)
            for v, child in enumerate(node.children):
                stack.append((child, rows[codes == v]))
    return out


def _majority(dist, default):
    return int(np.argmax(dist)) if dist.sum() > 0 else default


def _sym_counts(codes, y, size, K):
    return np.bincount(codes * K + y, minlength=size * K).reshape(size, K).astype(float)


# -- C4.5 --------------------------------------------------------------------------------

def add_errs(n: float, e: float, cf: float) -> float:
    """Extra errors predicted by the upper confidence limit of a leaf with
    ``e`` errors among ``n`` instances (C4.5 pessimistic estimate)."""
    if n <= 0:
        return 0.0
    if cf > 0.5:
        return 0.0
    if e < 1:
        base = n * (1 - cf ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (add_errs(n, 1, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = norm.ppf(1 - cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


class C45Tree:
    """Gain-ratio tree with binary numeric splits and multiway symbolic
    splits, pruned by subtree replacement against the pessimistic error."""

    def __init__(self, spec):
        self.cf = spec.confidence_factor
        self.min_obj = spec.min_num_obj
        self.unpruned = spec.unpruned

    def fit(self, X: Encoded, y: np.ndarray, n_classes: int):
        sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))
        self.n_classes = n_classes
        self.X, self.y = X, y
        self.columns = X.columns()
        K = n_classes
        self.root = self._build(np.arange(len(y)), _majority(np.bincount(y, minlength=K), 0))
        self._collapse(self.root)
        if not self.unpruned:
            self._prune(self.root)
        del self.X, self.y
        return self

    def _split_candidates(self, rows, dist):
        X, y, K = self.X, self.y, self.n_classes
        n = len(rows)
        base = float(entropy(dist))
        min_split = min(max(0.1 * n / K, self.min_obj), 25)
        cands = []
        for f, kind, pos in self.columns:
            if kind == "sym":
                counts = _sym_counts(X.sym[rows, pos], y[rows], X.sym_sizes[pos], K)
                branch = counts.sum(axis=1)
                if np.sum(branch >= self.min_obj) < 2:
                    continue
                gain = base - float(weighted_info(counts).sum()) / n
                split_info = float(entropy(branch))
                cands.append((gain, split_info, f, kind, pos, 0.0))
            else:
                split = best_numeric_split(X.cont[rows, pos], y[rows], K, int(math.ceil(min_split)))
                if split is None:
                    continue
                gain = split.gain - math.log2(split.candidates) / n
                sizes = np.array([split.left.sum(), split.right.sum()])
                cands.append((gain, float(entropy(sizes)), f, kind, pos, split.threshold))
        return [c for c in cands if c[0] > 1e-10 and c[1] > 0]

    def _build(self, rows, parent_cls):
        K = self.n_classes
        y = self.y[rows]
        dist = np.bincount(y, minlength=K).astype(float)
        node = Node(dist, _majority(dist, parent_cls))
        n = len(rows)
        if n < 2 * self.min_obj or dist.max() == n:
            return node
        cands = self._split_candidates(rows, dist)
        if not cands:
            return node
        avg = float(np.mean([c[0] for c in cands]))
        best = None
        for c in cands:
            if c[0] >= avg - 1e-3:
                ratio = c[0] / c[1]
                if best is None or ratio > best[0] + 1e-12:
                    best = (ratio, c)
        _, (_, _, f, kind, pos, thr) = best
        node.kind, node.feature, node.pos, node.threshold = kind, f, pos, thr
        if kind == "cont":
            left = self.X.cont[rows, pos] <= thr
            parts = [rows[left], rows[~left]]
        else:
            codes = self.X.sym[rows, pos]
            parts = [rows[codes == v] for v in range(self.X.sym_sizes[pos])]
        sizes = [len(p) for p in parts]
        node.fallback = int(np.argmax(sizes))
        node.children = [self._build(p, node.cls) for p in parts]
        return node

    @staticmethod
    def _train_errors(node):
        return sum(leaf.dist.sum() - leaf.dist[leaf.cls] for leaf in node.leaves())

    def _collapse(self, node):
        """Turn a subtree into a leaf when it makes no fewer training errors."""
        if node.is_leaf:
            return
        for c in node.children:
            self._collapse(c)
        if self._train_errors(node) >= node.dist.sum() - node.dist[node.cls] - 1e-3:
            node.make_leaf()

    def _leaf_estimate(self, node):
        n = node.dist.sum()
        e = n - node.dist[node.cls]
        return e + add_errs(n, e, self.cf)

    def _prune(self, node):
        if node.is_leaf:
            return
        for c in node.children:
            self._prune(c)
        subtree = sum(self._leaf_estimate(leaf) for leaf in node.leaves())
        if self._leaf_estimate(node) <= subtree + 0.1:
            node.make_leaf()

    def predict(self, X: Encoded):
        K = self.n_classes
        labels = np.empty(len(X), dtype=np.int64)
        scores = np.empty((len(X), K))
        for leaf, rows in route(self.root, X):
            labels[rows] = leaf.cls
            total = leaf.dist.sum()
            scores[rows] = leaf.dist / total if total > 0 else np.eye(K)[leaf.cls]
        return labels, scores

    def n_leaves(self):
        return sum(1 for _ in self.root.leaves())

    def describe(self, names, classes, values=None) -> str:
        title = "J48 unpruned tree" if self.unpruned else "J48 pruned tree"
        lines = [title, "-" * len(title), ""]

        def label(node):
            n = node.dist.sum()
            err = n - node.dist[node.cls]
            tail = f"({n:.1f}/{err:.1f})" if err > 0 else f"({n:.1f})"
            return f"{classes[node.cls]} {tail}"

        def walk(node, depth):
            pad = "|   " * depth
            if node.kind == "cont":
                branches = [("<=", node.children[0]), (">", node.children[1])]
                texts = [f"{names[node.feature]} {op} {node.threshold!r}" for op, _ in branches]
                kids = [c for _, c in branches]
            else:
                vals = values[node.pos] if values else [f"#{k}" for k in range(len(node.children))]
                texts = [f"{names[node.feature]} = {v}" for v in vals]
                kids = node.children
            for text, child in zip(texts, kids):
                if child.is_leaf:
                    lines.append(f"{pad}{text}: {label(child)}")
                else:
                    lines.append(f"{pad}{text}")
                    walk(child, depth + 1)

        if self.root.is_leaf:
            lines.append(f": {label(self.root)}")
        else:
            walk(self.root, 0)
        lines += ["", f"Number of Leaves  : \t{self.n_leaves()}", "",
                  f"Size of the tree : \t{self.root.size()}"]
        return "\n".join(lines) + "\n"


# -- NBTree ---------------------------------------------------------------------------------

def cv_correct(X: Encoded, y: np.ndarray, group: np.ndarray, n_groups: int, fold: np.ndarray,
               n_folds: int, K: int, precision: np.ndarray) -> np.ndarray:
    """Correct predictions per group when a separate naive Bayes model is
    cross-validated inside every group (same estimator as the leaves).

    All groups and folds are handled at once from per-(group, fold, class)
    sufficient statistics.
    """
    G, F = n_groups, n_folds
    cell = (group * F + fold) * K + y
    size = G * F * K
    cnt = np.bincount(cell, minlength=size).reshape(G, F, K).astype(float)
    n_tr = cnt.sum(axis=1, keepdims=True) - cnt  # training counts of each held-out fold
    tot_tr = n_tr.sum(axis=2, keepdims=True)
    log_prior = np.log((n_tr + 1.0) / (tot_tr + K))  # (G, F, K)
    g, f = group, fold
    ll = log_prior[g, f]  # (n, K)
    p = X.cont.shape[1]
    if p:
        s1 = np.stack([np.bincount(cell, X.cont[:, j], size) for j in range(p)], axis=-1)
        s2 = np.stack([np.bincount(cell, X.cont[:, j] ** 2, size) for j in range(p)], axis=-1)
        s1 = s1.reshape(G, F, K, p)
        s2 = s2.reshape(G, F, K, p)
        t1 = s1.sum(axis=1, keepdims=True) - s1
        t2 = s2.sum(axis=1, keepdims=True) - s2
        denom = np.maximum(n_tr, 1.0)[..., None]
        mean = t1 / denom
        var = np.maximum(t2 / denom - mean ** 2, 0.0)
        std = np.maximum(np.sqrt(var), precision / 6.0)
        m, sd = mean[g, f], std[g, f]  # (n, K, p)
        z = (X.cont[:, None, :] - m) / sd
        ll = ll + (-0.5 * z * z - np.log(sd)).sum(axis=2)
    for j, vs in enumerate(X.sym_sizes):
        codes = X.sym[:, j]
        c = np.bincount(cell * vs + codes, minlength=size * vs).reshape(G, F, K, vs).astype(float)
        tr = c.sum(axis=1, keepdims=True) - c
        lp = np.log((tr + 1.0) / (n_tr[..., None] + vs + 1.0))
        ll = ll + lp[g, f, :, codes]
    pred = ll.argmax(axis=1)
    return np.bincount(group, weights=(pred == y).astype(float), minlength=G)


class NBTreeLearner:
    """Decision tree whose leaves hold naive Bayes models. A node splits
    only when it has enough instances and the best split cuts the
    cross-validated naive Bayes error by a large enough relative amount."""

    def __init__(self, spec):
        self.folds = spec.folds
        self.min_instances = spec.min_instances
        self.min_gain = spec.min_relative_gain
        self.seed = spec.seed

    def fit(self, X: Encoded, y: np.ndarray, n_classes: int):
        sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))
        self.n_classes = n_classes
        self.precision = value_precision(X.cont)
        self.columns = X.columns()
        self.rng = np.random.default_rng(self.seed)
        self.X, self.y = X, y
        K = n_classes
        self.root = self._build(np.arange(len(y)), _majority(np.bincount(y, minlength=K), 0))
        del self.X, self.y, self.rng
        return self

    def _leaf(self, node, rows):
        sub = self.X.take(rows)
        node.model = GaussianNaiveBayes().fit(sub, self.y[rows], self.n_classes, self.precision)
        return node

    def _build(self, rows, parent_cls):
        K = self.n_classes
        X = self.X.take(rows)
        y = self.y[rows]
        n = len(rows)
        dist = np.bincount(y, minlength=K).astype(float)
        node = Node(dist, _majority(dist, parent_cls))
        if n < self.min_instances or dist.max() == n:
            return self._leaf(node, rows)
        fold = np.empty(n, dtype=np.int64)
        fold[self.rng.permutation(n)] = np.arange(n) % self.folds
        zero = np.zeros(n, dtype=np.int64)
        leaf_err = 1.0 - cv_correct(X, y, zero, 1, fold, self.folds, K, self.precision)[0] / n
        if leaf_err <= 0:
            return self._leaf(node, rows)
        best = None
        for f, kind, pos in self.columns:
            if kind == "sym":
                group = X.sym[:, pos]
                ng = X.sym_sizes[pos]
                thr = 0.0
            else:
                split = best_numeric_split(X.cont[:, pos], y, K, 2)
                if split is None:
                    continue
                thr = split.threshold
                group = (X.cont[:, pos] > thr).astype(np.int64)
                ng = 2
            if np.count_nonzero(np.bincount(group, minlength=ng)) < 2:
                continue
            err = 1.0 - cv_correct(X, y, group, ng, fold, self.folds, K, self.precision).sum() / n
            if best is None or err < best[0] - 1e-12:
                best = (err, f, kind, pos, thr)
        if best is None or (leaf_err - best[0]) / leaf_err < self.min_gain:
            return self._leaf(node, rows)
        _, f, kind, pos, thr = best
        node.kind, node.feature, node.pos, node.threshold = kind, f, pos, thr
        if kind == "cont":
            left = X.cont[:, pos] <= thr
            parts = [rows[left], rows[~left]]
        else:
            codes = X.sym[:, pos]
            parts = [rows[codes == v] for v in range(X.sym_sizes[pos])]
        node.fallback = int(np.argmax([len(p) for p in parts]))
        node.children = [self._build(p, node.cls) if len(p) else self._leaf(Node(np.zeros(K), node.cls), p)
                         for p in parts]
        return node

    def predict(self, X: Encoded):
        K = self.n_classes
        labels = np.empty(len(X), dtype=np.int64)
        scores = np.empty((len(X), K))
        for leaf, rows in route(self.root, X):
            if leaf.dist.sum() == 0:
                labels[rows] = leaf.cls
                scores[rows] = np.eye(K)[leaf.cls]
                continue
            idx, post = leaf.model.predict(X.take(rows))
            labels[rows] = idx
            scores[rows] = post
        return labels, scores

    def n_leaves(self):
        return sum(1 for _ in self.root.leaves())

    def describe(self, names, classes, values=None) -> str:
        lines = ["NBTree", "------", ""]
        counter = [0]

        def leaf_text(node):
            counter[0] += 1
            return f"NB leaf {counter[0]} ({node.dist.sum():.0f} instances)"

        def walk(node, depth):
            pad = "|   " * depth
            if node.kind == "cont":
                texts = [f"{names[node.feature]} <= {node.threshold!r}",
                         f"{names[node.feature]} > {node.threshold!r}"]
            else:
                vals = values[node.pos] if values else [f"#{k}" for k in range(len(node.children))]
                texts = [f"{names[node.feature]} = {v}" for v in vals]
            for text, child in zip(texts, node.children):
                if child.is_leaf:
                    lines.append(f"{pad}{text}: {leaf_text(child)}")
                else:
                    lines.append(f"{pad}{text}")
                    walk(child, depth + 1)

        if self.root.is_leaf:
            lines.append(f": {leaf_text(self.root)}")
        else:
            walk(self.root, 0)
        lines += ["", f"Number of Leaves  : \t{self.n_leaves()}", "",
                  f"Size of the tree : \t{self.root.size()}"]
        return "\n".join(lines) + "\n"
