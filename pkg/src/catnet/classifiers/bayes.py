"""Naive Bayes (Gaussian continuous densities) and a K2-searched Bayesian
network over discretized features."""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln, logsumexp

from .encoding import Encoded


def value_precision(cont: np.ndarray) -> np.ndarray:
    """Mean gap between sorted distinct values of each column (1.0 when a
    column has fewer than two distinct values)."""
    out = np.ones(cont.shape[1])
    for j in range(cont.shape[1]):
        distinct = np.unique(cont[:, j])
        if len(distinct) > 1:
            out[j] = (distinct[-1] - distinct[0]) / (len(distinct) - 1)
    return out


def posterior(log_joint: np.ndarray) -> np.ndarray:
    return np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))


class GaussianNaiveBayes:
    """Class-conditional independence with one Gaussian per (class,
    continuous feature) and add-one smoothed frequencies for symbolic ones.

    Standard deviations are floored at one sixth of the feature's value
    precision so that features constant within a class stay usable.
    """

    def __init__(self, spec=None):
        self.spec = spec

    def fit(self, X: Encoded, y: np.ndarray, n_classes: int, precision: np.ndarray | None = None):
        K = n_classes
        n = len(y)
        self.n_classes = K
        self.cont_features = X.cont_features
        self.sym_features = X.sym_features
        counts = np.bincount(y, minlength=K).astype(float)
        self.class_counts = counts
        self.log_prior = np.log((counts + 1.0) / (n + K))
        self.precision = value_precision(X.cont) if precision is None else precision
        p = X.cont.shape[1]
        self.mean = np.zeros((K, p))
        std = np.zeros((K, p))
        for c in range(K):
            rows = X.cont[y == c]
            if len(rows):
                self.mean[c] = rows.mean(axis=0)
                std[c] = rows.std(axis=0)
        self.std = np.maximum(std, self.precision / 6.0)
        self.sym_sizes = X.sym_sizes
        # one table per symbolic column, last slot for values unseen in training
        self.log_cond = []
        for j, size in enumerate(X.sym_sizes):
            table = np.zeros((K, size + 1))
            np.add.at(table, (y, X.sym[:, j]), 1.0)
            table[:, size] = 0.0
            self.log_cond.append(np.log((table + 1.0) / (counts[:, None] + size + 1.0)))
        return self

    def log_joint(self, X: Encoded) -> np.ndarray:
        out = np.tile(self.log_prior, (len(X), 1))
        if X.cont.shape[1]:
            z = (X.cont[:, None, :] - self.mean[None]) / self.std[None]
            out += (-0.5 * z * z - np.log(self.std[None]) - 0.5 * np.log(2 * np.pi)).sum(axis=2)
        for j, table in enumerate(self.log_cond):
            out += table[:, X.sym[:, j]].T  # code -1 lands in the unseen slot
        return out

    def predict(self, X: Encoded):
        post = posterior(self.log_joint(X))
        return post.argmax(axis=1), post

    def describe(self, names, classes, values=None) -> str:
        lines = ["Naive Bayes",
                 "class priors: " + ", ".join(f"{c}={np.exp(lp):.4f}"
                                              for c, lp in zip(classes, self.log_prior))]
        for j, f in enumerate(self.cont_features):
            cells = "  ".join(f"{c}: mean={self.mean[k, j]:.4g} sd={self.std[k, j]:.4g}"
                              for k, c in enumerate(classes))
            lines.append(f"{names[f]}  {cells}")
        for j, f in enumerate(self.sym_features):
            lines.append(f"{names[f]}  symbolic, {self.sym_sizes[j]} values, add-one smoothed")
        return "\n".join(lines) + "\n"


def k2_score(counts: np.ndarray) -> float:
    """Cooper-Herskovits log marginal likelihood of one node given a
    (parent configurations x node values) count table."""
    r = counts.shape[1]
    nj = counts.sum(axis=1)
    return float(np.sum(gammaln(r) - gammaln(nj + r)) + np.sum(gammaln(counts + 1.0)))


class BayesNetLearner:
    """Bayesian network classifier over symbolic (discretized) features.

    The class node is the root and a parent of every feature. K2 then
    greedily adds up to ``max_parents - 1`` further parents per feature,
    chosen among features earlier in schema order, so the graph is acyclic
    by construction.
    """

    def __init__(self, spec):
        self.spec = spec
        self.alpha = spec.alpha
        self.max_parents = spec.max_parents

    def fit(self, X: Encoded, y: np.ndarray, n_classes: int):
        K = n_classes
        sizes = X.sym_sizes
        codes = X.sym
        a = self.alpha
        self.n_classes = K
        self.features = X.sym_features
        self.sizes = sizes
        self.class_counts = np.bincount(y, minlength=K).astype(float)
        self.log_prior = np.log((self.class_counts + a) / (len(y) + K * a))
        self.parents: list[tuple[int, ...]] = []  # extra parents (column positions) per node
        self.cpts: list[np.ndarray] = []  # log P(value | class, parents)
        self.unseen: list[np.ndarray] = []  # log P(unseen value | configuration)
        self.fallback: list[np.ndarray] = []  # log P(value | class) when a parent value is unseen
        for j in range(len(sizes)):
            r = sizes[j]
            chosen: list[int] = []
            config, n_config = y, K
            best = k2_score(_table(config, n_config, codes[:, j], r))
            while len(chosen) + 1 < self.max_parents:
                pick, pick_score = None, best
                for z in range(j):
                    if z in chosen:
                        continue
                    cfg = config * sizes[z] + codes[:, z]
                    s = k2_score(_table(cfg, n_config * sizes[z], codes[:, j], r))
                    if s > pick_score:
                        pick, pick_score = z, s
                if pick is None:
                    break
                chosen.append(pick)
                config = config * sizes[pick] + codes[:, pick]
                n_config *= sizes[pick]
                best = pick_score
            table = _table(config, n_config, codes[:, j], r)
            denom = table.sum(axis=1, keepdims=True) + r * a
            self.parents.append(tuple(chosen))
            self.cpts.append(np.log((table + a) / denom))
            self.unseen.append(np.log(a / denom[:, 0]))
            base = _table(y, K, codes[:, j], r)
            self.fallback.append(np.log((base + a) / (base.sum(axis=1, keepdims=True) + r * a)))
        self._compile()
        return self

    def graph(self) -> dict[int, tuple[int, ...]]:
        """Feature schema index -> parent schema indices; -1 is the class."""
        return {self.features[j]: (-1,) + tuple(self.features[z] for z in ps)
                for j, ps in enumerate(self.parents)}

    def _compile(self):
        """Flatten every node's tables into shared 1-D arrays so a batch is
        scored with a few gathers instead of a loop over nodes."""
        J, K = len(self.parents), self.n_classes
        P = max((len(ps) for ps in self.parents), default=0)
        self.par_idx = np.zeros((J, max(P, 1)), dtype=np.int64)
        self.par_mask = np.zeros((J, max(P, 1)), dtype=bool)
        self.par_stride = np.zeros((J, max(P, 1)), dtype=np.int64)  # in configurations
        self.n_cfg_per_class = np.ones(J, dtype=np.int64)
        self.r = np.array(self.sizes, dtype=np.int64)
        for j, ps in enumerate(self.parents):
            stride = 1
            for p in range(len(ps) - 1, -1, -1):
                self.par_idx[j, p] = ps[p]
                self.par_mask[j, p] = True
                self.par_stride[j, p] = stride
                stride *= self.sizes[ps[p]]
            self.n_cfg_per_class[j] = stride
        self.cpt_off = np.cumsum([0] + [c.size for c in self.cpts])[:-1]
        self.unseen_off = np.cumsum([0] + [u.size for u in self.unseen])[:-1]
        self.fb_off = np.cumsum([0] + [f.size for f in self.fallback])[:-1]
        self.flat_cpt = np.concatenate([c.ravel() for c in self.cpts]) if J else np.zeros(0)
        self.flat_unseen = np.concatenate([u.ravel() for u in self.unseen]) if J else np.zeros(0)
        self.flat_fb = np.concatenate([f.ravel() for f in self.fallback]) if J else np.zeros(0)

    def log_joint(self, X: Encoded) -> np.ndarray:
        n, K = len(X), self.n_classes
        out = np.tile(self.log_prior, (n, 1))
        if not self.parents:
            return out
        if not hasattr(self, "flat_cpt"):
            self._compile()
        codes = X.sym
        own = codes[:, :, None]  # (n, J, 1)
        safe_own = np.maximum(own, 0)
        pc = codes[:, self.par_idx]  # (n, J, P)
        lost = ((pc < 0) & self.par_mask).any(axis=2)[:, :, None]
        cfg_in = (np.maximum(pc, 0) * self.par_stride * self.par_mask).sum(axis=2)[:, :, None]
        cls = np.arange(K)[None, None, :]
        cfg = cls * self.n_cfg_per_class[None, :, None] + cfg_in  # (n, J, K)
        r = self.r[None, :, None]
        vals = self.flat_cpt[self.cpt_off[None, :, None] + cfg * r + safe_own]
        unseen = self.flat_unseen[self.unseen_off[None, :, None] + cfg]
        fb = self.flat_fb[self.fb_off[None, :, None] + cls * r + safe_own]
        vals = np.where(own < 0, unseen, np.where(lost, fb, vals))
        return out + vals.sum(axis=1)

    def _log_joint_loop(self, X: Encoded) -> np.ndarray:
        """Reference implementation of :meth:`log_joint`, one node at a time."""
        n, K = len(X), self.n_classes
        codes = X.sym
        out = np.tile(self.log_prior, (n, 1))
        cls = np.broadcast_to(np.arange(K), (n, K))
        for j, ps in enumerate(self.parents):
            own = codes[:, j][:, None]
            safe_own = np.maximum(own, 0)
            cfg = cls
            for z in ps:
                cfg = cfg * self.sizes[z] + np.maximum(codes[:, z], 0)[:, None]
            vals = np.where(own < 0, self.unseen[j][cfg], self.cpts[j][cfg, safe_own])
            if ps:
                lost = (codes[:, list(ps)] < 0).any(axis=1)[:, None]
                fb = self.fallback[j][cls, safe_own]
                vals = np.where(lost & (own >= 0), fb, vals)
            out += vals
        return out

    def predict(self, X: Encoded):
        post = posterior(self.log_joint(X))
        return post.argmax(axis=1), post

    def describe(self, names, classes, values=None) -> str:
        lines = [f"Bayes network: K2 search, simple estimator (alpha={self.alpha:g}), "
                 f"at most {self.max_parents} parents per node",
                 "class: " + ", ".join(f"{c}={np.exp(lp):.4f}" for c, lp in zip(classes, self.log_prior))]
        for j, ps in enumerate(self.parents):
            pnames = ["class"] + [names[self.features[z]] for z in ps]
            cpt = np.exp(self.cpts[j])
            lines.append(f"{names[self.features[j]]} <- {', '.join(pnames)}: "
                         f"CPT {cpt.shape[0]} configurations x {cpt.shape[1]} values")
            if cpt.size <= 200:
                for row in cpt:
                    lines.append("    " + " ".join(f"{v:.3f}" for v in row))
        return "\n".join(lines) + "\n"


def _table(config, n_config, values, r):
    flat = np.bincount(config * r + values, minlength=n_config * r)
    return flat.reshape(n_config, r).astype(float)
