"""Support vector classification: one binary SVM per class pair, each trained
by sequential minimal optimization with maximal-violating-pair selection."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .encoding import Encoded

CACHE_BYTES = 64 * 2**20


def poly_kernel(A: np.ndarray, B: np.ndarray, degree: int) -> np.ndarray:
    k = A @ B.T
    return k if degree == 1 else k ** degree


@dataclass
class PairModel:
    """Binary SVM separating ``pos`` (+1) from ``neg`` (-1)."""

    pos: int
    neg: int
    rows: np.ndarray  # training rows of the subproblem
    alpha: np.ndarray
    y: np.ndarray
    rho: float
    sv_X: np.ndarray
    sv_coef: np.ndarray  # alpha * y of the support vectors
    iterations: int
    converged: bool

    def decision(self, A: np.ndarray, degree: int) -> np.ndarray:
        if len(self.sv_coef) == 0:
            return np.full(len(A), -self.rho)
        return poly_kernel(A, self.sv_X, degree) @ self.sv_coef - self.rho


def solve(X: np.ndarray, y: np.ndarray, C: float, degree: int, tol: float, eps: float,
          max_iter: int) -> tuple[np.ndarray, float, int, bool]:
    """Dual soft-margin SVM: min 1/2 a'Qa - sum(a), 0 <= a <= C, y'a = 0.

    Returns (alpha, rho, iterations, converged). The decision function is
    sum_i a_i y_i K(x_i, x) - rho.
    """
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # Q a - e
    diag = np.einsum("ij,ij->i", X, X) ** degree
    cache: OrderedDict[int, np.ndarray] = OrderedDict()
    max_cols = max(2, CACHE_BYTES // max(1, 8 * n))

    def column(i):
        col = cache.get(i)
        if col is None:
            col = poly_kernel(X, X[i:i + 1], degree).ravel()
            cache[i] = col
            if len(cache) > max_cols:
                cache.popitem(last=False)
        else:
            cache.move_to_end(i)
        return col

    pos = y > 0
    it = 0
    converged = False
    while it < max_iter:
        score = -y * grad
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        if score[i] - score[j] < tol:
            converged = True
            break
        ki, kj = column(i), column(j)
        curv = max(diag[i] + diag[j] - 2 * ki[j], 1e-12)
        t = (score[i] - score[j]) / curv
        t = min(t, C - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else C - alpha[j])
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        for k in (i, j):
            if alpha[k] < eps:
                alpha[k] = 0.0
            elif alpha[k] > C - eps:
                alpha[k] = C
        grad += t * y * (ki - kj)
        it += 1
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yg[free].mean())
    else:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        ub = yg[up].min() if up.any() else np.inf
        lb = yg[low].max() if low.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = float((ub + lb) / 2)
        else:
            rho = float(ub if np.isfinite(ub) else lb)
    return alpha, rho, it, converged


class PairwiseSMO:
    """One-vs-one SVMs over the normalized, one-hot encoded features; each
    pair votes and ties go to the class with the larger total margin."""

    def __init__(self, spec):
        self.spec = spec

    def fit(self, X: Encoded, y: np.ndarray, n_classes: int):
        spec = self.spec
        A = X.onehot()
        self.n_classes = n_classes
        self.degree = spec.degree
        self.pairs: list[PairModel] = []
        for a in range(n_classes):
            for b in range(a + 1, n_classes):
                rows = np.flatnonzero((y == a) | (y == b))
                if len(rows) == 0:
                    continue
                yy = np.where(y[rows] == a, 1.0, -1.0)
                Ap = A[rows]
                alpha, rho, it, ok = solve(Ap, yy, spec.c, spec.degree, spec.tolerance,
                                           spec.epsilon, spec.max_iter)
                sv = alpha > 0
                self.pairs.append(PairModel(a, b, rows, alpha, yy, rho, Ap[sv], alpha[sv] * yy[sv], it, ok))
        return self

    def predict(self, X: Encoded):
        A = X.onehot()
        n, K = len(A), self.n_classes
        votes = np.zeros((n, K))
        margin = np.zeros((n, K))
        for pm in self.pairs:
            f = pm.decision(A, self.degree)
            win = f > 0
            votes[win, pm.pos] += 1
            votes[~win, pm.neg] += 1
            margin[:, pm.pos] += f
            margin[:, pm.neg] -= f
        top = votes == votes.max(axis=1, keepdims=True)
        labels = np.where(top, margin, -np.inf).argmax(axis=1)
        scores = votes / max(len(self.pairs), 1)
        return labels, scores

    def describe(self, names, classes, values=None) -> str:
        lines = [f"SMO: one-vs-one, polynomial kernel degree {self.degree}, C={self.spec.c:g}"]
        for pm in self.pairs:
            bounded = int(np.sum(pm.alpha >= self.spec.c))
            lines.append(f"{classes[pm.pos]} vs {classes[pm.neg]}: {len(pm.sv_coef)} support vectors "
                         f"({bounded} at bound), bias {-pm.rho:.6g}, {pm.iterations} iterations"
                         + ("" if pm.converged else " (iteration cap reached)"))
        return "\n".join(lines) + "\n"
