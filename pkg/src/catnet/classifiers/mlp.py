"""One-hidden-layer perceptron trained by backpropagation with momentum."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

from .encoding import Encoded

INIT_RANGE = 0.05


def init_params(n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator) -> dict:
    u = lambda *shape: rng.uniform(-INIT_RANGE, INIT_RANGE, shape)  # noqa: E731
    return {"W1": u(n_hidden, n_in), "b1": u(n_hidden), "W2": u(n_out, n_hidden), "b2": u(n_out)}


def forward(params: dict, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h = expit(X @ params["W1"].T + params["b1"])
    return h, expit(h @ params["W2"].T + params["b2"])


def loss_and_gradients(params: dict, X: np.ndarray, T: np.ndarray) -> tuple[float, dict]:
    """Half the summed squared error over a batch and its exact gradients."""
    h, o = forward(params, X)
    err = o - T
    loss = 0.5 * float(np.sum(err * err))
    d_out = err * o * (1 - o)
    d_hid = (d_out @ params["W2"]) * h * (1 - h)
    grads = {"W2": d_out.T @ h, "b2": d_out.sum(axis=0),
             "W1": d_hid.T @ X, "b1": d_hid.sum(axis=0)}
    return loss, grads


class Perceptron:
    """Sigmoid hidden and output units, per-instance updates with momentum.
    Training stops once the validation error has not improved for
    ``validation_threshold`` epochs; the best weights seen are kept."""

    def __init__(self, spec):
        self.spec = spec

    def fit(self, X: Encoded, y: np.ndarray, n_classes: int):
        spec = self.spec
        K = n_classes
        A = X.onehot()
        n, d = A.shape
        H = spec.hidden_units or math.ceil((d + K) / 2)
        rng = np.random.default_rng(spec.random_seed)
        self.params = init_params(d, H, K, rng)
        T = np.eye(K)[y]
        order = rng.permutation(n)
        n_val = int(round(spec.validation_fraction * n))
        if n - n_val < 1:
            n_val = 0
        val, tr = order[:n_val], order[n_val:]
        Av, Tv = A[val], T[val]
        W1, b1, W2, b2 = (self.params[k] for k in ("W1", "b1", "W2", "b2"))
        vW1, vb1, vW2, vb2 = (np.zeros_like(a) for a in (W1, b1, W2, b2))
        lr, mom = spec.learning_rate, spec.momentum
        best_err, best, stale = math.inf, None, 0
        self.epochs = 0
        for epoch in range(spec.max_epochs):
            for i in tr:
                x = A[i]
                h = expit(W1 @ x + b1)
                o = expit(W2 @ h + b2)
                d_out = (o - T[i]) * o * (1 - o)
                d_hid = (W2.T @ d_out) * h * (1 - h)
                vW2 *= mom
                vW2 -= lr * np.outer(d_out, h)
                vb2 *= mom
                vb2 -= lr * d_out
                vW1 *= mom
                vW1 -= lr * np.outer(d_hid, x)
                vb1 *= mom
                vb1 -= lr * d_hid
                W2 += vW2
                b2 += vb2
                W1 += vW1
                b1 += vb1
            self.epochs = epoch + 1
            if n_val == 0:
                continue
            _, o = forward(self.params, Av)
            err = 0.5 * float(np.sum((o - Tv) ** 2))
            if err < best_err - 1e-12:
                best_err, stale = err, 0
                best = {k: v.copy() for k, v in self.params.items()}
            else:
                stale += 1
                if stale >= spec.validation_threshold:
                    break
        if best is not None:
            self.params = best
        self.n_in, self.n_hidden, self.n_classes = d, H, K
        self.validation_error = best_err
        return self

    def predict(self, X: Encoded):
        # einsum rather than BLAS: each row's result must not depend on batch size
        p = self.params
        h = expit(np.einsum("ij,kj->ik", X.onehot(), p["W1"]) + p["b1"])
        o = expit(np.einsum("ij,kj->ik", h, p["W2"]) + p["b2"])
        scores = o / np.maximum(o.sum(axis=1, keepdims=True), 1e-300)
        return o.argmax(axis=1), scores

    def describe(self, names, classes, values=None) -> str:
        p = self.params
        lines = [f"Multilayer perceptron: {self.n_in} inputs, {self.n_hidden} sigmoid hidden units, "
                 f"{self.n_classes} sigmoid outputs",
                 f"epochs run: {self.epochs}"]
        for key in ("W1", "b1", "W2", "b2"):
            w = p[key]
            lines.append(f"{key}: shape {'x'.join(map(str, w.shape))}, mean {w.mean():.4g}, "
                         f"sd {w.std():.4g}, max |w| {np.abs(w).max():.4g}")
        for k, c in enumerate(classes):
            lines.append(f"output {c}: bias {p['b2'][k]:.4g}, |weights| {np.abs(p['W2'][k]).sum():.4g}")
        return "\n".join(lines) + "\n"
