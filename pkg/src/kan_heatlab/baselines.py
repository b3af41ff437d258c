"""MLP comparison model: ReLU hidden layers, linear output, seeded
fan-in-scaled Gaussian init with zero biases."""

from __future__ import annotations

import copy

import numpy as np

__all__ = ["MlpNetwork", "mlp_forward"]


class MlpNetwork:
    def __init__(self, widths=(7, 64, 32, 1), seed=0, rng=None):
        widths = list(widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ValueError(f"invalid widths {widths}")
        self.widths = widths
        if rng is None:
            rng = np.random.default_rng(seed)
        self.weights = [
            rng.normal(0.0, np.sqrt(2.0 / widths[l]), size=(widths[l], widths[l + 1]))
            for l in range(len(widths) - 1)
        ]
        self.biases = [np.zeros(widths[l + 1]) for l in range(len(widths) - 1)]

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.widths[0],):
            raise ValueError(f"input must have length {self.widths[0]}, got {x.shape}")
        out = self.forward_batch(x[None, :])[0]
        return float(out[0]) if self.widths[-1] == 1 else out

    def forward_batch(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.widths[0]:
            raise ValueError(f"batch must be (m, {self.widths[0]}), got {X.shape}")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            X = X @ w + b
            if l < len(self.weights) - 1:
                X = np.maximum(X, 0.0)
        return X

    def predict(self, X):
        out = self.forward_batch(np.asarray(X, dtype=float))
        return out[:, 0] if self.widths[-1] == 1 else out

    def forward_cache(self, X, grad=False):
        X = np.asarray(X, dtype=float)
        caches = []
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = X @ w + b
            caches.append({"x": X, "z": z})
            X = np.maximum(z, 0.0) if l < len(self.weights) - 1 else z
        return X, caches

    def backward(self, caches, dY):
        grads = [None] * len(self.weights)
        for l in range(len(self.weights) - 1, -1, -1):
            cache = caches[l]
            if l < len(self.weights) - 1:
                dY = dY * (cache["z"] > 0)
            grads[l] = (cache["x"].T @ dY, dY.sum(axis=0))
            dY = dY @ self.weights[l].T
        return grads

    # parameter vector interface (mirrors KanNetwork)

    def get_params(self):
        return np.concatenate([w.ravel() for w in self.weights]
                              + [b for b in self.biases])

    def set_params(self, vec):
        pos = 0
        for l, w in enumerate(self.weights):
            n = w.size
            self.weights[l] = vec[pos:pos + n].reshape(w.shape).copy()
            pos += n
        for l, b in enumerate(self.biases):
            n = b.size
            self.biases[l] = vec[pos:pos + n].copy()
            pos += n
        if pos != vec.size:
            raise ValueError("parameter vector length mismatch")

    def grads_to_vector(self, grads):
        return np.concatenate([g[0].ravel() for g in grads] + [g[1] for g in grads])

    def l2_mask(self):
        # the MLP trains with early stopping only; no weight penalty
        return np.zeros(self.get_params().size, dtype=bool)

    def copy(self):
        return copy.deepcopy(self)

    def n_params(self):
        return self.get_params().size


def mlp_forward(net: MlpNetwork, x):
    """Feed-forward evaluation of a single input vector."""
    return net.forward(x)
