"""Gradients, optimizers (Adam and limited-memory BFGS with strong-Wolfe
line search), learning-rate schedules, early stopping, and the shared
train loop for KAN and MLP models.

One training run is strictly sequential; independent runs may proceed in
parallel with RNG streams derived from (master seed, run index).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DivergedError
from .kan import KanNetwork, grid_refit

__all__ = [
    "Constant",
    "ExpDecay",
    "Cosine",
    "TrainConfig",
    "TrainHistory",
    "TrainResult",
    "DataSplits",
    "mse_loss_and_grad",
    "gradients",
    "AdamState",
    "adam_step",
    "minimize_lbfgs",
    "LbfgsResult",
    "train",
    "lbfgs_fit",
]


# ---------------------------------------------------------------------------
# Learning-rate schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    def value(self, lr0: float, step: int) -> float:
        return lr0


@dataclass(frozen=True)
class ExpDecay:
    rate: float
    steps: int

    def __post_init__(self):
        if not 0.0 < self.rate < 1.0:
            raise ConfigError(f"exp_decay rate must lie in (0,1), got {self.rate}")
        if self.steps < 1:
            raise ConfigError("exp_decay steps must be >= 1")

    def value(self, lr0: float, step: int) -> float:
        return lr0 * self.rate ** (step / self.steps)


@dataclass(frozen=True)
class Cosine:
    total_steps: int

    def __post_init__(self):
        if self.total_steps < 1:
            raise ConfigError("cosine total_steps must be >= 1")

    def value(self, lr0: float, step: int) -> float:
        frac = min(step, self.total_steps) / self.total_steps
        return lr0 * 0.5 * (1.0 + np.cos(np.pi * frac))


# ---------------------------------------------------------------------------
# Config / history containers
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    optimizer: str = "adam"          # adam | lbfgs
    learning_rate: float = 1e-3
    schedule: object = field(default_factory=Constant)
    batch_size: Optional[int] = 32   # None = full batch
    l2_coeff: float = 0.0
    max_epochs: int = 200            # outer L-BFGS iterations when optimizer=lbfgs
    early_stop_patience: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in ("adam", "lbfgs"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.l2_coeff < 0:
            raise ConfigError("l2_coeff must be >= 0")
        if self.max_epochs < 1 or self.early_stop_patience < 1:
            raise ConfigError("max_epochs and early_stop_patience must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1 or None")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float
    wall_time: float


@dataclass
class TrainHistory:
    epochs: list = field(default_factory=list)
    stopping_reason: str = ""
    best_epoch: int = -1
    fallback_steps: int = 0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "val_loss", "lr"])
            for rec in self.epochs:
                writer.writerow([rec.epoch, repr(rec.train_loss),
                                 repr(rec.val_loss), repr(rec.lr)])

    @property
    def best_val_loss(self):
        return min((r.val_loss for r in self.epochs), default=np.inf)


@dataclass
class TrainResult:
    net: object
    history: TrainHistory


@dataclass
class DataSplits:
    X_train: np.ndarray
    y_train: np.ndarray
    X_val: np.ndarray
    y_val: np.ndarray
    X_test: Optional[np.ndarray] = None
    y_test: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# Loss and gradients
# ---------------------------------------------------------------------------

def mse_loss(net, X, y, chunk=2048):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    total = 0.0
    for start in range(0, X.shape[0], chunk):
        pred = net.predict(X[start:start + chunk])
        r = pred - y[start:start + chunk]
        total += float(np.dot(r, r))
    return total / X.shape[0]


def mse_loss_and_grad(net, X, y, l2_coeff=0.0, chunk=1024):
    """(MSE + l2_coeff * l2_penalty, flat gradient) over the batch.

    Chunked so full-batch L-BFGS objectives stay within memory.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    m = X.shape[0]
    gvec = None
    sq = 0.0
    for start in range(0, m, chunk):
        Xc, yc = X[start:start + chunk], y[start:start + chunk]
        out, caches = net.forward_cache(Xc, grad=True)
        r = out[:, 0] - yc
        sq += float(np.dot(r, r))
        grads = net.backward(caches, (2.0 / m) * r[:, None])
        piece = net.grads_to_vector(grads)
        gvec = piece if gvec is None else gvec + piece
    loss = sq / m
    if l2_coeff:
        params = net.get_params()
        mask = net.l2_mask()
        loss += l2_coeff * float(np.sum(params[mask] ** 2))
        gvec = gvec + 2.0 * l2_coeff * params * mask
    if not np.isfinite(loss):
        raise DivergedError("non-finite training loss")
    return loss, gvec


def gradients(net, X, y, l2_coeff=0.0):
    """Gradient of (MSE + l2_coeff * l2_penalty) w.r.t. every unlocked
    parameter, flattened in the network's canonical order."""
    return mse_loss_and_grad(net, X, y, l2_coeff)[1]


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def init(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params, grads, state: AdamState, lr,
              beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; returns (new params, state)."""
    if state.m.shape != params.shape:
        raise ValueError("Adam state size does not match parameters")
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads * grads
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_params, AdamState(m, v, t)


# ---------------------------------------------------------------------------
# L-BFGS with strong Wolfe line search
# ---------------------------------------------------------------------------

@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    fallbacks: int
    reason: str
    trace: list


def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, yv, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * yv
    if pairs:
        s, yv, _ = pairs[-1]
        q *= (s @ yv) / (yv @ yv)
    for (s, yv, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (yv @ q)
        q += (a - b) * s
    return -q


def _wolfe_search(fg, x, f0, g0, d, c1=1e-4, c2=0.9, max_evals=25):
    dphi0 = float(g0 @ d)
    if dphi0 >= 0:
        return None

    def probe(a):
        xn = x + a * d
        f, g = fg(xn)
        return f, g, float(g @ d), xn

    def zoom(a_lo, f_lo, a_hi):
        for _ in range(max_evals):
            a = 0.5 * (a_lo + a_hi)
            f, g, dphi, xn = probe(a)
            if not np.isfinite(f) or f > f0 + c1 * a * dphi0 or f >= f_lo:
                a_hi = a
            else:
                if abs(dphi) <= -c2 * dphi0:
                    return a, xn, f, g
                if dphi * (a_hi - a_lo) >= 0:
                    a_hi = a_lo
                a_lo, f_lo = a, f
            if abs(a_hi - a_lo) < 1e-16:
                break
        return None

    a_prev, f_prev, dphi_prev = 0.0, f0, dphi0
    a = 1.0
    for i in range(max_evals):
        f, g, dphi, xn = probe(a)
        if not np.isfinite(f):
            a = 0.5 * (a_prev + a)
            continue
        if f > f0 + c1 * a * dphi0 or (i > 0 and f >= f_prev):
            return zoom(a_prev, f_prev, a)
        if abs(dphi) <= -c2 * dphi0:
            return a, xn, f, g
        if dphi >= 0:
            return zoom(a, f, a_prev)
        a_prev, f_prev, dphi_prev = a, f, dphi
        a *= 2.0
    return None


def _halving_fallback(fg, x, f0, g0, max_halvings=30):
    alpha = 1.0
    d = -g0
    for _ in range(max_halvings):
        xn = x + alpha * d
        f, g = fg(xn)
        if np.isfinite(f) and f < f0:
            return alpha, xn, f, g
        alpha *= 0.5
    return None


def minimize_lbfgs(fun_and_grad, x0, max_iter=100, memory=10, gtol=1e-10,
                   callback=None):
    """Limited-memory BFGS (m curvature pairs, strong Wolfe).

    The objective is non-increasing across accepted steps; a failed line
    search falls back to a halving steepest-descent step (counted in
    `fallbacks`).  `callback(it, x, f)` may return True to stop early.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun_and_grad(x)
    trace = [f]
    s_list = []
    fallbacks = 0
    reason = "max_iter"
    it = 0
    for it in range(max_iter):
        if np.max(np.abs(g), initial=0.0) <= gtol:
            reason = "gradient"
            break
        d = _two_loop(g, s_list)
        if float(d @ g) >= 0:
            s_list.clear()
            d = -g
        res = _wolfe_search(fun_and_grad, x, f, g, d)
        if res is None:
            res = _halving_fallback(fun_and_grad, x, f, g)
            fallbacks += 1
            if res is None:
                reason = "line_search_failed"
                break
        _, xn, fn, gn = res
        s = xn - x
        yv = gn - g
        sy = float(s @ yv)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(yv):
            s_list.append((s, yv, 1.0 / sy))
            if len(s_list) > memory:
                s_list.pop(0)
        x, f, g = xn, fn, gn
        trace.append(f)
        if callback is not None and callback(it, x, f):
            reason = "callback"
            it += 1
            break
    else:
        it = max_iter
    accepted = len(trace) - 1
    return LbfgsResult(x, f, g, accepted, fallbacks, reason, trace)


# ---------------------------------------------------------------------------
# Train loop
# ---------------------------------------------------------------------------

def train(net, splits: DataSplits, config: TrainConfig, *,
          refit_every=200, enable_refit=True) -> TrainResult:
    """Train `net` on the splits, returning the best-validation model.

    Adam shuffles minibatches per epoch from the run seed; L-BFGS runs
    full-batch with one history record per outer iteration.  KAN grids are
    refit every `refit_every` Adam steps (and once up front); refitting is
    disabled mid-run for L-BFGS to keep its curvature memory coherent.
    """
    if config.optimizer == "lbfgs":
        return _train_lbfgs(net, splits, config, enable_refit)
    return _train_adam(net, splits, config, refit_every, enable_refit)


def _maybe_refit(net, X):
    if isinstance(net, KanNetwork):
        grid_refit(net, X)


def _train_adam(net, splits, config, refit_every, enable_refit):
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    X, y = np.asarray(splits.X_train, float), np.asarray(splits.y_train, float)
    m = X.shape[0]
    batch = m if config.batch_size is None else min(config.batch_size, m)
    if enable_refit:
        _maybe_refit(net, X)

    params = net.get_params()
    state = AdamState.init(params.size)
    history = TrainHistory()
    best = _Best(net)
    t0 = time.perf_counter()
    step = 0
    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(m)
        lr = config.learning_rate
        for start in range(0, m, batch):
            idx = perm[start:start + batch]
            lr = config.schedule.value(config.learning_rate, step)
            try:
                _, gvec = mse_loss_and_grad(net, X[idx], y[idx], config.l2_coeff)
            except DivergedError as err:
                err.history = history
                history.stopping_reason = "diverged"
                raise
            params, state = adam_step(params, gvec, state, lr)
            net.set_params(params)
            step += 1
            if (enable_refit and refit_every and isinstance(net, KanNetwork)
                    and step % refit_every == 0):
                _maybe_refit(net, X)
                params = net.get_params()
        train_loss = mse_loss(net, X, y)
        val_loss = mse_loss(net, splits.X_val, splits.y_val)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            history.stopping_reason = "diverged"
            raise DivergedError("non-finite epoch loss", history)
        history.epochs.append(EpochRecord(epoch, train_loss, val_loss, lr,
                                          time.perf_counter() - t0))
        improved = best.update(net, val_loss, epoch)
        if not improved and best.stale >= config.early_stop_patience:
            history.stopping_reason = "early_stop"
            break
    if not history.stopping_reason:
        history.stopping_reason = "max_epochs"
    history.best_epoch = best.epoch
    return TrainResult(best.net, history)


def _train_lbfgs(net, splits, config, enable_refit):
    X, y = np.asarray(splits.X_train, float), np.asarray(splits.y_train, float)
    if enable_refit:
        _maybe_refit(net, X)
    history = TrainHistory()
    best = _Best(net)
    t0 = time.perf_counter()

    def fg(p):
        net.set_params(p)
        return mse_loss_and_grad(net, X, y, config.l2_coeff)

    def on_iter(it, p, f):
        net.set_params(p)
        val_loss = mse_loss(net, splits.X_val, splits.y_val)
        train_mse = mse_loss(net, X, y)
        history.epochs.append(EpochRecord(it + 1, train_mse, val_loss, np.nan,
                                          time.perf_counter() - t0))
        best.update(net, val_loss, it + 1)
        return best.stale >= config.early_stop_patience

    result = minimize_lbfgs(fg, net.get_params(), max_iter=config.max_epochs,
                            callback=on_iter)
    history.fallback_steps = result.fallbacks
    history.stopping_reason = {
        "callback": "early_stop",
        "gradient": "converged",
        "max_iter": "max_epochs",
    }.get(result.reason, result.reason)
    history.best_epoch = best.epoch
    return TrainResult(best.net, history)


def lbfgs_fit(net, splits: DataSplits, config: TrainConfig) -> TrainResult:
    """Full-batch L-BFGS training (memory 10, strong Wolfe)."""
    if config.optimizer != "lbfgs":
        raise ConfigError("lbfgs_fit requires optimizer='lbfgs'")
    return _train_lbfgs(net, splits, config, True)


class _Best:
    def __init__(self, net):
        self.net = net.copy()
        self.val = np.inf
        self.epoch = 0
        self.stale = 0

    def update(self, net, val_loss, epoch):
        if val_loss < self.val:
            self.val = val_loss
            self.net = net.copy()
            self.epoch = epoch
            self.stale = 0
            return True
        self.stale += 1
        return False
