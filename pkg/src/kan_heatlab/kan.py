"""Kolmogorov-Arnold network: spline-parameterized edge activations
summed at nodes, with grid refitting, pruning, symbolic edge locking,
and hand-written reverse-mode gradients.

A network instance is mutated only by its owning training run; read-only
evaluation is safe from concurrent readers.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .numerics import KnotGrid, bspline_design, solve_least_squares
from .operators import DEFAULT_LIBRARY, get_operator, silu, silu_deriv

__all__ = [
    "SymbolicLock",
    "SplineEdge",
    "KanLayer",
    "KanNetwork",
    "edge_eval",
    "fit_edge_to_samples",
    "prune",
    "PruneReport",
    "grid_refit",
    "RefitReport",
    "l2_penalty",
    "lock_edge_symbolic",
    "save_checkpoint",
    "load_checkpoint",
]

_OP_NAMES = list(DEFAULT_LIBRARY)
_OP_INDEX = {name: i for i, name in enumerate(_OP_NAMES)}
_ZERO_LOCK = _OP_INDEX["x"]


@dataclass(frozen=True)
class SymbolicLock:
    op: str
    affine: tuple  # (a, b, c, d): edge evaluates c*f(a*x + b) + d
    trainable: bool = False


@dataclass
class SplineEdge:
    """Stand-alone view of one edge (grid, control values, weights, lock)."""

    grid: KnotGrid
    coeffs: np.ndarray
    base_weight: float
    spline_weight: float
    lock: Optional[SymbolicLock] = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.grid.size,):
            raise ValueError(
                f"edge coeffs must have length {self.grid.size}, got {self.coeffs.shape}"
            )
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("edge coeffs must be finite")


def edge_eval(edge: SplineEdge, x):
    """phi(x): locked form c*f(a*x+b)+d, else base + spline at clamped x."""
    arr = np.asarray(x, dtype=float)
    if edge.lock is not None:
        a, b, c, d = edge.lock.affine
        out = c * get_operator(edge.lock.op).eval_guarded(a * arr + b) + d
    else:
        xc = np.clip(arr, edge.grid.lo, edge.grid.hi)
        basis = bspline_design(edge.grid.knots, edge.grid.order, xc)
        out = edge.base_weight * silu(xc) + edge.spline_weight * (basis @ edge.coeffs)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def fit_edge_to_samples(edge: SplineEdge, xs, ys) -> SplineEdge:
    """Least-squares fit of the spline part so the edge reproduces (xs, ys)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    xc = np.clip(xs, edge.grid.lo, edge.grid.hi)
    target = (ys - edge.base_weight * silu(xc)) / edge.spline_weight
    design = bspline_design(edge.grid.knots, edge.grid.order, xc)
    coeffs = solve_least_squares(design, target).coeffs
    return SplineEdge(edge.grid, coeffs, edge.base_weight, edge.spline_weight, edge.lock)


class KanLayer:
    """Dense grid of edges from n_in source nodes to n_out target nodes.

    Per-edge state is stored stacked: knots (n_in, n_out, K),
    coeffs (n_in, n_out, C), weights (n_in, n_out), lock id/params, and a
    per-target-node bias.  lock_op == -1 marks an unlocked (spline) edge.
    """

    def __init__(self, n_in, n_out, grid_size, degree, grid_range, rng):
        self.n_in = n_in
        self.n_out = n_out
        self.grid_size = grid_size
        self.degree = degree
        base = KnotGrid.uniform(grid_range[0], grid_range[1], grid_size, degree)
        self.knots = np.broadcast_to(base.knots, (n_in, n_out, base.knots.size)).copy()
        c = grid_size + degree
        # fan-in scaling keeps node sums O(input range) for wide layers
        self.w_b = np.full((n_in, n_out), 1.0 / n_in)
        self.w_s = np.full((n_in, n_out), 0.1)
        self.coeffs = rng.uniform(-0.1, 0.1, size=(n_in, n_out, c)) / \
            (n_in * self.w_s[..., None])
        self.lock_op = np.full((n_in, n_out), -1, dtype=np.int64)
        self.lock_params = np.zeros((n_in, n_out, 4))
        self.lock_trainable = np.zeros((n_in, n_out), dtype=bool)
        self.bias = np.zeros(n_out)
        self.clamp_count = 0

    # -- per-edge views -----------------------------------------------------

    def edge(self, i, j) -> SplineEdge:
        lock = None
        if self.lock_op[i, j] >= 0:
            lock = SymbolicLock(_OP_NAMES[self.lock_op[i, j]],
                                tuple(self.lock_params[i, j]),
                                bool(self.lock_trainable[i, j]))
        grid = KnotGrid(self.knots[i, j].copy(), self.degree, self.grid_size)
        return SplineEdge(grid, self.coeffs[i, j].copy(),
                          float(self.w_b[i, j]), float(self.w_s[i, j]), lock)

    # -- forward ------------------------------------------------------------

    _VEC_BUDGET = 8_000_000  # elements of the (m, n_in, n_out, C) basis tensor

    def forward(self, X, cache=None):
        """X (m, n_in) -> (m, n_out); optionally fills a cache dict.

        Small batches (and every gradient pass, whose callers chunk) run
        one broadcast over the (m, n_in, n_out, C) basis tensor; large
        evaluation batches fall back to a per-source-node loop so the
        basis tensor never materializes in full.
        """
        m = X.shape[0]
        grad_mode = cache is not None and cache.get("grad", False)
        c = self.grid_size + self.degree
        if grad_mode or m * self.n_in * self.n_out * c <= self._VEC_BUDGET:
            return self._forward_vec(X, cache, grad_mode)
        return self._forward_loop(X, cache)

    def _locked_values(self, lock_op_slice, lock_params_slice, x_cols, want_deriv):
        """Evaluate locked edges grouped by operator.

        x_cols has the broadcast shape of the edge block; returns
        (values, f, fp) arrays of that shape (f/fp zero where unlocked).
        """
        val = np.zeros(x_cols.shape)
        f_all = np.zeros(x_cols.shape) if want_deriv else None
        fp_all = np.zeros(x_cols.shape) if want_deriv else None
        present = np.unique(lock_op_slice[lock_op_slice >= 0])
        for op_id in present:
            op = get_operator(_OP_NAMES[op_id])
            mask = lock_op_slice == op_id
            a = lock_params_slice[..., 0]
            b = lock_params_slice[..., 1]
            c_ = lock_params_slice[..., 2]
            d = lock_params_slice[..., 3]
            u = a * x_cols + b
            f = op.eval_guarded(u)
            val = np.where(mask, c_ * f + d, val)
            if want_deriv:
                fp = op.deriv_guarded(u)
                f_all = np.where(mask, f, f_all)
                fp_all = np.where(mask, fp, fp_all)
        return val, f_all, fp_all

    def _forward_vec(self, X, cache, grad_mode):
        m = X.shape[0]
        unlocked = self.lock_op < 0
        locked = ~unlocked
        lo = self.knots[:, :, self.degree][None]
        hi = self.knots[:, :, -self.degree - 1][None]
        Xe = X[:, :, None]
        xc = np.clip(Xe, lo, hi)
        phi = np.zeros((m, self.n_in, self.n_out))
        basis = dbasis = spline = None
        if unlocked.any():
            self.clamp_count += int(np.sum((Xe != xc) & unlocked[None]))
            if grad_mode:
                basis, dbasis = bspline_design(self.knots[None], self.degree, xc,
                                               with_deriv=True)
            else:
                basis = bspline_design(self.knots[None], self.degree, xc)
            spline = np.einsum("mijc,ijc->mij", basis, self.coeffs)
            phi = np.where(unlocked[None],
                           self.w_b[None] * silu(xc) + self.w_s[None] * spline, 0.0)
        if locked.any():
            lock_val, f_lock, fp_lock = self._locked_values(
                self.lock_op, self.lock_params, np.broadcast_to(Xe, phi.shape),
                want_deriv=grad_mode)
            phi = np.where(locked[None], lock_val, phi)
        out = phi.sum(axis=1) + self.bias[None, :]
        if cache is not None:
            cache["node_in"] = X
            cache["edge_out"] = phi
            if grad_mode:
                zeros = np.zeros((m, self.n_in, self.n_out))
                cache["xc"] = xc
                cache["open"] = (Xe == xc) & unlocked[None]
                cache["B"] = basis if basis is not None else \
                    np.zeros((m, self.n_in, self.n_out, self.grid_size + self.degree))
                cache["dB"] = dbasis if dbasis is not None else cache["B"]
                cache["S"] = spline if spline is not None else zeros
                cache["f_lock"] = f_lock if locked.any() else zeros
                cache["fp_lock"] = fp_lock if locked.any() else zeros
        return out

    def _forward_loop(self, X, cache):
        m = X.shape[0]
        out = np.tile(self.bias, (m, 1))
        edge_out = np.zeros((m, self.n_in, self.n_out)) if cache is not None else None
        lo = self.knots[:, :, self.degree]
        hi = self.knots[:, :, -self.degree - 1]
        for i in range(self.n_in):
            x_i = X[:, i]
            unlocked = self.lock_op[i] < 0
            phi_i = np.zeros((m, self.n_out))
            if unlocked.any():
                xc = np.clip(x_i[:, None], lo[i][None, :], hi[i][None, :])
                self.clamp_count += int(np.sum((x_i[:, None] != xc) & unlocked[None, :]))
                basis = bspline_design(self.knots[i][None, :, :], self.degree, xc)
                spline = np.einsum("moc,oc->mo", basis, self.coeffs[i])
                phi_i = np.where(unlocked[None, :],
                                 self.w_b[i][None] * silu(xc) + self.w_s[i][None] * spline,
                                 0.0)
            if (self.lock_op[i] >= 0).any():
                lock_val, _, _ = self._locked_values(
                    self.lock_op[i][None, :], self.lock_params[i][None, :, :],
                    np.broadcast_to(x_i[:, None], (m, self.n_out)), want_deriv=False)
                phi_i = np.where((self.lock_op[i] >= 0)[None, :], lock_val, phi_i)
            if edge_out is not None:
                edge_out[:, i] = phi_i
            out += phi_i
        if cache is not None:
            cache["node_in"] = X
            cache["edge_out"] = edge_out
        return out

    def backward(self, cache, dY):
        """Accumulate parameter grads and return dL/dX given dL/dY."""
        X = cache["node_in"]
        m = X.shape[0]
        unlocked = self.lock_op < 0
        locked = ~unlocked

        g = {
            "coeffs": np.zeros_like(self.coeffs),
            "w_b": np.zeros_like(self.w_b),
            "w_s": np.zeros_like(self.w_s),
            "lock_params": np.zeros_like(self.lock_params),
            "bias": dY.sum(axis=0),
        }
        dX = np.zeros((m, self.n_in))

        xc = cache["xc"]
        base = silu(xc)
        dbase = silu_deriv(xc)
        # unlocked-edge parameter grads
        g["w_b"] = np.einsum("mj,mij->ij", dY, base) * unlocked
        g["w_s"] = np.einsum("mj,mij->ij", dY, cache["S"]) * unlocked
        g["coeffs"] = np.einsum("mj,mijc->ijc", dY, cache["B"]) * (self.w_s * unlocked)[..., None]
        # unlocked dX (clamped samples contribute zero)
        dspline = np.einsum("mijc,ijc->mij", cache["dB"], self.coeffs)
        dphi_dx = (self.w_b[None] * dbase + self.w_s[None] * dspline) * cache["open"]
        dX += np.einsum("mj,mij->mi", dY, np.where(unlocked[None], dphi_dx, 0.0))

        if locked.any():
            a = self.lock_params[..., 0]
            c_ = self.lock_params[..., 2]
            f = cache["f_lock"]
            fp = cache["fp_lock"]
            dY_ij = dY[:, None, :]
            da = np.einsum("mj,mij->ij", dY, fp * X[:, :, None]) * c_
            db = np.einsum("mj,mij->ij", dY, fp) * c_
            dc = np.einsum("mj,mij->ij", dY, f)
            dd = np.broadcast_to(dY.sum(axis=0)[None, :], (self.n_in, self.n_out))
            lp = np.stack([da, db, dc, dd], axis=-1)
            g["lock_params"] = np.where((locked & self.lock_trainable)[..., None], lp, 0.0)
            dX += np.einsum("mj,mij->mi", dY, np.where(locked[None], (c_ * a)[None] * fp, 0.0))
        return g, dX


class KanNetwork:
    """Layered KAN: widths [n0, ..., nL], one KanLayer per consecutive pair."""

    def __init__(self, widths, grid_size=5, degree=3, grid_range=(-1.0, 1.0), seed=0,
                 rng=None):
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ConfigError(f"invalid widths {widths}")
        self.widths = list(widths)
        self.grid_size = grid_size
        self.degree = degree
        if rng is None:
            rng = np.random.default_rng(seed)
        self.layers = [
            KanLayer(widths[l], widths[l + 1], grid_size, degree, grid_range, rng)
            for l in range(len(widths) - 1)
        ]
        self.op_names = _OP_NAMES

    # -- evaluation ----------------------------------------------------------

    def forward(self, x):
        """Single input vector -> output vector of length widths[-1]."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.widths[0],):
            raise ValueError(f"input must have length {self.widths[0]}, got {x.shape}")
        return self.forward_batch(x[None, :])[0]

    def forward_batch(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.widths[0]:
            raise ValueError(f"batch must be (m, {self.widths[0]}), got {X.shape}")
        for layer in self.layers:
            X = layer.forward(X)
        return X

    def predict(self, X):
        """Batch forward, squeezing a scalar output column."""
        out = self.forward_batch(np.asarray(X, dtype=float))
        return out[:, 0] if self.widths[-1] == 1 else out

    def forward_cache(self, X, grad=False):
        """Forward pass retaining per-layer activations.

        grad=False keeps only node inputs and edge outputs (for pruning,
        refitting and extraction); grad=True also keeps basis values and
        derivatives for backward().
        """
        X = np.asarray(X, dtype=float)
        caches = []
        for layer in self.layers:
            cache = {"grad": grad}
            X = layer.forward(X, cache=cache)
            caches.append(_Cache(cache))
        return X, caches

    def backward(self, caches, dY):
        grads = [None] * len(self.layers)
        for l in range(len(self.layers) - 1, -1, -1):
            grads[l], dY = self.layers[l].backward(caches[l].data, dY)
        return grads

    # -- parameter vector interface -------------------------------------------

    def _masks(self, layer):
        unlocked = layer.lock_op < 0
        trainable_lock = (layer.lock_op >= 0) & layer.lock_trainable
        return unlocked, trainable_lock

    def get_params(self):
        parts = []
        for layer in self.layers:
            u, t = self._masks(layer)
            parts += [layer.coeffs[u].ravel(), layer.w_b[u], layer.w_s[u],
                      layer.lock_params[t].ravel(), layer.bias]
        return np.concatenate(parts) if parts else np.zeros(0)

    def set_params(self, vec):
        pos = 0
        for layer in self.layers:
            u, t = self._masks(layer)
            n = int(u.sum())
            c = layer.coeffs.shape[-1]
            layer.coeffs[u] = vec[pos:pos + n * c].reshape(n, c); pos += n * c
            layer.w_b[u] = vec[pos:pos + n]; pos += n
            layer.w_s[u] = vec[pos:pos + n]; pos += n
            k = int(t.sum())
            layer.lock_params[t] = vec[pos:pos + 4 * k].reshape(k, 4); pos += 4 * k
            layer.bias[:] = vec[pos:pos + layer.n_out]; pos += layer.n_out
        if pos != vec.size:
            raise ValueError("parameter vector length mismatch")

    def grads_to_vector(self, grads):
        parts = []
        for layer, g in zip(self.layers, grads):
            u, t = self._masks(layer)
            parts += [g["coeffs"][u].ravel(), g["w_b"][u], g["w_s"][u],
                      g["lock_params"][t].ravel(), g["bias"]]
        return np.concatenate(parts) if parts else np.zeros(0)

    def l2_mask(self):
        """True for parameters covered by the L2 penalty (spline coeffs and
        edge weights of unlocked edges; locked affine params and biases are
        exempt)."""
        parts = []
        for layer in self.layers:
            u, t = self._masks(layer)
            n = int(u.sum())
            c = layer.coeffs.shape[-1]
            parts += [np.ones(n * c, bool), np.ones(n, bool), np.ones(n, bool),
                      np.zeros(4 * int(t.sum()), bool), np.zeros(layer.n_out, bool)]
        return np.concatenate(parts) if parts else np.zeros(0, bool)

    # -- utilities -------------------------------------------------------------

    def copy(self):
        return copy.deepcopy(self)

    def reset_clamp_counters(self):
        for layer in self.layers:
            layer.clamp_count = 0

    @property
    def clamp_count(self):
        return sum(layer.clamp_count for layer in self.layers)

    def n_params(self):
        return self.get_params().size


class _Cache:
    __slots__ = ("data",)

    def __init__(self, data):
        self.data = data

    @property
    def node_in(self):
        return self.data["node_in"]

    @property
    def edge_out(self):
        return self.data["edge_out"]


def l2_penalty(net: KanNetwork) -> float:
    """Sum of squares of unlocked spline coeffs and edge weights."""
    total = 0.0
    for layer in net.layers:
        u = layer.lock_op < 0
        total += float(np.sum(layer.coeffs[u] ** 2))
        total += float(np.sum(layer.w_b[u] ** 2) + np.sum(layer.w_s[u] ** 2))
    return total


def lock_edge_symbolic(net: KanNetwork, layer: int, i: int, j: int, operator: str,
                       affine=(1.0, 0.0, 1.0, 0.0), trainable_affine=False) -> KanNetwork:
    """Fix edge (layer, i, j) to c*f(a*x+b)+d.  Mutates and returns net."""
    get_operator(operator)  # raises ConfigError listing the library
    lay = net.layers[layer]
    lay.lock_op[i, j] = _OP_INDEX[operator]
    lay.lock_params[i, j] = np.asarray(affine, dtype=float)
    lay.lock_trainable[i, j] = bool(trainable_affine)
    return net


def lock_all_edges(net: KanNetwork, operator: str = "x",
                   affine=(1.0, 0.0, 1.0, 0.0), trainable_affine=True) -> KanNetwork:
    for l, layer in enumerate(net.layers):
        for i in range(layer.n_in):
            for j in range(layer.n_out):
                lock_edge_symbolic(net, l, i, j, operator, affine, trainable_affine)
    return net


# ---------------------------------------------------------------------------
# Pruning
# ---------------------------------------------------------------------------

@dataclass
class PruneReport:
    edges_pruned: list = field(default_factory=list)   # (layer, i, j)
    nodes_removed: list = field(default_factory=list)  # (level, node)
    rms_delta: float = 0.0


def prune(net: KanNetwork, calib_X, threshold: float):
    """Lock low-variance unlocked edges to zero and drop dead hidden nodes.

    An edge is pruned when its output std over the calibration batch is
    below threshold * (max edge output std in its layer); its mean output
    folds into the downstream bias so near-constant edges prune cleanly.
    Returns (pruned net, PruneReport).
    """
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"prune threshold must lie in (0, 1), got {threshold}")
    calib_X = np.asarray(calib_X, dtype=float)
    y_before = net.predict(calib_X)
    out = net.copy()
    report = PruneReport()

    X = calib_X
    for l, layer in enumerate(out.layers):
        _ = layer.forward(X, cache=(cache := {"grad": False}))
        edge_out = cache["edge_out"]
        stds = edge_out.std(axis=0)
        layer_max = float(stds.max()) if stds.size else 0.0
        unlocked = layer.lock_op < 0
        kill = unlocked & (stds < threshold * layer_max)
        for i, j in zip(*np.nonzero(kill)):
            layer.bias[j] += float(edge_out[:, i, j].mean())
            layer.lock_op[i, j] = _ZERO_LOCK
            layer.lock_params[i, j] = (1.0, 0.0, 0.0, 0.0)
            layer.lock_trainable[i, j] = False
            report.edges_pruned.append((l, int(i), int(j)))
        X = layer.forward(X)  # propagate post-prune activations

    _remove_dead_nodes(out, report)
    y_after = out.predict(calib_X)
    report.rms_delta = float(np.sqrt(np.mean((y_after - y_before) ** 2)))
    return out, report


def _constant_incoming(layer: KanLayer, j: int):
    """Constant node value if all incoming edges are constant, else None."""
    locked = layer.lock_op[:, j] >= 0
    if not locked.all():
        return None
    if np.any(layer.lock_params[:, j, 2] != 0.0):
        return None
    return float(layer.bias[j] + layer.lock_params[:, j, 3].sum())


def _remove_dead_nodes(net: KanNetwork, report: PruneReport):
    for level in range(1, len(net.widths) - 1):
        incoming = net.layers[level - 1]
        outgoing = net.layers[level]
        dead = []
        for j in range(net.widths[level]):
            val = _constant_incoming(incoming, j)
            if val is not None:
                dead.append((j, val))
        if len(dead) == net.widths[level]:
            dead = dead[1:]  # keep one node so the graph stays connected
        if not dead:
            continue
        for j, val in dead:
            for t in range(outgoing.n_out):
                outgoing.bias[t] += float(edge_eval(outgoing.edge(j, t), val))
            report.nodes_removed.append((level, int(j)))
        idx = [j for j, _ in dead]
        for name in ("knots", "coeffs", "w_b", "w_s", "lock_op", "lock_params",
                     "lock_trainable"):
            setattr(incoming, name, np.delete(getattr(incoming, name), idx, axis=1))
            setattr(outgoing, name, np.delete(getattr(outgoing, name), idx, axis=0))
        incoming.bias = np.delete(incoming.bias, idx)
        incoming.n_out -= len(idx)
        outgoing.n_in -= len(idx)
        net.widths[level] -= len(idx)


# ---------------------------------------------------------------------------
# Grid refitting
# ---------------------------------------------------------------------------

@dataclass
class RefitReport:
    refitted: int = 0
    skipped: list = field(default_factory=list)
    rms_delta: float = 0.0


def grid_refit(net: KanNetwork, sample_X, margin: float = 0.05):
    """Re-span every unlocked edge's grid to the activations it actually
    sees (5% margin each side) and refit coefficients by least squares of
    the old spline values.  Mutates and returns (net, RefitReport)."""
    sample_X = np.asarray(sample_X, dtype=float)
    y_before = net.predict(sample_X)
    report = RefitReport()

    X = sample_X
    for l, layer in enumerate(net.layers):
        c = layer.grid_size + layer.degree
        new_knots = layer.knots.copy()
        new_coeffs = layer.coeffs.copy()
        for i in range(layer.n_in):
            xs = X[:, i]
            cols = np.nonzero(layer.lock_op[i] < 0)[0]
            if cols.size == 0:
                continue
            if xs.size < c:
                report.skipped.append((l, i, "insufficient samples"))
                continue
            span = float(xs.max() - xs.min())
            if span <= 0:
                report.skipped.append((l, i, "degenerate span"))
                continue
            lo = float(xs.min()) - margin * span
            hi = float(xs.max()) + margin * span
            grid = KnotGrid.uniform(lo, hi, layer.grid_size, layer.degree)
            # old spline values at the observed samples (per-edge clamping)
            old_knots = layer.knots[i, cols]                      # (q, K)
            xc = np.clip(xs[:, None], old_knots[:, layer.degree][None],
                         old_knots[:, -layer.degree - 1][None])    # (m, q)
            old_basis = bspline_design(old_knots[None], layer.degree, xc)
            targets = np.einsum("mqc,qc->mq", old_basis, layer.coeffs[i, cols])
            design = bspline_design(grid.knots, layer.degree, np.clip(xs, lo, hi))
            fit = solve_least_squares(design, targets)
            new_coeffs[i, cols] = fit.coeffs.T
            new_knots[i, cols] = grid.knots
            report.refitted += cols.size
        layer.knots = new_knots
        layer.coeffs = new_coeffs
        X = layer.forward(X)

    net.reset_clamp_counters()
    y_after = net.predict(sample_X)
    report.rms_delta = float(np.sqrt(np.mean((y_after - y_before) ** 2)))
    return net, report


# ---------------------------------------------------------------------------
# Checkpointing (shared container for KAN and MLP; versioned, bit-exact)
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(net, path):
    """Write a versioned npz checkpoint; round-trips bit-exactly."""
    from .baselines import MlpNetwork  # local import to avoid a cycle

    payload = {"version": np.int64(CHECKPOINT_VERSION)}
    if isinstance(net, KanNetwork):
        payload["kind"] = np.array("kan")
        payload["widths"] = np.asarray(net.widths, dtype=np.int64)
        payload["grid_size"] = np.int64(net.grid_size)
        payload["degree"] = np.int64(net.degree)
        payload["op_names"] = np.array(net.op_names)
        for l, layer in enumerate(net.layers):
            for name in ("knots", "coeffs", "w_b", "w_s", "lock_op", "lock_params",
                         "lock_trainable", "bias"):
                payload[f"layer{l}_{name}"] = getattr(layer, name)
    elif isinstance(net, MlpNetwork):
        payload["kind"] = np.array("mlp")
        payload["widths"] = np.asarray(net.widths, dtype=np.int64)
        for l, (w, b) in enumerate(zip(net.weights, net.biases)):
            payload[f"w{l}"] = w
            payload[f"b{l}"] = b
    else:
        raise TypeError(f"cannot checkpoint {type(net)!r}")
    np.savez(path, **payload)


def load_checkpoint(path):
    from .baselines import MlpNetwork

    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {version}")
        kind = str(data["kind"])
        widths = [int(w) for w in data["widths"]]
        if kind == "kan":
            net = KanNetwork(widths, grid_size=int(data["grid_size"]),
                             degree=int(data["degree"]), seed=0)
            saved_ops = [str(s) for s in data["op_names"]]
            if saved_ops != net.op_names:
                raise ConfigError("checkpoint operator table does not match library")
            for l, layer in enumerate(net.layers):
                for name in ("knots", "coeffs", "w_b", "w_s", "lock_op", "lock_params",
                             "lock_trainable", "bias"):
                    setattr(layer, name, data[f"layer{l}_{name}"].copy())
            return net
        if kind == "mlp":
            net = MlpNetwork(widths, seed=0)
            net.weights = [data[f"w{l}"].copy() for l in range(len(widths) - 1)]
            net.biases = [data[f"b{l}"].copy() for l in range(len(widths) - 1)]
            return net
    raise ConfigError(f"unknown checkpoint kind {kind!r}")
