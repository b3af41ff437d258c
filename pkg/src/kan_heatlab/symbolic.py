"""Symbolic formulas: expression trees over the operator library,
per-edge snapping, whole-network extraction, and the complexity index.

The canonical form of a tree is a flat sum  c1*atom1 + ... + cn*atomn + const
where every atom is a variable, a unary operator application (with its
argument itself canonicalized), a product/quotient of non-constant parts,
or a numeric spline residual.  Nested affine maps collapse into the
coefficients during canonicalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import operators as ops_mod
from .numerics import bspline_design, solve_least_squares
from .operators import DEFAULT_LIBRARY, Operator, get_operator, silu

__all__ = [
    "Const",
    "Var",
    "Unary",
    "BinOp",
    "SplineAtom",
    "SymbolicFormula",
    "SnapResult",
    "snap_edge",
    "snap_candidates",
    "select_snap",
    "extract_formula",
    "ExtractionResult",
    "complexity",
    "denormalize_formula",
]


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 0-based; prints as x{index+1}


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    child: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr


@dataclass(eq=False)
class SplineAtom(Expr):
    """Numeric residual: an un-snapped spline edge embedded in a formula."""

    knots: np.ndarray
    coeffs: np.ndarray
    order: int
    w_b: float
    w_s: float
    child: Expr


def add(*terms: Expr) -> Expr:
    out = terms[0]
    for t in terms[1:]:
        out = BinOp("+", out, t)
    return out


def mul(a: Expr, b: Expr) -> Expr:
    return BinOp("*", a, b)


def affine_apply(op_name: str, child: Expr, a: float, b: float, c: float, d: float) -> Expr:
    """Build c*f(a*child + b) + d, dropping degenerate pieces."""
    if c == 0.0:
        return Const(d)
    inner = BinOp("+", BinOp("*", Const(a), child), Const(b))
    body = Unary(op_name, inner)
    expr = BinOp("*", Const(c), body)
    if d != 0.0:
        expr = BinOp("+", expr, Const(d))
    return expr


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_DIV_EPS = 1e-9


def _eval(expr: Expr, X: np.ndarray) -> np.ndarray:
    m = X.shape[0]
    if isinstance(expr, Const):
        return np.full(m, expr.value)
    if isinstance(expr, Var):
        return X[:, expr.index].astype(float)
    if isinstance(expr, Unary):
        return get_operator(expr.op).eval_guarded(_eval(expr.child, X))
    if isinstance(expr, SplineAtom):
        x = _eval(expr.child, X)
        lo, hi = expr.knots[expr.order], expr.knots[-expr.order - 1]
        xc = np.clip(x, lo, hi)
        basis = bspline_design(expr.knots, expr.order, xc)
        return expr.w_b * silu(xc) + expr.w_s * (basis @ expr.coeffs)
    if isinstance(expr, BinOp):
        l = _eval(expr.left, X)
        r = _eval(expr.right, X)
        if expr.op == "+":
            return l + r
        if expr.op == "-":
            return l - r
        if expr.op == "*":
            return l * r
        # protected division: near-zero denominators evaluate to 1
        out = np.where(np.abs(r) < _DIV_EPS, 1.0, l / np.where(np.abs(r) < _DIV_EPS, 1.0, r))
        return out
    raise TypeError(f"unknown expression node {type(expr)!r}")


# ---------------------------------------------------------------------------
# Canonicalization (flat linear combination of atoms)
# ---------------------------------------------------------------------------

def _combo(expr: Expr):
    """Return (terms, const) with terms = {key: [coeff, atom]}."""
    if isinstance(expr, Const):
        return {}, float(expr.value)
    if isinstance(expr, Var):
        atom = expr
        return {_key(atom): [1.0, atom]}, 0.0
    if isinstance(expr, Unary):
        terms, const = _combo(expr.child)
        if expr.op == "x":  # identity dissolves
            return terms, const
        if not terms:  # constant argument folds when finite
            with np.errstate(all="ignore"):
                val = float(np.asarray(get_operator(expr.op).eval(const)))
            if np.isfinite(val):
                return {}, val
        atom = Unary(expr.op, _rebuild(terms, const))
        return {_key(atom): [1.0, atom]}, 0.0
    if isinstance(expr, SplineAtom):
        terms, const = _combo(expr.child)
        atom = SplineAtom(expr.knots, expr.coeffs, expr.order, expr.w_b, expr.w_s,
                          _rebuild(terms, const))
        return {_key(atom): [1.0, atom]}, 0.0
    if isinstance(expr, BinOp):
        if expr.op in "+-":
            lt, lc = _combo(expr.left)
            rt, rc = _combo(expr.right)
            sign = 1.0 if expr.op == "+" else -1.0
            for k, (coeff, atom) in rt.items():
                if k in lt:
                    lt[k][0] += sign * coeff
                else:
                    lt[k] = [sign * coeff, atom]
            lt = {k: v for k, v in lt.items() if v[0] != 0.0}
            return lt, lc + sign * rc
        if expr.op == "*":
            lt, lc = _combo(expr.left)
            rt, rc = _combo(expr.right)
            if not lt:  # constant * combo
                return {k: [lc * c, a] for k, (c, a) in rt.items()} if lc != 0.0 else {}, lc * rc
            if not rt:
                return {k: [rc * c, a] for k, (c, a) in lt.items()} if rc != 0.0 else {}, lc * rc
            atom = BinOp("*", _rebuild(lt, lc), _rebuild(rt, rc))
            return {_key(atom): [1.0, atom]}, 0.0
        # division
        lt, lc = _combo(expr.left)
        rt, rc = _combo(expr.right)
        if not rt and abs(rc) >= _DIV_EPS:
            inv = 1.0 / rc
            return {k: [inv * c, a] for k, (c, a) in lt.items()}, lc * inv
        atom = BinOp("/", _rebuild(lt, lc), _rebuild(rt, rc))
        return {_key(atom): [1.0, atom]}, 0.0
    raise TypeError(f"unknown expression node {type(expr)!r}")


def _rebuild(terms: dict, const: float) -> Expr:
    parts = []
    for k in sorted(terms):
        coeff, atom = terms[k]
        if coeff == 0.0:
            continue
        parts.append(atom if coeff == 1.0 else BinOp("*", Const(coeff), atom))
    if const != 0.0 or not parts:
        parts.append(Const(const))
    out = parts[0]
    for p in parts[1:]:
        out = BinOp("+", out, p)
    return out


def simplify(expr: Expr) -> Expr:
    terms, const = _combo(expr)
    return _rebuild(terms, const)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def _key(expr: Expr) -> str:
    return _sexpr(expr)


def _sexpr(expr: Expr) -> str:
    if isinstance(expr, Const):
        return f"(const {_fmt(expr.value)})"
    if isinstance(expr, Var):
        return f"(var {expr.index})"
    if isinstance(expr, Unary):
        return f"(op {expr.op} {_sexpr(expr.child)})"
    if isinstance(expr, SplineAtom):
        k = " ".join(_fmt(v) for v in expr.knots)
        c = " ".join(_fmt(v) for v in expr.coeffs)
        return (f"(spline {expr.order} {_fmt(expr.w_b)} {_fmt(expr.w_s)} "
                f"(knots {k}) (coeffs {c}) {_sexpr(expr.child)})")
    if isinstance(expr, BinOp):
        return f"({expr.op} {_sexpr(expr.left)} {_sexpr(expr.right)})"
    raise TypeError(type(expr))


def _tokenize(text: str):
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse(tokens: list, pos: int):
    tok = tokens[pos]
    if tok != "(":
        raise ValueError(f"expected '(' at token {pos}")
    head = tokens[pos + 1]
    pos += 2
    if head == "const":
        value = float(tokens[pos])
        return Const(value), pos + 2
    if head == "var":
        return Var(int(tokens[pos])), pos + 2
    if head == "op":
        name = tokens[pos]
        child, pos = _parse(tokens, pos + 1)
        return Unary(name, child), pos + 1
    if head in "+-*/" and len(head) == 1:
        left, pos = _parse(tokens, pos)
        right, pos = _parse(tokens, pos)
        return BinOp(head, left, right), pos + 1
    if head == "spline":
        order = int(tokens[pos]); pos += 1
        w_b = float(tokens[pos]); pos += 1
        w_s = float(tokens[pos]); pos += 1
        if tokens[pos] != "(" or tokens[pos + 1] != "knots":
            raise ValueError("malformed spline atom")
        pos += 2
        knots = []
        while tokens[pos] != ")":
            knots.append(float(tokens[pos])); pos += 1
        pos += 1
        if tokens[pos] != "(" or tokens[pos + 1] != "coeffs":
            raise ValueError("malformed spline atom")
        pos += 2
        coeffs = []
        while tokens[pos] != ")":
            coeffs.append(float(tokens[pos])); pos += 1
        pos += 1
        child, pos = _parse(tokens, pos)
        return SplineAtom(np.array(knots), np.array(coeffs), order, w_b, w_s, child), pos + 1
    raise ValueError(f"unknown s-expression head {head!r}")


def _infix(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Const):
        return _fmt(expr.value) if expr.value >= 0 or parent_prec == 0 else f"({_fmt(expr.value)})"
    if isinstance(expr, Var):
        return f"x{expr.index + 1}"
    if isinstance(expr, Unary):
        inner = _infix(expr.child, 0)
        if expr.op == "x^2":
            return f"({inner})^2"
        if expr.op == "1/x":
            return f"1/({inner})"
        if expr.op == "1/sqrt(x)":
            return f"1/sqrt({inner})"
        return f"{expr.op}({inner})"
    if isinstance(expr, SplineAtom):
        return f"spline[{_infix(expr.child, 0)}]"
    if isinstance(expr, BinOp):
        prec = {"+": 1, "-": 1, "*": 2, "/": 2}[expr.op]
        l = _infix(expr.left, prec)
        r = _infix(expr.right, prec + (1 if expr.op in "-/" else 0))
        body = f"{l} {expr.op} {r}" if expr.op in "+-" else f"{l}{expr.op}{r}"
        return f"({body})" if prec < parent_prec else body
    raise TypeError(type(expr))


# ---------------------------------------------------------------------------
# SymbolicFormula
# ---------------------------------------------------------------------------

@dataclass
class SymbolicFormula:
    root: Expr
    n_inputs: int

    def evaluate(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_inputs:
            raise ValueError(f"formula takes {self.n_inputs} inputs, got {X.shape[1]}")
        with np.errstate(all="ignore"):
            return _eval(self.root, X)

    def simplified(self) -> "SymbolicFormula":
        return SymbolicFormula(simplify(self.root), self.n_inputs)

    def complexity(self) -> int:
        return complexity(self)

    def to_infix(self) -> str:
        return _infix(simplify(self.root))

    def to_sexpr(self) -> str:
        return f"(formula {self.n_inputs} {_sexpr(self.root)})"

    @classmethod
    def from_sexpr(cls, text: str) -> "SymbolicFormula":
        tokens = _tokenize(text)
        if tokens[0] != "(" or tokens[1] != "formula":
            raise ValueError("not a formula s-expression")
        n_inputs = int(tokens[2])
        root, pos = _parse(tokens, 3)
        if tokens[pos] != ")":
            raise ValueError("trailing tokens in formula s-expression")
        return cls(root, n_inputs)

    def is_linear(self) -> bool:
        """True when the canonical form is an affine map of the inputs."""
        terms, _ = _combo(self.root)
        return all(isinstance(atom, Var) for _, atom in terms.values())

    def linear_coefficients(self):
        """(coeffs vector, intercept) of an affine formula; None otherwise."""
        terms, const = _combo(self.root)
        if not all(isinstance(atom, Var) for _, atom in terms.values()):
            return None
        coeffs = np.zeros(self.n_inputs)
        for coeff, atom in terms.values():
            coeffs[atom.index] = coeff
        return coeffs, const

    def flagged_residuals(self) -> int:
        """Count of numeric spline residual nodes left in the tree."""
        def walk(e):
            if isinstance(e, SplineAtom):
                return 1 + walk(e.child)
            if isinstance(e, Unary):
                return walk(e.child)
            if isinstance(e, BinOp):
                return walk(e.left) + walk(e.right)
            return 0
        return walk(self.root)


def complexity(formula: SymbolicFormula) -> int:
    """Distinct top-level additive terms plus one per non-identity
    operator application (protected divisions and numeric spline
    residuals count as applications).  Always >= 1.
    """
    terms, const = _combo(formula.root)
    n_terms = len(terms) + (1 if const != 0.0 or not terms else 0)

    def count_ops(e) -> int:
        if isinstance(e, Unary):
            return (0 if e.op == "x" else 1) + count_ops(e.child)
        if isinstance(e, SplineAtom):
            return 1 + count_ops(e.child)
        if isinstance(e, BinOp):
            extra = 1 if e.op == "/" else 0
            return extra + count_ops(e.left) + count_ops(e.right)
        return 0

    total = n_terms + sum(count_ops(atom) for _, atom in terms.values())
    return max(total, 1)


def denormalize_formula(formula: SymbolicFormula, input_offset, input_scale,
                        target_offset: float, target_scale: float) -> SymbolicFormula:
    """Conjugate a formula trained in normalized coordinates with the
    dataset's affine normalization, so constants land in physical units."""
    input_offset = np.asarray(input_offset, dtype=float)
    input_scale = np.asarray(input_scale, dtype=float)

    def sub(e):
        if isinstance(e, Var):
            i = e.index
            return BinOp("*", Const(1.0 / input_scale[i]),
                         BinOp("-", Var(i), Const(float(input_offset[i]))))
        if isinstance(e, Unary):
            return Unary(e.op, sub(e.child))
        if isinstance(e, SplineAtom):
            return SplineAtom(e.knots, e.coeffs, e.order, e.w_b, e.w_s, sub(e.child))
        if isinstance(e, BinOp):
            return BinOp(e.op, sub(e.left), sub(e.right))
        return e

    root = BinOp("+", BinOp("*", Const(float(target_scale)), sub(formula.root)),
                 Const(float(target_offset)))
    return SymbolicFormula(simplify(root), formula.n_inputs)


# ---------------------------------------------------------------------------
# Per-edge symbolic snapping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SnapResult:
    op: Optional[str]
    affine: Optional[tuple]
    r2: float


_A_GRID = np.concatenate([
    -np.logspace(np.log10(0.1), np.log10(50.0), 40)[::-1],
    np.logspace(np.log10(0.1), np.log10(50.0), 40),
])
_B_GRID = np.linspace(-10.0, 10.0, 41)


def _fit_cd(u: np.ndarray, y: np.ndarray):
    """Closed-form least squares for y ~ c*u + d along the last axis."""
    um = u.mean(axis=-1)
    ym = y.mean()
    uc = u - um[..., None]
    var = np.mean(uc * uc, axis=-1)
    cov = np.mean(uc * (y - ym), axis=-1)
    with np.errstate(all="ignore"):
        c = np.where(var > 0, cov / np.where(var > 0, var, 1.0), 0.0)
    d = ym - c * um
    return c, d


def _r2_of(pred: np.ndarray, y: np.ndarray, ss_tot: float):
    resid = pred - y
    return 1.0 - np.sum(resid * resid, axis=-1) / ss_tot


def snap_candidates(xs, ys, library=None, *, max_refine: int = 12,
                    search_samples: int = 96) -> list:
    """Fit every library member as y ~ c*f(a*x + b) + d.

    Coarse grid over (a, b) with closed-form (c, d) on a deterministic
    quantile subsample, Gauss-Newton refinement, final R² on the full
    sample set.  Returns [(Operator, params array, r2)] in library order.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.size < 10:
        raise ValueError("snap needs at least 10 samples")
    if np.ptp(xs) <= 0:
        raise ValueError("snap needs a nondegenerate x-range")
    if library is None:
        library = list(DEFAULT_LIBRARY)
    lib = [get_operator(name) if isinstance(name, str) else name for name in library]

    ym = ys.mean()
    ss_tot = float(np.sum((ys - ym) ** 2))
    if ss_tot < 1e-300:
        return [(get_operator("x"), np.array([1.0, 0.0, 0.0, float(ym)]), 1.0)]

    if xs.size > search_samples:
        idx = np.argsort(xs, kind="stable")[
            np.linspace(0, xs.size - 1, search_samples).round().astype(int)
        ]
        gx, gy = xs[idx], ys[idx]
    else:
        gx, gy = xs, ys
    g_ss = float(np.sum((gy - gy.mean()) ** 2))
    if g_ss < 1e-300:
        g_ss = 1.0

    candidates = []
    au = _A_GRID[:, None, None]
    bu = _B_GRID[None, :, None]
    for op in lib:
        if op.name == "x":
            # affine target: (a, b) redundant, one exact linear fit
            c, d = _fit_cd(xs[None, None, :], ys)
            params = np.array([1.0, 0.0, float(c[0, 0]), float(d[0, 0])])
            r2 = float(_r2_of(params[2] * xs + params[3], ys, ss_tot))
            candidates.append((op, params, r2))
            continue
        with np.errstate(all="ignore"):
            u = op.fn(au * gx[None, None, :] + bu)
        bad = ~np.all(np.isfinite(u), axis=-1)
        u = np.where(np.isfinite(u), u, 0.0)
        c, d = _fit_cd(u, gy)
        r2 = _r2_of(c[..., None] * u + d[..., None], gy, g_ss)
        r2 = np.where(bad, -np.inf, r2)
        flat = int(np.argmax(r2))
        ia, ib = np.unravel_index(flat, r2.shape)
        params = np.array([_A_GRID[ia], _B_GRID[ib], c[ia, ib], d[ia, ib]])
        params, _ = _refine(op, params, gx, gy, g_ss, max_refine)
        with np.errstate(all="ignore"):
            pred = params[2] * op.fn(params[0] * xs + params[1]) + params[3]
        if np.all(np.isfinite(pred)):
            full_r2 = float(1.0 - np.sum((pred - ys) ** 2) / ss_tot)
        else:
            full_r2 = float("-inf")
        candidates.append((op, params, full_r2))
    return candidates


def select_snap(candidates, *, r2_floor: float = 0.5, tie_tol: float = 1e-9
                ) -> SnapResult:
    """Pick the candidate maximizing R²; candidates within tie_tol of the
    running best are settled by lower complexity weight, then name order."""
    best = None
    for op, params, r2 in candidates:
        if not np.isfinite(r2):
            continue
        if best is None or r2 > best[2] + tie_tol:
            best = (op, params, r2)
        elif r2 > best[2] - tie_tol:
            if (op.complexity_weight, op.name) < (best[0].complexity_weight,
                                                  best[0].name):
                best = (op, params, r2)
    if best is None or best[2] < r2_floor:
        top = max((c[2] for c in candidates if np.isfinite(c[2])),
                  default=float("-inf"))
        return SnapResult(None, None, float(top))
    op, params, r2 = best
    a, b, c, d = (float(v) for v in params)
    return SnapResult(op.name, (a, b, c, d), float(r2))


def snap_edge(xs, ys, library=None, *, r2_floor: float = 0.5,
              tie_tol: float = 1e-9, max_refine: int = 12,
              search_samples: int = 96) -> SnapResult:
    """Best library fit y ~ c*f(a*x + b) + d (see snap_candidates)."""
    cands = snap_candidates(xs, ys, library, max_refine=max_refine,
                            search_samples=search_samples)
    return select_snap(cands, r2_floor=r2_floor, tie_tol=tie_tol)


def _refine(op: Operator, params: np.ndarray, xs, ys, ss_tot, max_iter: int):
    """Damped Gauss-Newton on (a, b, c, d); rejects non-improving steps."""
    def r2_at(p):
        a, b, c, d = p
        with np.errstate(all="ignore"):
            pred = c * op.fn(a * xs + b) + d
        if not np.all(np.isfinite(pred)):
            return -np.inf
        return 1.0 - float(np.sum((pred - ys) ** 2)) / ss_tot

    best = params.copy()
    best_r2 = r2_at(best)
    for _ in range(max_iter):
        a, b, c, d = best
        with np.errstate(all="ignore"):
            u = a * xs + b
            f = op.fn(u)
            fp = op.deriv(u)
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(fp))):
            break
        resid = c * f + d - ys
        jac = np.stack([c * fp * xs, c * fp, f, np.ones_like(xs)], axis=1)
        try:
            step = solve_least_squares(jac, -resid).coeffs
        except Exception:
            break
        improved = False
        scale = 1.0
        for _ in range(6):
            cand = best + scale * step
            r2 = r2_at(cand)
            if r2 > best_r2 + 1e-15:
                best, best_r2 = cand, r2
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
    return best, best_r2


# ---------------------------------------------------------------------------
# Whole-network extraction
# ---------------------------------------------------------------------------

@dataclass
class ExtractionResult:
    formula: SymbolicFormula
    coverage: float
    flagged: list
    fidelity_rms: float
    edge_snaps: dict


def extract_formula(net, X, *, library=None, r2_floor: float = 0.5,
                    tie_tol: float = 1e-9, snap_cache: Optional[dict] = None
                    ) -> ExtractionResult:
    """Snap every unlocked edge of `net` on its observed activations and
    compose the results through the network topology into one formula.

    X supplies the activation samples (typically the training inputs).
    Un-snappable edges stay numeric and are flagged.  snap_cache (keyed by
    edge) lets callers reuse the expensive per-operator fits while varying
    the selection tolerance; it is only valid for an unchanged net.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if net.widths[-1] != 1:
        raise ValueError("extraction supports scalar-output networks only")

    _, caches = net.forward_cache(X)
    node_exprs = [Var(i) for i in range(net.widths[0])]
    flagged = []
    edge_snaps = {}
    covered = 0
    active = 0

    for l, layer in enumerate(net.layers):
        cache = caches[l]
        out_exprs = []
        for j in range(layer.n_out):
            parts = [Const(float(layer.bias[j]))]
            for i in range(layer.n_in):
                if layer.lock_op[i, j] >= 0:
                    a, b, c, d = (float(v) for v in layer.lock_params[i, j])
                    name = net.op_names[layer.lock_op[i, j]]
                    if c != 0.0:
                        active += 1
                        covered += 1
                    parts.append(affine_apply(name, node_exprs[i], a, b, c, d))
                else:
                    active += 1
                    key = (l, i, j)
                    if snap_cache is not None and key in snap_cache:
                        cands = snap_cache[key]
                    else:
                        cands = snap_candidates(cache.node_in[:, i],
                                                cache.edge_out[:, i, j], library)
                        if snap_cache is not None:
                            snap_cache[key] = cands
                    snap = select_snap(cands, r2_floor=r2_floor, tie_tol=tie_tol)
                    edge_snaps[key] = snap
                    if snap.op is None:
                        flagged.append(key)
                        parts.append(SplineAtom(
                            layer.knots[i, j].copy(), layer.coeffs[i, j].copy(),
                            layer.degree, float(layer.w_b[i, j]), float(layer.w_s[i, j]),
                            node_exprs[i]))
                    else:
                        covered += 1
                        a, b, c, d = snap.affine
                        parts.append(affine_apply(snap.op, node_exprs[i], a, b, c, d))
            out_exprs.append(add(*parts))
        node_exprs = out_exprs

    formula = SymbolicFormula(simplify(node_exprs[0]), net.widths[0])
    preds = formula.evaluate(X)
    net_out = net.predict(X)
    fidelity = float(np.sqrt(np.mean((preds - net_out) ** 2)))
    coverage = covered / active if active else 1.0
    return ExtractionResult(formula, coverage, flagged, fidelity, edge_snaps)
