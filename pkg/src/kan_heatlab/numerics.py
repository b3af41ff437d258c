"""Numeric bedrock: error functions, B-spline bases, dense least squares.

Everything here is a pure function of its inputs and safe to call from
any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "erf",
    "erfc",
    "KnotGrid",
    "bspline_basis",
    "bspline_design",
    "LstsqResult",
    "solve_least_squares",
]

_TWO_OVER_SQRT_PI = 2.0 / np.sqrt(np.pi)

# Maclaurin coefficients of erf(x)*sqrt(pi)/2 in t = x^2:
# erf(x) = 2/sqrt(pi) * x * sum_n c_n t^n,  c_n = (-1)^n / (n! (2n+1)).
_SERIES_TERMS = 52
_SERIES_COEFFS = np.empty(_SERIES_TERMS)
_fact = 1.0
for _n in range(_SERIES_TERMS):
    if _n > 0:
        _fact *= _n
    _SERIES_COEFFS[_n] = (-1.0) ** _n / (_fact * (2 * _n + 1))
del _fact, _n

_CF_ITERS = 64
_SERIES_CUTOFF = 3.0


def _erf_series(x: np.ndarray) -> np.ndarray:
    # Horner in t = x^2; accurate to ~1e-13 absolute for |x| <= 3.
    t = x * x
    s = np.zeros_like(x)
    for c in _SERIES_COEFFS[::-1]:
        s = s * t + c
    return _TWO_OVER_SQRT_PI * x * s


def _erfc_cf(x: np.ndarray) -> np.ndarray:
    # Modified Lentz on the DLMF 7.9.1 continued fraction, x > 0 only:
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
    tiny = 1e-300
    f = np.where(x == 0.0, tiny, x).astype(float)
    c = f.copy()
    d = np.zeros_like(f)
    for m in range(1, _CF_ITERS + 1):
        a_m = 0.5 * m
        d = 1.0 / (x + a_m * d)
        c = x + a_m / c
        f = f * c * d
    return np.exp(-x * x) / np.sqrt(np.pi) / f


def erf(x):
    """Error function, |error| <= 1e-10 (in practice ~1e-13).

    Maclaurin series for |x| <= 3, complementary continued fraction
    beyond.  Odd symmetry holds exactly by construction.  Accepts
    scalars or arrays; raises DomainError on non-finite input.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("erf: input must be finite")
    a = np.abs(arr)
    out = np.where(a <= _SERIES_CUTOFF, _erf_series(a), 1.0 - _erfc_cf(np.maximum(a, _SERIES_CUTOFF)))
    out = np.sign(arr) * out
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def erfc(x):
    """Complementary error function 1 - erf(x), cancellation-safe for large x."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("erfc: input must be finite")
    a = np.abs(arr)
    tail = _erfc_cf(np.maximum(a, _SERIES_CUTOFF))
    body = 1.0 - _erf_series(a)
    pos = np.where(a <= _SERIES_CUTOFF, body, tail)
    out = np.where(arr >= 0.0, pos, 2.0 - pos)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class KnotGrid:
    """Uniformly extended knot vector for B-splines of degree `order`.

    knots has length intervals + 2*order + 1 and is strictly increasing;
    the spline domain is [knots[order], knots[-order-1]] and the basis
    has intervals + order members.
    """

    knots: np.ndarray
    order: int
    intervals: int

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        if self.order < 1 or self.intervals < 1:
            raise ValueError("KnotGrid requires order >= 1 and intervals >= 1")
        expected = self.intervals + 2 * self.order + 1
        if knots.shape != (expected,):
            raise ValueError(f"KnotGrid expects {expected} knots, got {knots.shape}")
        if not np.all(np.diff(knots) > 0):
            raise ValueError("KnotGrid knots must be strictly increasing")

    @classmethod
    def uniform(cls, lo: float, hi: float, intervals: int, order: int) -> "KnotGrid":
        if not hi > lo:
            raise ValueError("KnotGrid.uniform requires hi > lo")
        h = (hi - lo) / intervals
        knots = lo + h * np.arange(-order, intervals + order + 1)
        return cls(knots, order, intervals)

    @property
    def lo(self) -> float:
        return float(self.knots[self.order])

    @property
    def hi(self) -> float:
        return float(self.knots[-self.order - 1])

    @property
    def size(self) -> int:
        """Number of basis functions (= intervals + order)."""
        return self.intervals + self.order


def _basis_stack(knots: np.ndarray, degree: int, x: np.ndarray, levels: int):
    """Cox-de Boor recursion over the trailing knot axis.

    knots: (..., K); x broadcastable to knots[..., 0].  Returns the basis
    of the requested degree, shape (..., K - degree - 1).  `levels` is the
    degree to stop at (use degree for values, degree-1 for derivatives).
    """
    t = knots
    xx = np.asarray(x, dtype=float)[..., None]
    hi = t[..., t.shape[-1] - degree - 1][..., None]
    b = ((xx >= t[..., :-1]) & (xx < t[..., 1:])).astype(float)
    # Close the right end of the domain: x == hi lands in the last
    # in-domain interval instead of the (out-of-domain) extension.
    at_hi = (xx >= hi)[..., 0]
    if np.any(at_hi):
        b = np.where(at_hi[..., None], 0.0, b)
        idx = t.shape[-1] - degree - 2
        b[..., idx] = np.where(at_hi, 1.0, b[..., idx])
    for d in range(1, levels + 1):
        left = (xx - t[..., : -(d + 1)]) / (t[..., d:-1] - t[..., : -(d + 1)])
        right = (t[..., d + 1 :] - xx) / (t[..., d + 1 :] - t[..., 1:-d])
        b = left * b[..., :-1] + right * b[..., 1:]
    return b


def bspline_design(knots: np.ndarray, degree: int, x, with_deriv: bool = False):
    """Evaluate all degree-`degree` B-splines on `knots` at `x`.

    Vectorized over arbitrary leading axes of both arguments (they must
    broadcast).  Returns (..., n_basis) values, plus derivatives when
    with_deriv is set.  No domain checking; callers clamp first.
    """
    if not with_deriv:
        return _basis_stack(np.asarray(knots, float), degree, x, degree)
    t = np.asarray(knots, dtype=float)
    b_low = _basis_stack(t, degree, x, degree - 1)
    left = (np.asarray(x, float)[..., None] - t[..., : -(degree + 1)]) / (
        t[..., degree:-1] - t[..., : -(degree + 1)]
    )
    right = (t[..., degree + 1 :] - np.asarray(x, float)[..., None]) / (
        t[..., degree + 1 :] - t[..., 1:-degree]
    )
    values = left * b_low[..., :-1] + right * b_low[..., 1:]
    dleft = degree / (t[..., degree:-1] - t[..., : -(degree + 1)])
    dright = degree / (t[..., degree + 1 :] - t[..., 1:-degree])
    derivs = dleft * b_low[..., :-1] - dright * b_low[..., 1:]
    return values, derivs


def bspline_basis(grid: KnotGrid, x):
    """Basis vector (length G + k) at x, which must lie inside the grid domain."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < grid.lo) or np.any(arr > grid.hi):
        raise DomainError(
            f"bspline_basis: x outside grid domain [{grid.lo}, {grid.hi}]"
        )
    out = bspline_design(grid.knots, grid.order, arr)
    return out


@dataclass(frozen=True)
class LstsqResult:
    coeffs: np.ndarray
    rank: int
    ridge_used: bool


def solve_least_squares(design: np.ndarray, target: np.ndarray) -> LstsqResult:
    """Minimize ||design @ c - target||^2.

    Rank-deficient systems fall back to a ridge solve with damping 1e-8,
    flagged in the result.
    """
    a = np.asarray(design, dtype=float)
    b = np.asarray(target, dtype=float)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise ValueError("solve_least_squares: design must be m x n with m >= n")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DomainError("solve_least_squares: non-finite entries")
    coeffs, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < a.shape[1]:
        damping = 1e-8
        gram = a.T @ a + damping * np.eye(a.shape[1])
        coeffs = np.linalg.solve(gram, a.T @ b)
        return LstsqResult(coeffs, int(rank), True)
    return LstsqResult(coeffs, int(rank), False)
