"""Named unary operator library shared by symbolic snapping, GP search,
and symbolically locked network edges.

Each operator carries a raw evaluation, a guarded evaluation (clamps the
argument into the operator's domain so training never sees NaN), the
derivative of the guarded form, and a small complexity weight used only
to break snapping ties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import numerics
from .errors import ConfigError

_EPS = 1e-12
_EXP_CAP = 60.0


def _silu_like(x):
    return x / (1.0 + np.exp(-np.clip(x, -_EXP_CAP, _EXP_CAP)))


def _gauss(x):
    return (2.0 / np.sqrt(np.pi)) * np.exp(-np.clip(x * x, 0.0, _EXP_CAP * 2))


@dataclass(frozen=True)
class Operator:
    name: str
    fn: Callable
    deriv: Callable
    domain: Callable
    complexity_weight: int
    guard: Callable = field(default=None, repr=False)

    def eval(self, x):
        """Raw evaluation; may return non-finite outside the domain."""
        with np.errstate(all="ignore"):
            return self.fn(np.asarray(x, dtype=float))

    def eval_guarded(self, x):
        """Evaluation with the argument clamped into the domain."""
        x = np.asarray(x, dtype=float)
        if self.guard is not None:
            x = self.guard(x)
        with np.errstate(all="ignore"):
            return self.fn(x)

    def deriv_guarded(self, x):
        """Derivative of the guarded form (zero where the guard clips)."""
        x = np.asarray(x, dtype=float)
        if self.guard is not None:
            clipped = self.guard(x)
            with np.errstate(all="ignore"):
                d = self.deriv(clipped)
            return np.where(x == clipped, d, 0.0)
        with np.errstate(all="ignore"):
            return self.deriv(x)


def _op(name, fn, deriv, weight, domain=None, guard=None):
    return Operator(
        name=name,
        fn=fn,
        deriv=deriv,
        domain=domain if domain is not None else (lambda x: np.ones(np.shape(x), dtype=bool)),
        complexity_weight=weight,
        guard=guard,
    )


_POSITIVE = lambda x: np.asarray(x) > 0
_NONNEG = lambda x: np.asarray(x) >= 0
_NONZERO = lambda x: np.abs(np.asarray(x)) > _EPS

_guard_pos = lambda x: np.maximum(x, _EPS)
_guard_nonneg = lambda x: np.maximum(x, 0.0)
_guard_nonzero = lambda x: np.where(np.abs(x) < _EPS, np.where(x < 0, -_EPS, _EPS), x)
_guard_exp = lambda x: np.clip(x, -_EXP_CAP, _EXP_CAP)

_LIBRARY = [
    _op("x", lambda x: x, lambda x: np.ones_like(x), 1),
    _op("x^2", lambda x: x * x, lambda x: 2.0 * x, 2),
    _op("sqrt", np.sqrt, lambda x: 0.5 / np.sqrt(np.maximum(x, _EPS)), 2,
        domain=_NONNEG, guard=_guard_nonneg),
    _op("1/x", lambda x: 1.0 / x, lambda x: -1.0 / (x * x), 2,
        domain=_NONZERO, guard=_guard_nonzero),
    _op("sin", np.sin, np.cos, 3),
    _op("exp", lambda x: np.exp(x), lambda x: np.exp(x), 3, guard=_guard_exp),
    _op("log", np.log, lambda x: 1.0 / x, 3, domain=_POSITIVE, guard=_guard_pos),
    _op("1/sqrt(x)", lambda x: 1.0 / np.sqrt(x), lambda x: -0.5 * x ** -1.5, 3,
        domain=_POSITIVE, guard=_guard_pos),
    _op("erf", numerics.erf, _gauss, 4),
    _op("erfc", numerics.erfc, lambda x: -_gauss(x), 4),
]

DEFAULT_LIBRARY = {op.name: op for op in _LIBRARY}

# Per-case snapping sets: the steady case uses the base operator set, the
# transient case adds the error functions and reciprocal roots, the dynamic
# case is restricted to the periodic-friendly trio.
CASE1_OPS = ["x", "x^2", "sin", "exp", "log", "sqrt"]
CASE2_OPS = list(DEFAULT_LIBRARY)
CASE3_OPS = ["x", "sin", "exp"]


def get_operator(name: str) -> Operator:
    try:
        return DEFAULT_LIBRARY[name]
    except KeyError:
        known = ", ".join(sorted(DEFAULT_LIBRARY))
        raise ConfigError(f"unknown operator {name!r}; library contains: {known}") from None


def silu(x):
    """The smooth base activation x * sigmoid(x) used by unlocked edges."""
    return _silu_like(np.asarray(x, dtype=float))


def silu_deriv(x):
    x = np.asarray(x, dtype=float)
    s = 1.0 / (1.0 + np.exp(-np.clip(x, -_EXP_CAP, _EXP_CAP)))
    return s * (1.0 + x * (1.0 - s))
