"""Genetic-programming symbolic optimizer: evolves expression trees over
the operator library with subtree crossover and point/subtree mutation,
fitness = R² - simplicity_weight * complexity, tournament selection with
elitism.  Fully deterministic given the config seed."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .operators import DEFAULT_LIBRARY
from .symbolic import BinOp, Const, Expr, SymbolicFormula, Unary, Var, complexity

__all__ = ["GpConfig", "GpResult", "gp_search"]

_BINARY = ("+", "-", "*", "/")


@dataclass
class GpConfig:
    population: int = 1000
    generations: int = 100
    mutation_rate: float = 0.1
    crossover_rate: float = 0.7
    max_depth: int = 6
    simplicity_weight: float = 0.001
    seed: int = 0
    tournament_size: int = 5
    library: tuple = tuple(DEFAULT_LIBRARY)

    def __post_init__(self):
        if self.population < 2:
            raise ConfigError("GP population must be >= 2")
        for name in ("mutation_rate", "crossover_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"GP {name} must lie in [0, 1]")
        if self.generations < 1 or self.max_depth < 1:
            raise ConfigError("GP generations and max_depth must be >= 1")


@dataclass
class GpResult:
    formula: SymbolicFormula
    fitness: float
    r2: float
    trace: list = field(default_factory=list)


# -- tree helpers -----------------------------------------------------------

def _depth(e: Expr) -> int:
    if isinstance(e, (Const, Var)):
        return 1
    if isinstance(e, Unary):
        return 1 + _depth(e.child)
    return 1 + max(_depth(e.left), _depth(e.right))


def _count(e: Expr) -> int:
    if isinstance(e, (Const, Var)):
        return 1
    if isinstance(e, Unary):
        return 1 + _count(e.child)
    return 1 + _count(e.left) + _count(e.right)


def _get(e: Expr, idx: int):
    """Preorder node lookup."""
    stack = [e]
    k = 0
    while stack:
        node = stack.pop(0)
        if k == idx:
            return node
        k += 1
        if isinstance(node, Unary):
            stack.insert(0, node.child)
        elif isinstance(node, BinOp):
            stack.insert(0, node.right)
            stack.insert(0, node.left)
    raise IndexError(idx)


def _replace(e: Expr, idx: int, sub: Expr):
    counter = [0]

    def walk(node):
        if counter[0] == idx:
            counter[0] += 1
            return sub, True
        counter[0] += 1
        if isinstance(node, Unary):
            child, done = walk(node.child)
            return (Unary(node.op, child), done)
        if isinstance(node, BinOp):
            left, done = walk(node.left)
            if done:
                return BinOp(node.op, left, node.right), True
            right, done = walk(node.right)
            return BinOp(node.op, left, right), done
        return node, False

    out, _ = walk(e)
    return out


def _random_terminal(rng, n_inputs):
    if rng.random() < 0.6:
        return Var(int(rng.integers(n_inputs)))
    return Const(float(rng.uniform(-10.0, 10.0)))


def _random_tree(rng, depth, n_inputs, library, full):
    if depth <= 1 or (not full and rng.random() < 0.3):
        return _random_terminal(rng, n_inputs)
    if rng.random() < 0.7:
        op = _BINARY[int(rng.integers(len(_BINARY)))]
        return BinOp(op, _random_tree(rng, depth - 1, n_inputs, library, full),
                     _random_tree(rng, depth - 1, n_inputs, library, full))
    name = library[int(rng.integers(len(library)))]
    return Unary(name, _random_tree(rng, depth - 1, n_inputs, library, full))


def _point_mutate(rng, node, n_inputs, library):
    if isinstance(node, Const):
        if rng.random() < 0.5:
            return Const(node.value + float(rng.normal(0.0, 0.3)))
        return Const(float(rng.uniform(-10.0, 10.0)))
    if isinstance(node, Var):
        return Var(int(rng.integers(n_inputs)))
    if isinstance(node, Unary):
        return Unary(library[int(rng.integers(len(library)))], node.child)
    return BinOp(_BINARY[int(rng.integers(len(_BINARY)))], node.left, node.right)


# -- search -------------------------------------------------------------------

def gp_search(X, y, config: GpConfig) -> GpResult:
    """Evolve a formula for y ~ f(X).  Individuals whose evaluation is
    non-finite receive fitness -inf and never crash the run; the returned
    individual's fitness is >= every member of the final population."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ConfigError("gp_search: dataset is empty")
    n_inputs = X.shape[1]
    library = tuple(config.library)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_norm = ss_tot if ss_tot > 0 else 1.0

    def assess(tree):
        formula = SymbolicFormula(tree, n_inputs)
        pred = formula.evaluate(X)
        if not np.all(np.isfinite(pred)):
            return -np.inf, -np.inf
        r2 = 1.0 - float(np.sum((pred - y) ** 2)) / ss_norm
        return r2 - config.simplicity_weight * complexity(formula), r2

    # ramped half-and-half over small depths
    pop = []
    for i in range(config.population):
        depth = 1 + (i % 3) + 1
        pop.append(_random_tree(rng, depth, n_inputs, library, full=(i % 2 == 0)))
    scored = [assess(t) for t in pop]
    fits = [s[0] for s in scored]

    def tournament():
        idx = rng.integers(config.population, size=config.tournament_size)
        best = int(idx[0])
        for k in idx[1:]:
            if fits[int(k)] > fits[best]:
                best = int(k)
        return pop[best]

    best_i = int(np.argmax(fits))
    best_tree, best_fit, best_r2 = pop[best_i], fits[best_i], scored[best_i][1]
    trace = [best_fit]

    for _ in range(config.generations):
        elite_i = int(np.argmax(fits))
        next_pop = [pop[elite_i]]
        while len(next_pop) < config.population:
            parent = tournament()
            child = parent
            if rng.random() < config.crossover_rate:
                donor = tournament()
                at = int(rng.integers(_count(child)))
                graft = _get(donor, int(rng.integers(_count(donor))))
                child = _replace(child, at, graft)
            if rng.random() < config.mutation_rate:
                at = int(rng.integers(_count(child)))
                if rng.random() < 0.5:
                    child = _replace(child, at, _point_mutate(rng, _get(child, at),
                                                              n_inputs, library))
                else:
                    child = _replace(child, at,
                                     _random_tree(rng, 3, n_inputs, library, False))
            if _depth(child) > config.max_depth:
                child = parent
            next_pop.append(child)
        pop = next_pop
        scored = [assess(t) for t in pop]
        fits = [s[0] for s in scored]
        gen_best = int(np.argmax(fits))
        if fits[gen_best] > best_fit:
            best_tree, best_fit, best_r2 = pop[gen_best], fits[gen_best], scored[gen_best][1]
        trace.append(fits[gen_best])

    return GpResult(SymbolicFormula(best_tree, n_inputs), best_fit, best_r2, trace)
