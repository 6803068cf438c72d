"""Partition coefficients and moment-cumulant transforms.

Everything here is exact when the inputs are ``Fraction``; floats pass
through unchanged.  The coefficient of a partition depends only on the
partition and on the ball of the tree whose radius is the nesting depth, so
memo keys use that ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .errors import DepthError, OrderError
from .partitions import (
    NCPartition,
    check_n,
    enumerate_nc,
    hom_count,
    quotients,
)
from .trees import FiniteTree

_ALPHA_MEMO: dict = {}


def required_depth(order: int) -> int:
    """Deepest nesting among non-crossing partitions of ``order`` points."""
    return (order + 1) // 2


def _ball(tree: FiniteTree, depth: int) -> FiniteTree:
    if tree.depth < depth:
        raise DepthError(f"need a ball of radius {depth}, got {tree.depth}")
    return tree.restrict(depth)


def alpha(tree: FiniteTree, pi: NCPartition) -> Fraction:
    """The coefficient of ``pi`` in the moment-cumulant formula for ``tree``."""
    check_n(tree)
    if tree.depth < pi.depth:
        raise DepthError(f"partition depth {pi.depth} exceeds tree radius {tree.depth}")
    return _alpha(tree.restrict(max(pi.depth, 1)), pi)


def _alpha(tree: FiniteTree, pi: NCPartition) -> Fraction:
    if len(pi.blocks) <= 1:
        return Fraction(1)
    if not pi.is_irreducible:
        out = Fraction(1)
        for part in pi.irreducible_components():
            out *= _alpha(tree.restrict(max(part.depth, 1)), part)
            if not out:
                break
        return out
    key = (tree.key, pi.rgs)
    hit = _ALPHA_MEMO.get(key)
    if hit is not None:
        return hit
    n = tree.n
    total = Fraction(0)
    for q in quotients(pi):
        if len(q.tau.blocks) == 1:
            continue
        h = hom_count(q.tau, tree)
        if not h:
            continue
        prod = Fraction(h)
        for g in q.groups:
            prod *= _alpha(tree, pi.restrict(g))
            if not prod:
                break
        total += prod
    value = total / (n ** len(pi.blocks) - n)
    _ALPHA_MEMO[key] = value
    return value


def alpha_graph_sum(tree: FiniteTree, pi: NCPartition) -> Fraction:
    """Right-hand side of the defining identity, summed over every quotient.

    Equals ``alpha(tree, pi)`` for every partition; for irreducible ones it
    uses ``alpha`` itself on the fully merged quotient.
    """
    n = check_n(tree)
    tree = _ball(tree, max(pi.depth, 1))
    total = Fraction(0)
    for q in quotients(pi):
        prod = Fraction(hom_count(q.tau, tree))
        for g in q.groups:
            prod *= alpha(tree, pi.restrict(g))
        total += prod
    return total / n ** len(pi.blocks)


# ---------------------------------------------------------------------------
# coefficient tables


@lru_cache(maxsize=256)
def _tables(tree: FiniteTree, ell: int):
    full: dict = {}
    irred: dict = {}
    for pi in enumerate_nc(ell):
        if len(pi.blocks) == 1:
            continue
        a = _alpha(tree.restrict(max(pi.depth, 1)), pi)
        if not a:
            continue
        sizes = tuple(sorted(len(b) for b in pi.blocks))
        full[sizes] = full.get(sizes, Fraction(0)) + a
        if pi.is_irreducible:
            irred[sizes] = irred.get(sizes, Fraction(0)) + a
    return tuple(full.items()), tuple(irred.items())


def coefficient_table(tree: FiniteTree, ell: int, irreducible: bool = False) -> dict:
    """Summed coefficients over partitions of ``ell`` points with more than one block, keyed by block-size multiset."""
    check_n(tree)
    t = _ball(tree, required_depth(ell))
    full, irred = _tables(t, ell)
    return dict(irred if irreducible else full)


@dataclass(frozen=True)
class CumulantVector:
    values: tuple
    flavor: str  # "boolean" or "tfree"

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def kappa(self, ell: int):
        return self.values[ell - 1]


def _seq(x) -> list:
    return list(x.values if isinstance(x, CumulantVector) else x)


def _prod(kappa: list, sizes: tuple):
    out = 1
    for s in sizes:
        out = out * kappa[s - 1]
    return out


def boolean_cumulants(moments: Sequence) -> CumulantVector:
    m = _seq(moments)
    if not m:
        raise OrderError("need at least one moment")
    k = []
    for ell in range(1, len(m) + 1):
        v = m[ell - 1]
        for j in range(1, ell):
            v = v - k[j - 1] * m[ell - j - 1]
        k.append(v)
    return CumulantVector(tuple(k), "boolean")


def moments_from_boolean(kappa: Sequence) -> tuple:
    k = _seq(kappa)
    m = []
    for ell in range(1, len(k) + 1):
        v = k[ell - 1]
        for j in range(1, ell):
            v = v + k[j - 1] * m[ell - j - 1]
        m.append(v)
    return tuple(m)


def moments_from_cumulants(kappa: Sequence, tree: FiniteTree) -> tuple:
    k = _seq(kappa)
    out = []
    for ell in range(1, len(k) + 1):
        v = k[ell - 1]
        for sizes, c in coefficient_table(tree, ell).items():
            v = v + c * _prod(k, sizes)
        out.append(v)
    return tuple(out)


def tfree_cumulants(moments: Sequence, tree: FiniteTree) -> CumulantVector:
    m = _seq(moments)
    if not m:
        raise OrderError("need at least one moment")
    k: list = []
    for ell in range(1, len(m) + 1):
        k.append(0)
        v = m[ell - 1]
        for sizes, c in coefficient_table(tree, ell).items():
            v = v - c * _prod(k, sizes)
        k[-1] = v
    return CumulantVector(tuple(k), "tfree")


def boolean_from_tfree(kappa: Sequence, tree: FiniteTree) -> CumulantVector:
    k = _seq(kappa)
    out = []
    for ell in range(1, len(k) + 1):
        v = k[ell - 1]
        for sizes, c in coefficient_table(tree, ell, irreducible=True).items():
            v = v + c * _prod(k, sizes)
        out.append(v)
    return CumulantVector(tuple(out), "boolean")


# ---------------------------------------------------------------------------
# measure masses


def _closure(pi: NCPartition) -> list:
    """``pi`` and every restriction reachable through quotient groups, smallest first."""
    seen = {pi.rgs: pi}
    stack = [pi]
    while stack:
        p = stack.pop()
        for q in quotients(p):
            if len(q.groups) == 1:
                continue
            for g in q.groups:
                r = p.restrict(g)
                if r.rgs not in seen:
                    seen[r.rgs] = r
                    stack.append(r)
    return sorted(seen.values(), key=lambda p: (p.ell, p.rgs))


def theta_masses(tree: FiniteTree, pi: NCPartition, k_max: int) -> list:
    """Total masses for k = 0..k_max, by the level recursion on sub-partitions."""
    n = check_n(tree)
    tree = _ball(tree, max(pi.depth, 1))
    parts = _closure(pi)
    terms = {}
    for p in parts:
        rows = []
        for q in quotients(p):
            h = hom_count(q.tau, tree)
            if h:
                rows.append((h, tuple(p.restrict(g).rgs for g in q.groups)))
        terms[p.rgs] = (Fraction(1, n ** len(p.blocks)), rows)
    mass = {p.rgs: Fraction(1) for p in parts}
    history = [mass[pi.rgs]]
    for _ in range(k_max):
        new = {}
        for key, (scale, rows) in terms.items():
            tot = 0
            for h, subs in rows:
                tot += h * math.prod(mass[s] for s in subs)
            new[key] = scale * tot
        mass = new
        history.append(mass[pi.rgs])
    return history


def theta_mass(tree: FiniteTree, pi: NCPartition, k: int) -> Fraction:
    if k < 0:
        raise OrderError("k must be non-negative")
    return theta_masses(tree, pi, k)[-1]
