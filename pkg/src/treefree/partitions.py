"""Non-crossing partitions, their nesting trees, colourings and quotients.

Blocks are indexed from 0 in order of their smallest element.  The nesting
tree has an implicit root above every outer block; ``parent[b] == -1`` marks
an outer block.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

from .errors import DepthError, RootDegreeError, SizeLimitError, ValidationError
from .trees import FiniteTree, is_alternating, reduce_string

MAX_GROUND_SET = 14
MAX_EXTENSION_BLOCKS = 10


class NCPartition:
    """A non-crossing partition of ``{1, ..., ell}``."""

    __slots__ = ("ell", "blocks", "_rgs", "_parent", "_children", "_depth")

    def __init__(self, blocks: Sequence[Sequence[int]], ell: int | None = None, _trusted: bool = False):
        bl = sorted((tuple(sorted(int(x) for x in b)) for b in blocks if len(b)), key=lambda b: b[0])
        if ell is None:
            ell = sum(len(b) for b in bl)
        self.ell = int(ell)
        self.blocks = tuple(bl)
        if not _trusted:
            self._validate()
        self._rgs = None
        self._parent = None
        self._children = None
        self._depth = None

    def _validate(self):
        seen = sorted(x for b in self.blocks for x in b)
        if seen != list(range(1, self.ell + 1)):
            raise ValidationError(f"blocks do not partition [1..{self.ell}]")
        for p, q in itertools.combinations(range(len(self.blocks)), 2):
            B, C = self.blocks[p], self.blocks[q]
            for i1, i2 in itertools.combinations(B, 2):
                if any(i1 < j < i2 for j in C) and any(j < i1 or j > i2 for j in C):
                    raise ValidationError(f"blocks {B} and {C} cross")

    # -- encodings ---------------------------------------------------------

    @classmethod
    def from_rgs(cls, rgs: Sequence[int]) -> "NCPartition":
        groups: dict = {}
        for pos, label in enumerate(rgs, start=1):
            groups.setdefault(label, []).append(pos)
        return cls(list(groups.values()), len(rgs))

    @classmethod
    def from_string(cls, text: str) -> "NCPartition":
        """Accepts a restricted-growth string ``"1,2,1"`` or blocks ``"{1,3}{2}"``."""
        text = text.strip()
        if "{" in text or "[" in text or "|" in text:
            import re

            parts = re.findall(r"[\{\[]([^\}\]]*)[\}\]]", text) if "|" not in text else text.split("|")
            return cls([[int(x) for x in p.replace(" ", ",").split(",") if x.strip()] for p in parts])
        labels = [int(x) for x in text.replace(" ", ",").split(",") if x.strip()]
        return cls.from_rgs(labels)

    @property
    def block_of(self) -> tuple:
        out = [0] * self.ell
        for k, b in enumerate(self.blocks):
            for x in b:
                out[x - 1] = k
        return tuple(out)

    @property
    def rgs(self) -> tuple:
        """Restricted-growth string with labels starting at 1."""
        if self._rgs is None:
            self._rgs = tuple(k + 1 for k in self.block_of)
        return self._rgs

    def __eq__(self, other):
        return isinstance(other, NCPartition) and self.rgs == other.rgs

    def __hash__(self):
        return hash(self.rgs)

    def __len__(self):
        return len(self.blocks)

    def __repr__(self):
        return "NCPartition(" + "".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + ")"

    def to_json(self) -> list:
        return [list(b) for b in self.blocks]

    # -- nesting tree --------------------------------------------------------

    def _build_nesting(self):
        nb = len(self.blocks)
        parent = [-1] * nb
        for v, B in enumerate(self.blocks):
            best = -1
            for w, W in enumerate(self.blocks):
                if W[0] < B[0] and B[-1] < W[-1] and (best < 0 or W[0] > self.blocks[best][0]):
                    best = w
            parent[v] = best
        children = [[] for _ in range(nb)]
        for v, p in enumerate(parent):
            if p >= 0:
                children[p].append(v)
        depth = [0] * nb
        for v in range(nb):  # parents have smaller minima, hence smaller indices
            depth[v] = 1 if parent[v] < 0 else depth[parent[v]] + 1
        self._parent = tuple(parent)
        self._children = tuple(tuple(c) for c in children)
        self._depth = tuple(depth)

    @property
    def parent(self) -> tuple:
        if self._parent is None:
            self._build_nesting()
        return self._parent

    @property
    def children(self) -> tuple:
        if self._children is None:
            self._build_nesting()
        return self._children

    @property
    def depths(self) -> tuple:
        if self._depth is None:
            self._build_nesting()
        return self._depth

    @property
    def depth(self) -> int:
        return max(self.depths, default=0)

    @property
    def outer_blocks(self) -> tuple:
        return tuple(v for v, p in enumerate(self.parent) if p < 0)

    @property
    def inner_count(self) -> int:
        return sum(1 for p in self.parent if p >= 0)

    @property
    def is_interval(self) -> bool:
        return all(b[-1] - b[0] + 1 == len(b) for b in self.blocks)

    @property
    def is_irreducible(self) -> bool:
        return self.ell >= 1 and self.block_of[0] == self.block_of[-1]

    def chain(self, v: int) -> tuple:
        """``v`` followed by every block surrounding it, innermost first."""
        if not 0 <= v < len(self.blocks):
            raise ValidationError(f"no block with index {v}")
        out = [v]
        while self.parent[out[-1]] >= 0:
            out.append(self.parent[out[-1]])
        return tuple(out)

    def subtree_sizes(self) -> tuple:
        size = [1] * len(self.blocks)
        for v in reversed(range(len(self.blocks))):
            p = self.parent[v]
            if p >= 0:
                size[p] += size[v]
        return tuple(size)

    # -- restrictions ------------------------------------------------------

    def restrict(self, block_ids: Sequence[int]) -> "NCPartition":
        """The blocks listed, relabelled order-preservingly onto [1..m]."""
        elems = sorted(x for v in block_ids for x in self.blocks[v])
        pos = {x: k + 1 for k, x in enumerate(elems)}
        return NCPartition([[pos[x] for x in self.blocks[v]] for v in block_ids], len(elems), _trusted=True)

    def irreducible_components(self) -> list:
        """Split into irreducible factors, left to right."""
        out = []
        for v in self.outer_blocks:
            group = [v]
            stack = list(self.children[v])
            while stack:
                w = stack.pop()
                group.append(w)
                stack.extend(self.children[w])
            out.append(self.restrict(sorted(group)))
        return out


def concatenate(parts: Sequence[NCPartition]) -> NCPartition:
    blocks, shift = [], 0
    for p in parts:
        blocks.extend([x + shift for x in b] for b in p.blocks)
        shift += p.ell
    return NCPartition(blocks, shift, _trusted=True)


# ---------------------------------------------------------------------------
# enumeration


def _gen(lo: int, hi: int) -> Iterator[tuple]:
    if lo >= hi:
        yield ()
        return
    yield from _extend((lo,), lo, hi)


def _extend(block: tuple, last: int, hi: int) -> Iterator[tuple]:
    for tail in _gen(last + 1, hi):
        yield (block,) + tail
    for nxt in range(last + 1, hi):
        for gap in _gen(last + 1, nxt):
            for rest in _extend(block + (nxt,), nxt, hi):
                yield rest + gap


@lru_cache(maxsize=None)
def enumerate_nc(ell: int) -> tuple:
    """Every non-crossing partition of [1..ell], sorted by restricted-growth string."""
    if ell < 0:
        raise ValidationError("ground set size must be non-negative")
    if ell > MAX_GROUND_SET:
        raise SizeLimitError(f"enumerating NC({ell}) exceeds the limit of {MAX_GROUND_SET}")
    parts = [NCPartition(b, ell, _trusted=True) for b in _gen(1, ell + 1)]
    parts.sort(key=lambda p: p.rgs)
    return tuple(parts)


def irreducible_nc(ell: int) -> tuple:
    return tuple(p for p in enumerate_nc(ell) if p.is_irreducible)


def interval_partitions(ell: int) -> tuple:
    return tuple(p for p in enumerate_nc(ell) if p.is_interval)


def single_block(ell: int) -> NCPartition:
    return NCPartition([range(1, ell + 1)], ell, _trusted=True)


# ---------------------------------------------------------------------------
# colourings


def _check_depth(pi: NCPartition, tree: FiniteTree):
    if tree.depth < pi.depth:
        raise DepthError(f"partition has depth {pi.depth} but the tree ball has radius {tree.depth}")


def _check_colouring(pi: NCPartition, chi: Sequence[int], tree: FiniteTree):
    if len(chi) != len(pi.blocks):
        raise ValidationError(f"colouring has {len(chi)} entries for {len(pi.blocks)} blocks")
    for c in chi:
        if not 1 <= c <= tree.N:
            raise ValidationError(f"colour {c} outside [1..{tree.N}]")


def chain_string(pi: NCPartition, chi: Sequence[int], v: int) -> tuple:
    return tuple(chi[w] for w in pi.chain(v))


def compatible(pi: NCPartition, chi: Sequence[int], tree: FiniteTree) -> bool:
    _check_depth(pi, tree)
    _check_colouring(pi, chi, tree)
    for v in range(len(pi.blocks)):
        s = chain_string(pi, chi, v)
        if not is_alternating(s) or not tree.has(s):
            return False
    return True


def weakly_compatible(pi: NCPartition, chi: Sequence[int], tree: FiniteTree) -> bool:
    _check_depth(pi, tree)
    _check_colouring(pi, chi, tree)
    return all(tree.has(reduce_string(chain_string(pi, chi, v))) for v in range(len(pi.blocks)))


def chi_components(pi: NCPartition, chi: Sequence[int]) -> list:
    """Connected same-colour pieces of the nesting tree, as sorted tuples of block ids."""
    root = list(range(len(pi.blocks)))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    for v, p in enumerate(pi.parent):
        if p >= 0 and chi[v] == chi[p]:
            root[find(v)] = find(p)
    groups: dict = {}
    for v in range(len(pi.blocks)):
        groups.setdefault(find(v), []).append(v)
    return sorted((tuple(g) for g in groups.values()), key=lambda g: g[0])


def merge_groups(pi: NCPartition, groups: Sequence[Sequence[int]]) -> NCPartition:
    return NCPartition([[x for v in g for x in pi.blocks[v]] for g in groups], pi.ell, _trusted=True)


def quotient_by_colouring(pi: NCPartition, chi: Sequence[int]) -> NCPartition:
    return merge_groups(pi, chi_components(pi, chi))


class Quotient(NamedTuple):
    tau: NCPartition
    groups: tuple  # groups[k] lists the blocks of pi merged into tau.blocks[k]


def quotients(pi: NCPartition) -> list:
    """All quotients, one per subset of nesting-tree edges below the root."""
    inner = [v for v, p in enumerate(pi.parent) if p >= 0]
    out = []
    for mask in range(1 << len(inner)):
        root = list(range(len(pi.blocks)))
        for k, v in enumerate(inner):
            if mask >> k & 1:
                root[v] = root[pi.parent[v]]  # parents precede children
        groups: dict = {}
        for v in range(len(pi.blocks)):
            groups.setdefault(root[v], []).append(v)
        gs = tuple(sorted((tuple(g) for g in groups.values()), key=lambda g: g[0]))
        out.append(Quotient(merge_groups(pi, gs), gs))
    return out


# ---------------------------------------------------------------------------
# counting


def hom_count(pi: NCPartition, tree: FiniteTree) -> int:
    """Level-preserving rooted homomorphisms from the nesting tree of ``pi`` into ``tree``."""
    _check_depth(pi, tree)
    memo: dict = {}

    def ways(v: int, s: tuple) -> int:
        key = (v, s)
        if key in memo:
            return memo[key]
        total = 1
        if pi.children[v]:
            kids = tree.children(s)
            for w in pi.children[v]:
                total *= sum(ways(w, (j,) + s) for j in kids)
                if not total:
                    break
        memo[key] = total
        return total

    roots = tree.root_letters
    total = 1
    for v in pi.outer_blocks:
        total *= sum(ways(v, (r,)) for r in roots)
    return total


def linear_extensions(pi: NCPartition) -> int:
    """Total orders on the blocks extending the nesting order (hook-length formula for forests)."""
    if len(pi.blocks) > MAX_EXTENSION_BLOCKS:
        raise SizeLimitError(f"{len(pi.blocks)} blocks exceeds the limit of {MAX_EXTENSION_BLOCKS}")
    return math.factorial(len(pi.blocks)) // math.prod(pi.subtree_sizes())


def pair_partitions(ell: int) -> tuple:
    return tuple(p for p in enumerate_nc(ell) if all(len(b) == 2 for b in p.blocks))


def require_depth(tree: FiniteTree, depth: int):
    if tree.depth < depth:
        raise DepthError(f"need a ball of radius {depth}, got {tree.depth}")


def check_n(tree: FiniteTree) -> int:
    n = tree.n
    if n < 2:
        raise RootDegreeError(f"the root has {n} children; at least 2 are required")
    return n


__all__ = [
    "NCPartition",
    "concatenate",
    "enumerate_nc",
    "irreducible_nc",
    "interval_partitions",
    "single_block",
    "compatible",
    "weakly_compatible",
    "chi_components",
    "quotient_by_colouring",
    "quotients",
    "Quotient",
    "hom_count",
    "linear_extensions",
    "pair_partitions",
]
