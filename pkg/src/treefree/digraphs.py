"""Simple digraphs, their operad composition, and the walk trees they generate."""

from __future__ import annotations

import bisect
import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import IncompatibleAlphabetError, InvalidLetterError, InvalidTreeError
from .trees import TreeSpec


@dataclass(frozen=True)
class Digraph:
    N: int
    edges: tuple  # sorted (i, j) pairs

    def __init__(self, N: int, edges: Iterable = ()):
        N = int(N)
        es = set()
        for e in edges:
            i, j = (int(x) for x in e)
            if not (1 <= i <= N and 1 <= j <= N):
                raise InvalidLetterError(f"edge ({i},{j}) outside [1..{N}]")
            if i == j:
                raise InvalidTreeError(f"self-loop at {i}; digraphs must be irreflexive")
            es.add((i, j))
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "edges", tuple(sorted(es)))
        out = {i: [] for i in range(1, N + 1)}
        for i, j in self.edges:
            out[i].append(j)
        object.__setattr__(self, "_out", {i: tuple(v) for i, v in out.items()})

    def has_edge(self, i: int, j: int) -> bool:
        k = bisect.bisect_left(self.edges, (i, j))
        return k < len(self.edges) and self.edges[k] == (i, j)

    def out_neighbours(self, i: int) -> tuple:
        return self._out[i]

    def to_json(self) -> dict:
        return {"N": self.N, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, obj: dict) -> "Digraph":
        try:
            return cls(int(obj["N"]), [tuple(e) for e in obj.get("edges", [])])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidTreeError(f"bad digraph JSON: {exc}") from None

    def induced(self, keep: Sequence[int]) -> "Digraph":
        """Sub-digraph on ``keep``, relabelled in increasing order."""
        keep = sorted(set(keep))
        pos = {v: k + 1 for k, v in enumerate(keep)}
        return Digraph(len(keep), [(pos[i], pos[j]) for i, j in self.edges if i in pos and j in pos])


def complete(N: int) -> Digraph:
    return Digraph(N, [(i, j) for i in range(1, N + 1) for j in range(1, N + 1) if i != j])


def edgeless(N: int) -> Digraph:
    return Digraph(N, [])


def increasing(N: int) -> Digraph:
    """Edges i -> j for i < j; its walk tree is the monotone tree."""
    return Digraph(N, [(i, j) for i in range(1, N + 1) for j in range(i + 1, N + 1)])


def cyclic_regular(N: int, d: int) -> Digraph:
    """Vertex j points to the d vertices after it, cyclically."""
    if not 0 <= d < N:
        raise InvalidTreeError(f"out-degree {d} impossible on {N} vertices")
    return Digraph(N, [(j, (j - 1 + k) % N + 1) for j in range(1, N + 1) for k in range(1, d + 1)])


def random_digraph(N: int, rng: random.Random, p: float = 0.5) -> Digraph:
    return Digraph(N, [(i, j) for i, j in itertools.permutations(range(1, N + 1), 2) if rng.random() < p])


def compose_digraph(outer: Digraph, inners: Sequence[Digraph]) -> Digraph:
    """Substitute ``inners[j-1]`` for vertex j; outer edges become complete bipartite links."""
    if len(inners) != outer.N:
        raise IncompatibleAlphabetError(f"outer digraph has {outer.N} vertices, got {len(inners)} inners")
    offsets = list(itertools.accumulate([0] + [g.N for g in inners]))
    edges = []
    for j, g in enumerate(inners):
        edges.extend((offsets[j] + a, offsets[j] + b) for a, b in g.edges)
    for i, j in outer.edges:
        for a in range(1, inners[i - 1].N + 1):
            for b in range(1, inners[j - 1].N + 1):
                edges.append((offsets[i - 1] + a, offsets[j - 1] + b))
    return Digraph(offsets[-1], edges)


@dataclass(frozen=True)
class Walk(TreeSpec):
    """Words j1...jl such that each j_{i+1} -> j_i is an edge."""

    digraph: Digraph
    kind = "walk"

    @property
    def N(self):
        return self.digraph.N

    def _member(self, s):
        g = self.digraph
        return all(g.has_edge(s[i + 1], s[i]) for i in range(len(s) - 1))


def walk_tree(g: Digraph) -> Walk:
    return Walk(g)


@dataclass(frozen=True)
class Regular(TreeSpec):
    """A tree whose root has n children and every other vertex has d.

    Realised as walks on the cyclic digraph over max(n, d+1) vertices, keeping
    only words whose root letter is at most n.
    """

    n: int
    d: int
    kind = "regular"

    def __post_init__(self):
        if self.n < 1 or self.d < 0:
            raise InvalidTreeError(f"regular tree needs n >= 1 and d >= 0, got ({self.n},{self.d})")
        object.__setattr__(self, "_walk", Walk(cyclic_regular(max(self.n, self.d + 1), self.d)))

    @property
    def N(self):
        return max(self.n, self.d + 1)

    def _member(self, s):
        if s and s[-1] > self.n:
            return False
        return self._walk._member(s)
