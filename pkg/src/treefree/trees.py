"""Rooted subtrees of the free alternating-string tree and their operad structure.

A vertex is a tuple of 1-based letters.  The leftmost letter is the most
recent one, so the parent of ``s`` is ``s[1:]`` and a child of ``s`` has the
form ``(j,) + s`` with ``j != s[0]``.  The root is the empty tuple.

Trees are described symbolically by :class:`TreeSpec` objects and only ever
materialised as finite balls through :func:`truncate`.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

from .errors import (
    DepthError,
    IncompatibleAlphabetError,
    InvalidLetterError,
    InvalidPermutationError,
    InvalidTreeError,
)

Word = tuple


def as_word(s) -> Word:
    """Coerce ``"1231"``, ``[1, 2]`` or ``(1, 2)`` into a tuple of ints."""
    if isinstance(s, str):
        s = s.strip()
        if not s:
            return ()
        if "," in s or "." in s:
            return tuple(int(x) for x in s.replace(".", ",").split(",") if x)
        return tuple(int(ch) for ch in s)
    return tuple(int(x) for x in s)


def format_word(s: Sequence[int]) -> str:
    if all(0 <= x <= 9 for x in s):
        return "".join(str(x) for x in s)
    return ",".join(str(x) for x in s)


def is_alternating(s: Sequence[int]) -> bool:
    return all(s[i] != s[i + 1] for i in range(len(s) - 1))


def reduce_string(s, N: int | None = None) -> Word:
    """Collapse runs of a repeated letter, e.g. ``112331 -> 1231``."""
    s = as_word(s)
    for x in s:
        if x < 1 or (N is not None and x > N):
            raise InvalidLetterError(f"letter {x} outside [1..{N if N else 'N'}]")
    out = []
    for x in s:
        if not out or out[-1] != x:
            out.append(x)
    return tuple(out)


def _sort_key(s):
    return (len(s), s)


# ---------------------------------------------------------------------------
# finite balls


@dataclass(frozen=True)
class FiniteTree:
    """The closed ball of radius ``depth`` around the root of some tree.

    ``exhausted`` records whether the underlying tree has no vertex of length
    ``depth + 1``, in which case the ball is the whole tree.
    """

    N: int
    depth: int
    vertices: tuple
    exhausted: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_set", frozenset(self.vertices))

    def __contains__(self, s) -> bool:
        s = tuple(s)
        if len(s) > self.depth:
            raise DepthError(
                f"string of length {len(s)} queried on a ball of radius {self.depth}"
            )
        return s in self._set

    def __iter__(self):
        return iter(self.vertices)

    def __len__(self):
        return len(self.vertices)

    def has(self, s) -> bool:
        """Membership without the depth guard (False beyond the radius)."""
        return tuple(s) in self._set

    def children(self, s) -> tuple:
        s = tuple(s)
        if len(s) >= self.depth:
            raise DepthError(f"children of a length-{len(s)} vertex need radius > {len(s)}")
        head = s[0] if s else None
        return tuple(
            j for j in range(1, self.N + 1) if j != head and ((j,) + s) in self._set
        )

    @property
    def root_letters(self) -> tuple:
        return tuple(s[0] for s in self.vertices if len(s) == 1)

    @property
    def n(self) -> int:
        return len(self.root_letters)

    def level(self, k: int) -> tuple:
        return tuple(s for s in self.vertices if len(s) == k)

    def restrict(self, depth: int) -> "FiniteTree":
        if depth > self.depth:
            raise DepthError(f"cannot enlarge a radius-{self.depth} ball to {depth}")
        if depth == self.depth:
            return self
        verts = tuple(s for s in self.vertices if len(s) <= depth)
        return FiniteTree(self.N, depth, verts, exhausted=not any(len(s) == depth + 1 for s in self.vertices))

    @property
    def key(self):
        return (self.N, self.depth, self.vertices)

    def max_up_degree(self) -> int:
        """Largest number of children over vertices strictly inside the ball."""
        best = 0
        for s in self.vertices:
            if len(s) < self.depth:
                best = max(best, len(self.children(s)))
        return best

    def as_strings(self) -> list:
        return [format_word(s) for s in self.vertices]


# ---------------------------------------------------------------------------
# symbolic specifications


class TreeSpec:
    """Base class.  Subclasses implement ``_member`` for alternating words."""

    N: int
    kind = "abstract"

    def _member(self, s: Word) -> bool:
        raise NotImplementedError

    def contains(self, s) -> bool:
        s = as_word(s)
        for x in s:
            if not 1 <= x <= self.N:
                raise InvalidLetterError(f"letter {x} outside [1..{self.N}]")
        return is_alternating(s) and self._member(s)

    def __contains__(self, s) -> bool:
        return self.contains(s)

    def truncate(self, depth: int) -> FiniteTree:
        return truncate(self, depth)

    def __call__(self, *inners: "TreeSpec") -> "Composite":
        return compose(self, list(inners))


@dataclass(frozen=True)
class Free(TreeSpec):
    N: int
    kind = "free"

    def _member(self, s):
        return True


@dataclass(frozen=True)
class Bool(TreeSpec):
    N: int
    kind = "bool"

    def _member(self, s):
        return len(s) <= 1


@dataclass(frozen=True)
class Mono(TreeSpec):
    """Strictly decreasing words (most recent letter largest)."""

    N: int
    kind = "mono"

    def _member(self, s):
        return all(s[i] > s[i + 1] for i in range(len(s) - 1))


@dataclass(frozen=True)
class AntiMono(TreeSpec):
    N: int
    kind = "antimono"

    def _member(self, s):
        return all(s[i] < s[i + 1] for i in range(len(s) - 1))


@dataclass(frozen=True)
class Orth(TreeSpec):
    """The three-vertex tree {root, 1, 21}."""

    N: int = 2
    kind = "orth"

    def _member(self, s):
        return s in ((), (1,), (2, 1))


@dataclass(frozen=True)
class Sub(TreeSpec):
    """Alternating words on {1, 2} that are empty or end in 1."""

    N: int = 2
    kind = "sub"

    def _member(self, s):
        return not s or s[-1] == 1


@dataclass(frozen=True)
class Explicit(TreeSpec):
    N: int
    vertices: frozenset

    kind = "explicit"

    def __init__(self, N: int, vertices: Iterable):
        verts = frozenset(as_word(v) for v in vertices) | {()}
        for s in verts:
            for x in s:
                if not 1 <= x <= N:
                    raise InvalidLetterError(f"letter {x} outside [1..{N}]")
            if not is_alternating(s):
                raise InvalidTreeError(f"vertex {format_word(s)} is not alternating")
            if s and s[1:] not in verts:
                raise InvalidTreeError(
                    f"vertex {format_word(s)} present but its parent {format_word(s[1:])} is not"
                )
        object.__setattr__(self, "N", int(N))
        object.__setattr__(self, "vertices", verts)

    def _member(self, s):
        return s in self.vertices

    def __repr__(self):
        return f"Explicit(N={self.N}, vertices={sorted(map(format_word, self.vertices), key=lambda w: (len(w), w))})"


IDENTITY = Free(1)


@dataclass(frozen=True)
class Composite(TreeSpec):
    outer: TreeSpec
    inners: tuple
    kind = "composite"

    def __post_init__(self):
        offsets = []
        total = 0
        for t in self.inners:
            offsets.append(total)
            total += t.N
        object.__setattr__(self, "_offsets", tuple(offsets))
        object.__setattr__(self, "_N", total)
        owner = []
        for j, t in enumerate(self.inners, start=1):
            owner.extend((j, i) for i in range(1, t.N + 1))
        object.__setattr__(self, "_owner", tuple(owner))

    @property
    def N(self):
        return self._N

    def split(self, s: Word):
        """Maximal runs of ``s`` by owning inner tree, as (j, inner word) pairs."""
        runs = []
        for x in s:
            j, i = self._owner[x - 1]
            if runs and runs[-1][0] == j:
                runs[-1][1].append(i)
            else:
                runs.append((j, [i]))
        return [(j, tuple(w)) for j, w in runs]

    def _member(self, s):
        runs = self.split(s)
        outer_word = tuple(j for j, _ in runs)
        if not self.outer._member(outer_word):
            return False
        return all(is_alternating(w) and self.inners[j - 1]._member(w) for j, w in runs)


@dataclass(frozen=True)
class Permuted(TreeSpec):
    """``T_sigma``: the image of ``base`` under ``sigma^{-1}``.

    ``sigma[i - 1]`` is the image of letter ``i``.
    """

    base: TreeSpec
    sigma: tuple
    kind = "permuted"

    def __post_init__(self):
        sig = tuple(int(x) for x in self.sigma)
        if sorted(sig) != list(range(1, self.base.N + 1)):
            raise InvalidPermutationError(f"{sig} is not a permutation of [1..{self.base.N}]")
        object.__setattr__(self, "sigma", sig)

    @property
    def N(self):
        return self.base.N

    def _member(self, s):
        return self.base._member(tuple(self.sigma[x - 1] for x in s))


def compose(outer: TreeSpec, inners: Sequence[TreeSpec]) -> Composite:
    inners = tuple(inners)
    if len(inners) != outer.N:
        raise IncompatibleAlphabetError(
            f"outer tree has {outer.N} letters but {len(inners)} inner trees were given"
        )
    return Composite(outer, inners)


def permute(spec: TreeSpec, sigma: Sequence[int]) -> Permuted:
    if len(sigma) != spec.N:
        raise InvalidPermutationError(f"permutation of length {len(sigma)} for N={spec.N}")
    return Permuted(spec, tuple(sigma))


@lru_cache(maxsize=512)
def _truncate_cached(spec: TreeSpec, depth: int) -> FiniteTree:
    levels = [[()]]
    N = spec.N
    for _ in range(depth + 1):
        nxt = []
        for s in levels[-1]:
            head = s[0] if s else None
            for j in range(1, N + 1):
                if j != head:
                    t = (j,) + s
                    if spec._member(t):
                        nxt.append(t)
        levels.append(nxt)
    beyond = levels.pop()
    verts = sorted((s for lev in levels for s in lev), key=_sort_key)
    if not spec._member(()):
        raise InvalidTreeError("tree does not contain the root")
    return FiniteTree(N, depth, tuple(verts), exhausted=not beyond)


def truncate(spec: TreeSpec, depth: int) -> FiniteTree:
    """Closed ball of radius ``depth``; vertices in length-lexicographic order."""
    if depth < 0:
        raise DepthError("depth must be non-negative")
    return _truncate_cached(spec, int(depth))


def ball_agreement_depth(a: TreeSpec, b: TreeSpec, max_depth: int):
    """Largest radius at which the balls agree, or ``math.inf`` if they agree up to ``max_depth``."""
    if a.N != b.N:
        raise IncompatibleAlphabetError(f"alphabets differ: {a.N} vs {b.N}")
    ta, tb = truncate(a, max_depth), truncate(b, max_depth)
    for ell in range(max_depth + 1):
        if set(ta.level(ell)) != set(tb.level(ell)):
            return ell - 1
    return math.inf


def tree_distance(a: TreeSpec, b: TreeSpec, max_depth: int) -> float:
    ell = ball_agreement_depth(a, b, max_depth)
    return 0.0 if ell == math.inf else math.exp(-ell)


class PushforwardResult(NamedTuple):
    ok: bool
    witness: str | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def pushforward_check(src: TreeSpec, dst: TreeSpec, psi: Sequence[int], depth: int) -> PushforwardResult:
    """Does letterwise ``psi`` map ball(src) bijectively onto ball(dst) restricted to Ran(psi)?"""
    psi = tuple(int(x) for x in psi)
    if len(psi) != src.N:
        raise IncompatibleAlphabetError(f"psi has {len(psi)} entries but source alphabet is {src.N}")
    for x in psi:
        if not 1 <= x <= dst.N:
            raise InvalidLetterError(f"psi value {x} outside [1..{dst.N}]")
    rng = set(psi)
    A = truncate(src, depth)
    image = {}
    for s in A.vertices:
        t = tuple(psi[x - 1] for x in s)
        if not is_alternating(t):
            return PushforwardResult(False, format_word(s), "image not alternating")
        if t in image:
            return PushforwardResult(False, format_word(s), "not injective")
        image[t] = s
    target = {t for t in truncate(dst, depth).vertices if set(t) <= rng}
    extra = sorted(set(image) - target, key=_sort_key)
    if extra:
        return PushforwardResult(False, format_word(image[extra[0]]), "image leaves target")
    missing = sorted(target - set(image), key=_sort_key)
    if missing:
        return PushforwardResult(False, format_word(missing[0]), "target not covered")
    return PushforwardResult(True)


class LetterSubset(TreeSpec):
    """Words of ``base`` using only letters in ``[1..M]``, relabelled as a tree on M letters."""

    kind = "subset"

    def __init__(self, base: TreeSpec, M: int):
        self.base = base
        self.N = int(M)

    def _member(self, s):
        return self.base._member(s)

    def __eq__(self, other):
        return isinstance(other, LetterSubset) and (self.base, self.N) == (other.base, other.N)

    def __hash__(self):
        return hash(("subset", self.base, self.N))

    def __repr__(self):
        return f"LetterSubset({self.base!r}, {self.N})"


def random_tree(N: int, depth: int, rng: random.Random, p: float = 0.6, min_root: int = 1) -> Explicit:
    """Random explicit tree of height at most ``depth``."""
    verts = {()}
    frontier = [()]
    roots = list(range(1, N + 1))
    forced = set(rng.sample(roots, min(min_root, N)))
    for lev in range(depth):
        nxt = []
        for s in frontier:
            head = s[0] if s else None
            for j in range(1, N + 1):
                if j == head:
                    continue
                if (lev == 0 and j in forced) or rng.random() < p:
                    t = (j,) + s
                    verts.add(t)
                    nxt.append(t)
        frontier = nxt
    return Explicit(N, verts)


# ---------------------------------------------------------------------------
# JSON


def spec_to_json(spec: TreeSpec) -> dict:
    from .digraphs import Regular, Walk

    if isinstance(spec, (Free, Bool, Mono, AntiMono)):
        return {"kind": spec.kind, "N": spec.N}
    if isinstance(spec, (Orth, Sub)):
        return {"kind": spec.kind}
    if isinstance(spec, Explicit):
        return {
            "kind": "explicit",
            "N": spec.N,
            "vertices": [list(v) for v in sorted(spec.vertices, key=_sort_key)],
        }
    if isinstance(spec, Walk):
        return {"kind": "walk", "digraph": spec.digraph.to_json()}
    if isinstance(spec, Regular):
        return {"kind": "regular", "n": spec.n, "d": spec.d}
    if isinstance(spec, Composite):
        return {
            "kind": "composite",
            "outer": spec_to_json(spec.outer),
            "inners": [spec_to_json(t) for t in spec.inners],
        }
    if isinstance(spec, Permuted):
        return {"kind": "permuted", "base": spec_to_json(spec.base), "sigma": list(spec.sigma)}
    if isinstance(spec, LetterSubset):
        return {"kind": "subset", "base": spec_to_json(spec.base), "N": spec.N}
    raise InvalidTreeError(f"cannot serialise {spec!r}")


def spec_from_json(obj: dict) -> TreeSpec:
    from .digraphs import Digraph, Regular, Walk

    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidTreeError("tree JSON needs a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "free":
            return Free(int(obj["N"]))
        if kind == "bool":
            return Bool(int(obj["N"]))
        if kind == "mono":
            return Mono(int(obj["N"]))
        if kind == "antimono":
            return AntiMono(int(obj["N"]))
        if kind == "orth":
            return Orth()
        if kind == "sub":
            return Sub()
        if kind == "id":
            return IDENTITY
        if kind == "explicit":
            return Explicit(int(obj["N"]), [tuple(v) for v in obj["vertices"]])
        if kind == "walk":
            return Walk(Digraph.from_json(obj["digraph"]))
        if kind == "regular":
            return Regular(int(obj["n"]), int(obj["d"]))
        if kind == "composite":
            return compose(spec_from_json(obj["outer"]), [spec_from_json(t) for t in obj["inners"]])
        if kind == "permuted":
            base = spec_from_json(obj["base"])
            return permute(base, obj["sigma"])
        if kind == "subset":
            return LetterSubset(spec_from_json(obj["base"]), int(obj["N"]))
    except KeyError as exc:
        raise InvalidTreeError(f"tree kind {kind!r} is missing field {exc}") from None
    raise InvalidTreeError(f"unknown tree kind {kind!r}")
