"""Scalar laws as truncated moment sequences, and tree-indexed convolution.

A :class:`ScalarLaw` stores ``m_1 .. m_L``; ``m_0 = 1`` is implicit.  Entries
are either all exact (``int``/``Fraction``) or floats; mixing promotes to
float.

Convolution over a tree sums, over non-crossing partitions and compatible
colourings, the product of Boolean cumulants of the block colours.  The
default route folds that sum into power series attached to tree vertices:

    I_s(x) = sum_{j : js in T} sum_k b_k(mu_j) x^k A_{js}(x)^(k-1)
    A_s(x) = 1 / (1 - I_s(x))

and the moment series is ``A_root``.  A block at nesting depth d needs at
least 2d - 1 points, so vertices deeper than (L + 1) // 2 never matter.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Sequence

import numpy as np

from .cumulants import (
    alpha,
    boolean_cumulants,
    moments_from_boolean,
    moments_from_cumulants,
    required_depth,
    tfree_cumulants,
)
from .errors import (
    DepthError,
    IncompatibleAlphabetError,
    NotALawError,
    OrderError,
    PreconditionError,
    ValidationError,
)
from .partitions import check_n, compatible, enumerate_nc, pair_partitions
from .trees import IDENTITY, FiniteTree, Free, TreeSpec, compose, truncate


def _is_exact(x) -> bool:
    return isinstance(x, Rational)


def as_number(x):
    """Parse ``"3/4"``, ints and floats; strings with a dot become floats."""
    if isinstance(x, str):
        s = x.strip()
        if any(c in s for c in ".eE") and "/" not in s:
            return float(s)
        return Fraction(s)
    if isinstance(x, bool):
        raise ValidationError("booleans are not numbers here")
    if isinstance(x, int):
        return Fraction(x)
    return x


@dataclass(frozen=True)
class ScalarLaw:
    moments: tuple
    radius: float | None = field(default=None, compare=False)  # a bound, not part of the law

    def __post_init__(self):
        ms = tuple(as_number(x) for x in self.moments)
        if not all(_is_exact(x) for x in ms):
            ms = tuple(float(x) for x in ms)
        object.__setattr__(self, "moments", ms)
        if self.radius is not None:
            r = float(self.radius)
            if r < 0:
                raise ValidationError("radius must be non-negative")
            object.__setattr__(self, "radius", r)

    @property
    def order(self) -> int:
        return len(self.moments)

    @property
    def exact(self) -> bool:
        return all(_is_exact(x) for x in self.moments)

    def moment(self, ell: int):
        if ell == 0:
            return Fraction(1) if self.exact else 1.0
        if ell > self.order:
            raise OrderError(f"moment {ell} requested from a law with {self.order} moments")
        return self.moments[ell - 1]

    def truncated(self, order: int) -> "ScalarLaw":
        if order > self.order:
            raise OrderError(f"need {order} moments, have {self.order}")
        return ScalarLaw(self.moments[:order], self.radius)

    def to_float(self) -> "ScalarLaw":
        return ScalarLaw(tuple(float(x) for x in self.moments), self.radius)

    def boolean_cumulants(self) -> tuple:
        return boolean_cumulants(self.moments).values

    def hankel(self) -> list:
        p = self.order // 2
        return [[self.moment(i + j) for j in range(p + 1)] for i in range(p + 1)]

    def is_positive(self, tol: float = 1e-10) -> bool:
        """Positive semidefiniteness of the Hankel matrix."""
        H = self.hankel()
        if self.exact:
            return _exact_psd(H)
        A = np.array(H, dtype=float)
        scale = max(1.0, float(np.max(np.abs(A))))
        return bool(np.linalg.eigvalsh(A).min() >= -tol * scale)

    def validate(self, tol: float = 1e-10) -> "ScalarLaw":
        if not self.is_positive(tol):
            raise NotALawError("Hankel matrix of the moments is not positive semidefinite")
        if self.radius is not None:
            R = self.radius
            for ell, m in enumerate(self.moments, start=1):
                if abs(float(m)) > R ** ell * (1 + 1e-12) + 1e-300:
                    raise NotALawError(f"|m_{ell}| exceeds radius^{ell}")
        return self

    def close_to(self, other: "ScalarLaw", tol: float = 0.0) -> bool:
        n = min(self.order, other.order)
        if tol == 0 and self.exact and other.exact:
            return self.moments[:n] == other.moments[:n]
        return all(abs(float(a) - float(b)) <= tol for a, b in zip(self.moments[:n], other.moments[:n]))


def _exact_psd(H) -> bool:
    A = [[Fraction(x) for x in row] for row in H]
    n = len(A)
    for k in range(n):
        piv = A[k][k]
        if piv < 0:
            return False
        if piv == 0:
            if any(A[k][j] != 0 for j in range(k + 1, n)):
                return False
            continue
        for i in range(k + 1, n):
            f = A[i][k] / piv
            if f:
                for j in range(k + 1, n):
                    A[i][j] -= f * A[k][j]
    return True


# ---------------------------------------------------------------------------
# constructors


def point_mass(c, order: int) -> ScalarLaw:
    c = as_number(c)
    return ScalarLaw(tuple(c ** ell for ell in range(1, order + 1)), abs(float(c)))


def atoms(points: Sequence, weights: Sequence, order: int) -> ScalarLaw:
    pts = [as_number(p) for p in points]
    ws = [as_number(w) for w in weights]
    if len(pts) != len(ws) or not pts:
        raise ValidationError("points and weights must be non-empty and of equal length")
    if any(w < 0 for w in ws):
        raise NotALawError("negative weight")
    tot = sum(ws)
    if not tot:
        raise NotALawError("weights sum to zero")
    ws = [w / tot for w in ws]
    ms = tuple(sum(w * p ** ell for p, w in zip(pts, ws)) for ell in range(1, order + 1))
    return ScalarLaw(ms, max(abs(float(p)) for p in pts))


def bernoulli(order: int, a=1) -> ScalarLaw:
    """Symmetric two-point law at +-a."""
    a = as_number(a)
    return atoms([-a, a], [1, 1], order)


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def semicircle(order: int, variance=1) -> ScalarLaw:
    v = as_number(variance)
    ms = tuple(Fraction(0) if ell % 2 else catalan(ell // 2) * v ** (ell // 2) for ell in range(1, order + 1))
    return ScalarLaw(ms, 2 * math.sqrt(float(v)))


def random_rational_law(rng: random.Random, order: int, n_atoms: int = 3, span: int = 2, denom: int = 3) -> ScalarLaw:
    pts = [Fraction(rng.randint(-span * denom, span * denom), denom) for _ in range(n_atoms)]
    ws = [rng.randint(1, 5) for _ in range(n_atoms)]
    return atoms(pts, ws, order)


def random_centered_law(rng: random.Random, order: int, n_atoms: int = 3) -> ScalarLaw:
    """Random rational law with mean zero and non-zero variance."""
    while True:
        law = random_rational_law(rng, order, n_atoms)
        m1 = law.moments[0]
        shifted = shift(law, -m1)
        if shifted.moments[1] != 0:
            return shifted


def shift(mu: ScalarLaw, c) -> ScalarLaw:
    """Law of X + c."""
    c = as_number(c)
    ms = []
    for ell in range(1, mu.order + 1):
        ms.append(sum(math.comb(ell, k) * mu.moment(k) * c ** (ell - k) for k in range(ell + 1)))
    r = None if mu.radius is None else mu.radius + abs(float(c))
    return ScalarLaw(tuple(ms), r)


def dilate(mu: ScalarLaw, c) -> ScalarLaw:
    """Law of c X."""
    c = as_number(c) if not isinstance(c, float) else c
    ms = tuple(m * c ** ell for ell, m in enumerate(mu.moments, start=1))
    r = None if mu.radius is None else mu.radius * abs(float(c))
    return ScalarLaw(ms, r)


def moment_distance(mu: ScalarLaw, nu: ScalarLaw, R: float, order: int | None = None) -> float:
    """max over l of |m_l(mu) - m_l(nu)| / (2R)^l."""
    L = order or min(mu.order, nu.order)
    return max((abs(float(mu.moment(l)) - float(nu.moment(l))) / (2 * R) ** l for l in range(1, L + 1)), default=0.0)


# ---------------------------------------------------------------------------
# convolution


def _ball_for(tree, order: int) -> FiniteTree:
    need = required_depth(order)
    if isinstance(tree, FiniteTree):
        if tree.depth < need and not tree.exhausted:
            raise DepthError(f"order {order} needs a ball of radius {need}, got {tree.depth}")
        return tree if tree.depth <= need else tree.restrict(need)
    return truncate(tree, need)


def _laws_order(laws, order):
    if order is None:
        order = min(l.order for l in laws)
    if order < 1:
        raise OrderError("order must be at least 1")
    for k, l in enumerate(laws, start=1):
        if l.order < order:
            raise OrderError(f"law {k} has {l.order} moments, order {order} requested")
    return order


def _zero(exact):
    return Fraction(0) if exact else 0.0


def _series_mul(a, b, L, exact):
    out = [_zero(exact)] * (L + 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j in range(L + 1 - i):
            if b[j]:
                out[i + j] += x * b[j]
    return out


def _series_inv_one_minus(f, L, exact):
    """Coefficients of 1 / (1 - f) where f has zero constant term."""
    one = Fraction(1) if exact else 1.0
    out = [one] + [_zero(exact)] * L
    for ell in range(1, L + 1):
        s = _zero(exact)
        for k in range(1, ell + 1):
            if f[k]:
                s += f[k] * out[ell - k]
        out[ell] = s
    return out


def convolve(tree, laws: Sequence[ScalarLaw], order: int | None = None, method: str = "series") -> ScalarLaw:
    """Law of the sum of tree-independent variables with the given laws."""
    laws = list(laws)
    N = tree.N
    if len(laws) != N:
        raise IncompatibleAlphabetError(f"tree has {N} letters but {len(laws)} laws were given")
    order = _laws_order(laws, order)
    ball = _ball_for(tree, order)
    exact = all(l.exact for l in laws)
    bcum = [boolean_cumulants(l.moments[:order]).values for l in laws]
    if not exact:
        bcum = [tuple(float(x) for x in b) for b in bcum]
    if method == "series":
        ms = _convolve_series(ball, bcum, order, exact)
    elif method == "partition":
        ms = _convolve_partitions(ball, bcum, order, exact)
    else:
        raise ValidationError(f"unknown convolution method {method!r}")
    radii = [l.radius for l in laws]
    r = sum(radii) if all(x is not None for x in radii) else None
    return ScalarLaw(tuple(ms), r)


def _convolve_series(ball: FiniteTree, bcum, L: int, exact: bool) -> list:
    D = required_depth(L)
    one = Fraction(1) if exact else 1.0
    trivial = [one] + [_zero(exact)] * L
    A: dict = {}
    for s in sorted(ball.vertices, key=len, reverse=True):
        if len(s) >= D or len(s) >= ball.depth:
            A[s] = trivial
            continue
        I = [_zero(exact)] * (L + 1)
        for j in ball.children(s):
            child = A[(j,) + s]
            power = trivial
            b = bcum[j - 1]
            for k in range(1, L + 1):
                if b[k - 1]:
                    for ell in range(k, L + 1):
                        if power[ell - k]:
                            I[ell] += b[k - 1] * power[ell - k]
                if k < L:
                    power = _series_mul(power, child, L, exact)
        A[s] = _series_inv_one_minus(I, L, exact)
    return A[()][1:]


def _convolve_partitions(ball: FiniteTree, bcum, L: int, exact: bool) -> list:
    out = []
    for ell in range(1, L + 1):
        total = _zero(exact)
        for pi in enumerate_nc(ell):
            if pi.depth > ball.depth:
                continue
            total += _partition_weight(pi, ball, bcum, exact)
        out.append(total)
    return out


def _partition_weight(pi, ball: FiniteTree, bcum, exact):
    def val(v, s):
        w = bcum[s[0] - 1][len(pi.blocks[v]) - 1]
        if not w:
            return w
        for c in pi.children[v]:
            w = w * sum((val(c, (j,) + s) for j in ball.children(s)), _zero(exact))
            if not w:
                break
        return w

    total = Fraction(1) if exact else 1.0
    for v in pi.outer_blocks:
        total = total * sum((val(v, (r,)) for r in ball.root_letters), _zero(exact))
    return total


def word_sum(ball: FiniteTree, chi: Sequence[int], block_weight: Callable) -> object:
    """Sum over partitions compatible with the letter word ``chi`` of products of block weights.

    ``block_weight(letter, positions)`` gives the Boolean cumulant of the
    entries at ``positions`` (1-based) drawn from algebra ``letter``.
    """
    ell = len(chi)
    if ell == 0:
        return 1
    total = 0
    for pi in enumerate_nc(ell):
        if pi.depth > ball.depth:
            continue
        colours = []
        ok = True
        for b in pi.blocks:
            c = chi[b[0] - 1]
            if any(chi[x - 1] != c for x in b):
                ok = False
                break
            colours.append(c)
        if not ok or not compatible(pi, colours, ball):
            continue
        term = 1
        for b, c in zip(pi.blocks, colours):
            term = term * block_weight(c, b)
            if not term:
                break
        total = total + term
    return total


def word_moment(tree, laws: Sequence[ScalarLaw], chi: Sequence[int]):
    """E[X_{chi(1)} ... X_{chi(l)}] for tree-independent X_j with the given laws."""
    ell = len(chi)
    ball = tree if isinstance(tree, FiniteTree) else truncate(tree, max(required_depth(ell), 1))
    bc = [boolean_cumulants(l.moments[:ell]).values if ell else () for l in laws]
    return word_sum(ball, chi, lambda c, b: bc[c - 1][len(b) - 1])


# ---------------------------------------------------------------------------
# powers and bijections


def _cumulant_ball(tree, order):
    ball = _ball_for(tree, order)
    check_n(ball)
    return ball


def convolution_power(mu: ScalarLaw, tree, t, order: int | None = None) -> ScalarLaw:
    """Scale every tree-free cumulant by ``t``."""
    order = order or mu.order
    t = as_number(t) if not isinstance(t, float) else t
    if t < 0:
        raise ValidationError("convolution powers need t >= 0")
    ball = _cumulant_ball(tree, order)
    kappa = tfree_cumulants(mu.truncated(order).moments, ball).values
    return ScalarLaw(moments_from_cumulants([t * k for k in kappa], ball), None)


def boolean_power(mu: ScalarLaw, t, order: int | None = None) -> ScalarLaw:
    order = order or mu.order
    t = as_number(t) if not isinstance(t, float) else t
    kappa = boolean_cumulants(mu.truncated(order).moments).values
    return ScalarLaw(moments_from_boolean([t * k for k in kappa]), None)


def free_power(mu: ScalarLaw, t, order: int | None = None) -> ScalarLaw:
    return convolution_power(mu, Free(2), t, order)


def bn_semigroup(mu: ScalarLaw, t, order: int | None = None) -> ScalarLaw:
    t = as_number(t) if not isinstance(t, float) else t
    if t < 0:
        raise ValidationError("t must be non-negative")
    return boolean_power(free_power(mu, 1 + t, order), 1 / (1 + t), order)


def bp_bijection(mu: ScalarLaw, from_tree, to_tree, order: int | None = None) -> ScalarLaw:
    """The law whose ``to_tree``-cumulants equal the ``from_tree``-cumulants of ``mu``."""
    order = order or mu.order
    src = _cumulant_ball(from_tree, order)
    dst = _cumulant_ball(to_tree, order)
    kappa = tfree_cumulants(mu.truncated(order).moments, src).values
    return ScalarLaw(moments_from_cumulants(kappa, dst), None)


def regular_bp_expression(mu: ScalarLaw, tree, order: int | None = None) -> ScalarLaw:
    """``convolve(T, [mu^{bool 1/(n-1)}] * N)^{bool (n-1)/n}``."""
    order = order or mu.order
    ball = _cumulant_ball(tree, order)
    n = ball.n
    piece = boolean_power(mu, Fraction(1, n - 1), order)
    return boolean_power(convolve(tree, [piece] * tree.N, order), Fraction(n - 1, n), order)


def clt_law(tree, variance, order: int) -> ScalarLaw:
    """Central limit law: only the second cumulant is non-zero."""
    v = as_number(variance) if not isinstance(variance, float) else variance
    ball = _cumulant_ball(tree, order)
    ms = []
    for ell in range(1, order + 1):
        if ell % 2:
            ms.append(Fraction(0) if isinstance(v, Fraction) else 0.0)
            continue
        s = sum((alpha(ball, pi) for pi in pair_partitions(ell)), Fraction(0))
        ms.append(s * v ** (ell // 2))
    return ScalarLaw(tuple(ms), None)


def power_tree(tree: TreeSpec, k: int) -> TreeSpec:
    """T^0 = id, T^{k+1} = T(T^k, ..., T^k); the alphabet has N^k letters."""
    t: TreeSpec = IDENTITY
    for _ in range(k):
        t = compose(tree, [t] * tree.N)
    return t


@dataclass(frozen=True)
class CltRow:
    k: int
    moments: tuple
    gaps: tuple

    @property
    def gap(self):
        return max(self.gaps, default=0)


def _dilate_root(moments, n: int, k: int):
    """Multiply m_l by n^{-k l / 2}, exactly when the exponent is integral."""
    out = []
    for ell, m in enumerate(moments, start=1):
        e = k * ell
        if e % 2 == 0:
            out.append(m / Fraction(n) ** (e // 2) if isinstance(m, Fraction) else m / n ** (e // 2))
        else:
            out.append(float(m) * n ** (-e / 2))
    return tuple(out)


def clt_convergence(mu: ScalarLaw, tree, k_max: int, order: int | None = None, route: str = "cumulant") -> list:
    """Moments of the rescaled n^k-fold convolution against the limit law."""
    order = order or mu.order
    mu = mu.truncated(order)
    if mu.moments[0] != 0 and abs(float(mu.moments[0])) > 1e-14:
        raise PreconditionError("law must be centered")
    ball = _cumulant_ball(tree, order)
    n = ball.n
    limit = clt_law(ball, mu.moments[1], order)
    kappa = tfree_cumulants(mu.moments, ball).values
    rows = []
    current = mu
    for k in range(k_max + 1):
        if route == "cumulant":
            powered = moments_from_cumulants([Fraction(n) ** k * x if isinstance(x, Fraction) else n ** k * x for x in kappa], ball)
        elif route == "iterated":
            if k > 0:
                current = convolve(tree, [current] * tree.N, order)
            powered = current.moments
        else:
            raise ValidationError(f"unknown route {route!r}")
        ms = _dilate_root(powered, n, k)
        gaps = tuple(
            abs(a - b) if isinstance(a, Fraction) and isinstance(b, Fraction) else abs(float(a) - float(b))
            for a, b in zip(ms, limit.moments)
        )
        rows.append(CltRow(k, ms, gaps))
    return rows


def id_law(tree, c, sigma: ScalarLaw, order: int, mass=None) -> ScalarLaw:
    """Infinitely divisible law with cumulants (c, s_0, s_1, ..., s_{L-2}) where s_i are moments of sigma.

    ``mass`` is the total mass of sigma (default 1) so that scaled copies
    ``sigma / n^k`` can be expressed without leaving the moment format.
    """
    c = as_number(c) if not isinstance(c, float) else c
    w = Fraction(1) if mass is None else (as_number(mass) if not isinstance(mass, float) else mass)
    if order > 1 and sigma.order < order - 2:
        raise OrderError(f"sigma needs {order - 2} moments")
    kappa = [c] + [w * (sigma.moment(ell - 2) if ell > 2 else 1) for ell in range(2, order + 1)]
    ball = _cumulant_ball(tree, order)
    return ScalarLaw(moments_from_cumulants(kappa, ball), None)


def id_divisor(tree, c, sigma: ScalarLaw, order: int, k: int, mass=None) -> ScalarLaw:
    """The law whose n^k-fold self-convolution is ``id_law(tree, c, sigma)``."""
    ball = _cumulant_ball(tree, order)
    scale = Fraction(1, ball.n ** k)
    w = Fraction(1) if mass is None else as_number(mass)
    return id_law(tree, as_number(c) * scale, sigma, order, mass=w * scale)


def self_convolve_levels(mu: ScalarLaw, tree: TreeSpec, k: int, order: int) -> ScalarLaw:
    """k nested N-fold self-convolutions over ``tree``."""
    for _ in range(k):
        mu = convolve(tree, [mu] * tree.N, order)
    return mu
