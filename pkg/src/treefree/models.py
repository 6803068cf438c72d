"""Finite-dimensional operator models of tree-indexed products.

Each algebra acts on ``C^{d_j}`` with distinguished vector ``e_1``, so the
orthocomplement ``H_j^o`` is spanned by ``e_2 .. e_{d_j}``.  The product
space is the direct sum over tree vertices ``s`` of
``H_{s(1)}^o (x) H_{s(2)}^o (x) ...``, truncated at a level ``L``.

Tensor indices put the most recent letter first: for ``s = j s'`` the basis
vector ``e_{k+1} (x) h_r`` of ``H_s`` has local index ``k * D_{s'} + r``.

Truncation is exact for expectations of words in which the total number of
level changes cannot climb past ``L`` and come back: each ``lambda_j``
shifts the level by at most one, so a word of length ``w <= L`` never
touches the cut.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DepthError,
    IncompatibleAlphabetError,
    NotALawError,
    PreconditionError,
    SizeLimitError,
    TruncationError,
    ValidationError,
)
from .trees import FiniteTree, TreeSpec, truncate

DEFAULT_MAX_DIM = 200_000
DENSE_NORM_LIMIT = 1500


def max_dim() -> int:
    raw = os.environ.get("TREEFREE_MAX_DIM")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(f"TREEFREE_MAX_DIM={raw!r} is not an integer") from None
    return DEFAULT_MAX_DIM


class PointedModel:
    """A square matrix with distinguished vector e_1."""

    def __init__(self, op, tag: str = "selfadjoint", tol: float | None = None):
        a = np.array(op, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValidationError("model operator must be a non-empty square matrix")
        if tag == "selfadjoint":
            if np.max(np.abs(a - a.conj().T), initial=0.0) > (tol or 1e-12) * max(1.0, np.max(np.abs(a))):
                raise PreconditionError("operator is not self-adjoint")
        elif tag == "unitary":
            if np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0])), initial=0.0) > (tol or 1e-10):
                raise PreconditionError("operator is not unitary")
        elif tag != "general":
            raise ValidationError(f"unknown model tag {tag!r}")
        self.op = a
        self.tag = tag

    @property
    def dim(self) -> int:
        return self.op.shape[0]

    def moment(self, ell: int) -> complex:
        return np.linalg.matrix_power(self.op, ell)[0, 0]

    def moments(self, order: int) -> list:
        out, v = [], np.zeros(self.dim, dtype=complex)
        v[0] = 1
        for _ in range(order):
            v = self.op @ v
            out.append(v[0])
        return out

    def law(self, order: int):
        from .laws import ScalarLaw

        ms = self.moments(order)
        return ScalarLaw(tuple(float(m.real) for m in ms), float(np.linalg.norm(self.op, 2)))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.op, 2))

    def __repr__(self):
        return f"PointedModel(dim={self.dim}, tag={self.tag!r})"


# ---------------------------------------------------------------------------
# realisation of a law


@dataclass(frozen=True)
class JacobiData:
    diagonal: tuple
    offdiag_sq: tuple  # squared off-diagonal entries


def jacobi_coefficients(law, size: int | None = None, tol: float = 1e-10) -> JacobiData:
    """Monic orthogonal-polynomial recursion on the moment functional.

    Stops early when a polynomial has zero norm (the law has finitely many
    atoms); a negative norm means the moments do not come from a law.
    """
    L = law.order
    cap = (L + 1) // 2
    size = cap if size is None else size
    if size > cap:
        raise ValidationError(f"a {size}x{size} Jacobi matrix needs {2 * size - 1} moments, have {L}")
    exact = law.exact
    m = [law.moment(k) for k in range(L + 1)]
    scale = max(1.0, max(abs(float(x)) for x in m))

    def ip(f, g):
        return sum(fi * gj * m[i + j] for i, fi in enumerate(f) if fi for j, gj in enumerate(g) if gj)

    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    prev, cur = [], [one]
    norm = one
    diag, off = [], []
    for k in range(size):
        xcur = [zero] + cur
        a = ip(xcur, cur) / norm
        diag.append(a)
        if k == size - 1:
            break
        nxt = [zero] * (len(cur) + 1)
        for i, c in enumerate(xcur):
            nxt[i] += c
        for i, c in enumerate(cur):
            nxt[i] -= a * c
        if prev:
            b = off[-1]
            for i, c in enumerate(prev):
                nxt[i] -= b * c
        if 2 * (k + 1) > L:
            break
        new_norm = ip(nxt, nxt)
        if exact:
            if new_norm < 0:
                raise NotALawError("moment functional is not positive")
            if new_norm == 0:
                break
        else:
            if new_norm < -tol * scale:
                raise NotALawError("moment functional is not positive")
            if new_norm <= tol * scale:
                break
        off.append(new_norm / norm)
        prev, cur, norm = cur, nxt, new_norm
    return JacobiData(tuple(diag), tuple(off))


def gns_realize(law, degree: int | None = None, tol: float = 1e-10) -> PointedModel:
    """Tridiagonal model whose e_1 moments reproduce the law.

    ``degree`` p asks for a (p+1)-dimensional model; the default uses every
    available moment.  Atomic laws give a smaller matrix.
    """
    size = None if degree is None else degree + 1
    jd = jacobi_coefficients(law, size, tol)
    d = len(jd.diagonal)
    J = np.zeros((d, d))
    for i, a in enumerate(jd.diagonal):
        J[i, i] = float(a)
    for i, b in enumerate(jd.offdiag_sq):
        J[i, i + 1] = J[i + 1, i] = math.sqrt(float(b))
    return PointedModel(J)


# ---------------------------------------------------------------------------
# product space


class ProductModel:
    """Truncated product of pointed spaces indexed by a tree."""

    def __init__(self, tree, dims: Sequence[int], level: int, _max_dim: int | None = None):
        self.level = int(level)
        if isinstance(tree, FiniteTree):
            if tree.depth < self.level and not tree.exhausted:
                raise DepthError(f"level {level} needs a ball of radius {level}, got {tree.depth}")
            self.ball = tree if tree.depth <= self.level else tree.restrict(self.level)
            self.spec = None
        else:
            self.spec = tree
            self.ball = truncate(tree, self.level)
        self.N = self.ball.N
        self.dims = tuple(int(d) for d in dims)
        if len(self.dims) != self.N:
            raise IncompatibleAlphabetError(f"tree has {self.N} letters but {len(self.dims)} spaces were given")
        offsets, sizes = {}, {}
        total = 0
        for s in self.ball.vertices:
            D = 1
            for x in s:
                D *= self.dims[x - 1] - 1
            if D == 0:
                continue
            offsets[s] = total
            sizes[s] = D
            total += D
        cap = max_dim() if _max_dim is None else _max_dim
        if total > cap:
            raise SizeLimitError(f"product space has dimension {total}, above the cap {cap}")
        self.offsets = offsets
        self.sizes = sizes
        self.dim = total
        self._pairs = {}
        for j in range(1, self.N + 1):
            pairs = []
            for s, off in offsets.items():
                if s and s[0] == j:
                    continue
                t = (j,) + s
                if t in offsets:
                    pairs.append((off, offsets[t], sizes[s]))
            self._pairs[j] = pairs

    @property
    def truncated_at_cut(self) -> bool:
        return not self.ball.exhausted

    def xi(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1
        return v

    def lam(self, j: int, a) -> sp.csr_matrix:
        """The image of ``a`` acting on the j-th space."""
        a = np.asarray(a, dtype=complex)
        d = self.dims[j - 1]
        if a.shape != (d, d):
            raise ValidationError(f"space {j} has dimension {d}, matrix has shape {a.shape}")
        rows, cols, vals = [], [], []
        nz = np.argwhere(a != 0)
        for off_lo, off_hi, D in self._pairs[j]:
            r = np.arange(D)
            for p, q in nz:
                rp = off_lo + r if p == 0 else off_hi + (p - 1) * D + r
                cq = off_lo + r if q == 0 else off_hi + (q - 1) * D + r
                rows.append(rp)
                cols.append(cq)
                vals.append(np.full(D, a[p, q]))
        if rows:
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            vals = np.concatenate(vals)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim), dtype=complex)

    def children(self, s) -> tuple:
        """Letters j with js in the tree, looking one level past the cut when the spec is known."""
        if len(s) < self.ball.depth:
            return self.ball.children(s)
        if self.ball.exhausted:
            return ()
        if self.spec is None:
            raise DepthError("children beyond the truncation need the symbolic tree")
        return truncate(self.spec, len(s) + 1).children(s)


def build_product(tree, models: Sequence[PointedModel], level: int) -> "ModelProduct":
    return ModelProduct(tree, models, level)


class ModelProduct(ProductModel):
    """A product space together with the operators placed on each factor."""

    def __init__(self, tree, models: Sequence[PointedModel], level: int):
        models = list(models)
        super().__init__(tree, [m.dim for m in models], level)
        self.models = models
        self._cache: dict = {}

    def _resolve(self, j: int, a):
        if isinstance(a, str):
            key = (j, a)
            if key not in self._cache:
                op = self.models[j - 1].op
                if a in ("X", "U"):
                    m = op
                elif a in ("X*", "U*"):
                    m = op.conj().T
                else:
                    raise ValidationError(f"unknown symbol {a!r}")
                self._cache[key] = self.lam(j, m)
            return self._cache[key]
        return self.lam(j, a)

    def word_expectation(self, word) -> complex:
        """<xi, lambda(a_1) ... lambda(a_w) xi>; items are (j, matrix|'X'|'X*') or a bare letter j."""
        word = [(w, "X") if isinstance(w, (int, np.integer)) else tuple(w) for w in word]
        if len(word) > self.level and not self.ball.exhausted:
            raise TruncationError(f"word of length {len(word)} exceeds truncation level {self.level}")
        v = self.xi()
        for j, a in reversed(word):
            v = self._resolve(j, a) @ v
        return complex(v[0])

    def sum_operator(self, mats=None) -> sp.csr_matrix:
        total = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for j in range(1, self.N + 1):
            total = total + (self._resolve(j, "X") if mats is None else self.lam(j, mats[j - 1]))
        return total

    def sum_moments(self, order: int) -> list:
        if order > self.level and not self.ball.exhausted:
            raise TruncationError(f"order {order} exceeds truncation level {self.level}")
        S = self.sum_operator()
        v, out = self.xi(), []
        for _ in range(order):
            v = S @ v
            out.append(complex(v[0]))
        return out


def operator_norm(M) -> float:
    """Largest singular value; dense for small sizes, ARPACK otherwise."""
    n = M.shape[0]
    if n == 0:
        return 0.0
    if n <= DENSE_NORM_LIMIT:
        A = M.toarray() if sp.issparse(M) else np.asarray(M)
        return float(np.linalg.norm(A, 2))
    v0 = np.ones(n) / math.sqrt(n)
    s = spla.svds(M, k=1, return_singular_vectors=False, tol=1e-10, v0=v0, maxiter=10_000)
    return float(s[0])


# ---------------------------------------------------------------------------
# norm bounds


@dataclass(frozen=True)
class NormReport:
    truncated_norm: float
    bound: float
    corollary_sum_bound: float
    corollary_degree_bound: float
    max_up_degree: int

    @property
    def ok(self) -> bool:
        t = self.truncated_norm * (1 - 1e-12)
        return t <= self.bound and t <= self.corollary_sum_bound and t <= self.corollary_degree_bound


def _vertex_child_sets(pm: ProductModel) -> set:
    """Distinct child-letter sets over vertices of the truncation."""
    out = set()
    for s in pm.ball.vertices:
        out.add(pm.children(s))
    return out


def norm_bound_check(pm: ProductModel, mats: Sequence) -> NormReport:
    mats = [np.asarray(a, dtype=complex) for a in mats]
    if len(mats) != pm.N:
        raise IncompatibleAlphabetError(f"expected {pm.N} matrices, got {len(mats)}")
    for j, a in enumerate(mats, start=1):
        if abs(a[0, 0]) > 1e-12 * max(1.0, np.max(np.abs(a))):
            raise PreconditionError(f"matrix {j} has <xi, a xi> = {a[0, 0]}, not zero")
    S = sum((pm.lam(j, a) for j, a in enumerate(mats, start=1)), sp.csr_matrix((pm.dim, pm.dim), dtype=complex))
    tn = operator_norm(S)
    col = [float(np.sum(np.abs(a[1:, 0]) ** 2)) for a in mats]
    row = [float(np.sum(np.abs(a[0, 1:]) ** 2)) for a in mats]
    norms = [float(np.linalg.norm(a, 2)) for a in mats]
    sets = _vertex_child_sets(pm)
    first = max(math.sqrt(sum(col[j - 1] for j in cs)) for cs in sets)
    second = max(math.sqrt(sum(row[j - 1] for j in cs)) for cs in sets)
    bound = first + second + max(norms)
    cor1 = 2 * math.sqrt(sum(x * x for x in norms)) + max(norms)
    dbar = max(len(cs) for cs in sets)
    cor2 = (2 * math.sqrt(dbar) + 1) * max(norms)
    return NormReport(tn, bound, cor1, cor2, dbar)


# ---------------------------------------------------------------------------
# central limit coupling


@dataclass(frozen=True)
class CouplingReport:
    diff_norm: float
    diff_bound: float
    z_norm: float
    z_bound: float
    dim: int

    @property
    def ok(self) -> bool:
        return self.diff_norm <= self.diff_bound * (1 + 1e-12) and self.z_norm <= self.z_bound * (1 + 1e-12)


def bernoulli_part(a: np.ndarray) -> np.ndarray:
    """Keep only the entries linking e_1 to its complement."""
    z = np.zeros_like(a)
    z[0, 1:] = a[0, 1:]
    z[1:, 0] = a[1:, 0]
    return z


def clt_coupling(tree: TreeSpec, models: Sequence[PointedModel], k: int, level: int, variance: float = 1.0) -> CouplingReport:
    """Compare Y = n^{-k/2} sum lambda_j(Y_j) with its Bernoulli part Z on the truncated space of T^{n^k}."""
    from .laws import power_tree

    big = power_tree(tree, k)
    models = list(models)
    if len(models) != big.N:
        raise IncompatibleAlphabetError(f"T^(n^{k}) has {big.N} letters, got {len(models)} models")
    for j, m in enumerate(models, start=1):
        a = m.op
        if abs(a[0, 0]) > 1e-12:
            raise PreconditionError(f"model {j} is not centered")
    n = truncate(tree, 1).n
    N = tree.N
    pm = ModelProduct(big, models, level)
    scale = n ** (-k / 2)
    Y = scale * pm.sum_operator([m.op for m in models])
    Z = scale * pm.sum_operator([bernoulli_part(m.op) for m in models])
    rad = max(m.norm for m in models)
    diff = operator_norm(Y - Z)
    zn = operator_norm(Z)
    zb = 2 * math.sqrt((N - 1) / (n - 1) * variance) if n > 1 else math.inf
    return CouplingReport(diff, scale * rad, zn, zb, pm.dim)


def random_centered_model(rng: np.random.Generator, dim: int = 3, variance: float = 1.0) -> PointedModel:
    a = rng.standard_normal((dim, dim))
    a = (a + a.T) / 2
    a[0, 0] = 0.0
    col = a[1:, 0]
    nrm = np.linalg.norm(col)
    if nrm == 0:
        col = np.ones(dim - 1)
        nrm = np.linalg.norm(col)
    col = col / nrm * math.sqrt(variance)
    a[1:, 0] = col
    a[0, 1:] = col
    return PointedModel(a)


# ---------------------------------------------------------------------------
# multiplicative convolution


def random_unitary(rng: np.random.Generator, dim: int = 2) -> PointedModel:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return PointedModel(q, "unitary")


def _check_unitary(models):
    for j, m in enumerate(models, start=1):
        if m.tag != "unitary":
            PointedModel(m.op, "unitary")  # raises PreconditionError when not unitary


def multiplicative_level(tree: TreeSpec, word_length: int) -> int:
    """Smallest level at which *-words of this length are computed exactly."""
    N = tree.N
    need = math.ceil(word_length * N / 2)
    t = truncate(tree, need)
    height = max((len(s) for s in t.vertices), default=0)
    return height if t.exhausted else need


def product_unitary(pm: ModelProduct, adjoint: bool = False) -> sp.csr_matrix:
    """[lambda_1(U_1 - 1) + 1] ... [lambda_N(U_N - 1) + 1], or the adjoint of that product."""
    eye = sp.identity(pm.dim, dtype=complex, format="csr")
    out = eye
    order = range(1, pm.N + 1)
    for j in (reversed(order) if adjoint else order):
        u = pm.models[j - 1].op
        if adjoint:
            u = u.conj().T
        out = out @ (pm.lam(j, u - np.eye(u.shape[0])) + eye)
    return out.tocsr()


def multiplicative_moments(tree, models: Sequence[PointedModel], words: Sequence[str], level: int | None = None) -> dict:
    """Expectations of *-words (strings over 'Z' and '*', e.g. "ZZ*Z") in the product unitary."""
    models = list(models)
    _check_unitary(models)
    parsed = {w: _parse_star_word(w) for w in words}
    longest = max((len(p) for p in parsed.values()), default=0)
    if level is None:
        level = multiplicative_level(tree, longest) if not isinstance(tree, FiniteTree) else tree.depth
    pm = ModelProduct(tree, models, level)
    if not pm.ball.exhausted and level < math.ceil(longest * pm.N / 2):
        raise TruncationError(f"level {level} is too shallow for *-words of length {longest}")
    U = product_unitary(pm)
    Us = product_unitary(pm, adjoint=True)
    out = {}
    for w, p in parsed.items():
        v = pm.xi()
        for star in reversed(p):
            v = (Us if star else U) @ v
        out[w] = complex(v[0])
    return out


def _parse_star_word(w: str) -> tuple:
    out = []
    i = 0
    while i < len(w):
        if w[i] not in "Zz":
            raise ValidationError(f"bad *-word {w!r}")
        if i + 1 < len(w) and w[i + 1] == "*":
            out.append(True)
            i += 2
        else:
            out.append(False)
            i += 1
    return tuple(out)


def star_words(max_len: int) -> list:
    out = []
    for ell in range(1, max_len + 1):
        for bits in itertools.product((False, True), repeat=ell):
            out.append("".join("Z*" if b else "Z" for b in bits))
    return out


def product_unitary_model(tree, models: Sequence[PointedModel], level: int | None = None) -> PointedModel:
    """The product unitary as a pointed model, for nesting one product inside another.

    Only available when the tree is finite and fully captured, so the matrix
    is exactly unitary.
    """
    models = list(models)
    _check_unitary(models)
    if level is None:
        t = truncate(tree, 64) if not isinstance(tree, FiniteTree) else tree
        if not t.exhausted:
            raise TruncationError("nesting needs a finite tree")
        level = max(len(s) for s in t.vertices)
    pm = ModelProduct(tree, models, level)
    if not pm.ball.exhausted:
        raise TruncationError("nesting needs a finite tree captured by the level")
    return PointedModel(product_unitary(pm).toarray(), "unitary", tol=1e-9)
