"""Cauchy, F and K transforms as evaluable handles.

A handle evaluates ``G(z)`` on numpy arrays.  ``F = 1 / G`` and
``K = z - F``.  Binary convolutions compose handles:

* Boolean: ``K = K1 + K2``
* monotone: ``F = F1 o F2``
* orthogonal: ``K = K1 o F2``

Handles are valid in the upper half-plane and, by conjugate symmetry, for
``|z|`` well outside the support; evaluation elsewhere raises
:class:`DomainError`.  Moments come back out through a trapezoid rule on a
circle.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError, PrecisionError, ValidationError
from .trees import FiniteTree


class TransformHandle:
    radius: float = 0.0
    domain_factor = 2.0

    def _g(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check(self, z: np.ndarray):
        bad = (z.imag <= 0) & (np.abs(z) <= self.domain_factor * self.radius)
        if np.any(bad):
            w = z[bad].flat[0]
            raise DomainError(f"z = {w} is outside the domain (Im z > 0 or |z| > {self.domain_factor * self.radius:g})")

    def G(self, z):
        z = np.asarray(z, dtype=complex)
        self._check(z)
        return self._g(z)

    def F(self, z):
        return 1.0 / self.G(z)

    def K(self, z):
        z = np.asarray(z, dtype=complex)
        return z - self.F(z)

    # unchecked versions used inside compositions
    def _f(self, z):
        return 1.0 / self._g(z)

    def _k(self, z):
        return z - self._f(z)


class ResolventHandle(TransformHandle):
    """G(z) = sum_k w_k / (z - t_k) for a discrete law (the spectral measure of a model at e_1)."""

    def __init__(self, points, weights):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.radius = float(np.max(np.abs(self.points), initial=0.0))

    @classmethod
    def from_model(cls, model) -> "ResolventHandle":
        a = np.asarray(model.op)
        vals, vecs = np.linalg.eigh((a + a.conj().T) / 2)
        return cls(vals, np.abs(vecs[0, :]) ** 2)

    def _g(self, z):
        return np.sum(self.weights / (z[..., None] - self.points), axis=-1)


def cauchy_from_law(law, degree: int | None = None) -> ResolventHandle:
    from .models import gns_realize

    return ResolventHandle.from_model(gns_realize(law, degree))


class _KHandle(TransformHandle):
    def _g(self, z):
        return 1.0 / (z - self._k(z))


class BooleanHandle(_KHandle):
    def __init__(self, *parts: TransformHandle):
        self.parts = parts
        self.radius = sum(p.radius for p in parts)

    def _k(self, z):
        return sum(p._k(z) for p in self.parts)


class OrthogonalHandle(_KHandle):
    def __init__(self, first: TransformHandle, second: TransformHandle):
        self.first, self.second = first, second
        self.radius = first.radius + second.radius

    def _k(self, z):
        return self.first._k(self.second._f(z))


class MonotoneHandle(TransformHandle):
    def __init__(self, first: TransformHandle, second: TransformHandle):
        self.first, self.second = first, second
        self.radius = first.radius + second.radius

    def _g(self, z):
        return self.first._g(self.second._f(z))


def conv_boolean(g1: TransformHandle, g2: TransformHandle) -> TransformHandle:
    return BooleanHandle(g1, g2)


def conv_monotone(g1: TransformHandle, g2: TransformHandle) -> TransformHandle:
    return MonotoneHandle(g1, g2)


def conv_orthogonal(g1: TransformHandle, g2: TransformHandle) -> TransformHandle:
    return OrthogonalHandle(g1, g2)


# ---------------------------------------------------------------------------
# trees and digraphs


def _tree_k(ball: FiniteTree, handles: Sequence[TransformHandle], z: np.ndarray) -> np.ndarray:
    K = {}
    for v in sorted(ball.vertices, key=len, reverse=True):
        acc = np.zeros_like(z)
        if len(v) < ball.depth:
            for i in ball.children(v):
                acc = acc + handles[i - 1]._k(z - K[(i,) + v])
        K[v] = acc
    return K[()]


def finite_tree_K(ball: FiniteTree, handles: Sequence[TransformHandle], z):
    """K transform of the convolution over a finite tree, by recursion over branches."""
    h = FiniteTreeHandle(ball, handles)
    return h.K(z)


class FiniteTreeHandle(_KHandle):
    def __init__(self, ball: FiniteTree, handles: Sequence[TransformHandle]):
        if len(handles) != ball.N:
            raise ValidationError(f"tree has {ball.N} letters but {len(handles)} handles were given")
        self.ball = ball
        self.handles = list(handles)
        self.radius = sum(h.radius for h in handles)

    def _k(self, z):
        return _tree_k(self.ball, self.handles, z)


def digraph_fixed_point(graph, handles: Sequence[TransformHandle], z, tol: float = 1e-12, max_iter: int = 10_000):
    """Picard iteration for the walk-tree convolution.

    Vertex j's branch law satisfies K_j(z) = K_{mu_j}(z - sum_{j -> i} K_i(z)).
    Returns (sum_j K_j(z), per-vertex array of shape (N, ...), iterations).
    """
    z = np.asarray(z, dtype=complex)
    if len(handles) != graph.N:
        raise ValidationError(f"digraph has {graph.N} vertices but {len(handles)} handles were given")
    R = sum(h.radius for h in handles)
    zmin = 4 * R
    bad = (z.imag < zmin) & (np.abs(z) < zmin)
    if np.any(bad):
        raise DomainError(f"fixed-point iteration needs Im z >= {zmin:g} or |z| >= {zmin:g}")
    N = graph.N
    nbrs = [np.array(graph.out_neighbours(j), dtype=int) - 1 for j in range(1, N + 1)]
    K = np.zeros((N,) + z.shape, dtype=complex)
    resid = math.inf
    # K = z - F cancels, so each evaluation carries about eps |z| of rounding
    floor = 64 * np.finfo(float).eps * float(np.max(np.abs(z), initial=0.0))
    for it in range(1, max_iter + 1):
        new = np.empty_like(K)
        for j in range(N):
            shift = K[nbrs[j]].sum(axis=0) if len(nbrs[j]) else 0.0
            new[j] = handles[j]._k(z - shift)
        resid = float(np.max(np.abs(new - K), initial=0.0))
        scale = max(1.0, float(np.max(np.abs(new), initial=0.0)))
        K = new
        if resid <= max(tol * scale, floor):
            return K.sum(axis=0), K, it
    raise ConvergenceError(f"no convergence after {max_iter} iterations (last change {resid:.3e})", residual=resid)


class DigraphHandle(_KHandle):
    def __init__(self, graph, handles: Sequence[TransformHandle], tol: float = 1e-12, max_iter: int = 10_000):
        self.graph = graph
        self.handles = list(handles)
        self.radius = sum(h.radius for h in handles)
        self.tol, self.max_iter = tol, max_iter
        self.domain_factor = 4.0

    def _k(self, z):
        return digraph_fixed_point(self.graph, self.handles, z, self.tol, self.max_iter)[0]


# ---------------------------------------------------------------------------
# extraction


def moments_from_handle(handle: TransformHandle, order: int, rho: float | None = None, nodes: int = 4096, tol: float = 1e-8, return_error: bool = False):
    """m_1..m_order from the 1/z expansion of G, by the trapezoid rule on |z| = rho.

    The rule is repeated with twice the nodes; disagreement beyond ``tol``
    (relative to max(1, rho^l)) raises :class:`PrecisionError`.
    """
    if rho is None:
        # just outside the domain boundary keeps rho^l amplification of rounding small
        rho = max(1.05 * handle.domain_factor * handle.radius, 1.0)
    if rho <= handle.radius:
        raise DomainError(f"contour radius {rho} must exceed the support radius {handle.radius}")

    def run(M):
        theta = 2 * np.pi * (np.arange(M) + 0.5) / M
        z = rho * np.exp(1j * theta)
        g = handle.G(z)
        vals = []
        w = z * g
        for _ in range(order):
            w = w * z
            vals.append(np.mean(w))
        return np.array(vals)

    a = run(nodes)
    b = run(2 * nodes)
    scale = np.array([max(1.0, rho ** ell) for ell in range(1, order + 1)])
    err = float(np.max(np.abs(a - b) / scale, initial=0.0))
    if err > tol:
        raise PrecisionError(f"trapezoid doubling disagrees by {err:.3e}")
    ms = tuple(float(x.real) for x in a)
    return (ms, err) if return_error else ms


def density(handle: TransformHandle, xs, eps: float = 1e-3) -> np.ndarray:
    """-Im G(x + i eps) / pi."""
    xs = np.asarray(xs, dtype=float)
    return -handle.G(xs + 1j * eps).imag / np.pi


def semicircle_cauchy(z, variance: float = 1.0):
    z = np.asarray(z, dtype=complex)
    r = np.sqrt(z - 2 * math.sqrt(variance)) * np.sqrt(z + 2 * math.sqrt(variance))
    return (z - r) / (2 * variance)


# ---------------------------------------------------------------------------
# central limit laws of regular trees


def regular_clt_atoms(t: float) -> list:
    """(position, weight) pairs of the atoms; present only for t < 1/2."""
    if t < 0.5:
        w = (1 - 2 * t) / (2 * (1 - t))
        x = 1 / math.sqrt(1 - t)
        return [(-x, w), (x, w)]
    return []


def regular_clt_density(t: float, x):
    x = np.asarray(x, dtype=float)
    inside = np.clip(4 * t - x * x, 0, None)
    return np.sqrt(inside) / (2 * np.pi * ((t - 1) * x * x + 1))


def regular_clt_moments_quadrature(t: float, order: int) -> list:
    """Moments of density plus atoms, integrating in x = 2 sqrt(t) sin(theta)."""
    c = 2 * math.sqrt(t)
    q = 4 * t * (1 - t)
    out = []
    for ell in range(1, order + 1):
        if ell % 2:
            out.append(0.0)
            continue

        def f(th, ell=ell):
            s = math.sin(th)
            return (c * s) ** ell * 4 * t * math.cos(th) ** 2 / (2 * math.pi * (1 - q * s * s))

        val, _ = integrate.quad(f, -math.pi / 2, math.pi / 2, epsabs=1e-13, epsrel=1e-12, limit=200)
        val += sum(w * p ** ell for p, w in regular_clt_atoms(t))
        out.append(val)
    return out
