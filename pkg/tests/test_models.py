import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from strategies import seeds
from treefree.errors import NotALawError, PreconditionError, SizeLimitError, TruncationError
from treefree.laws import ScalarLaw, bernoulli, convolve, point_mass, semicircle
from treefree.models import (
    ModelProduct,
    PointedModel,
    ProductModel,
    bernoulli_part,
    build_product,
    clt_coupling,
    gns_realize,
    jacobi_coefficients,
    multiplicative_moments,
    norm_bound_check,
    product_unitary_model,
    random_centered_model,
    random_unitary,
    star_words,
)
from treefree.digraphs import Regular
from treefree.trees import IDENTITY, Bool, Free, LetterSubset, Mono, Orth, Sub, compose, random_tree, truncate

TOL = 1e-10


def rng_for(seed):
    return np.random.default_rng(seed)


def random_matrix(rng, d):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def height(tree):
    ball = truncate(tree, 32)
    assert ball.exhausted
    return max(len(s) for s in ball.vertices)


def expect(pm, ops):
    v = pm.xi()
    for m in reversed(ops):
        v = m @ v
    return complex(v[0])


# -- GNS -------------------------------------------------------------------


def test_gns_point_mass_is_one_dimensional():
    m = gns_realize(point_mass(3, 6))
    assert m.dim == 1 and m.op[0, 0] == 3


def test_gns_bernoulli():
    m = gns_realize(bernoulli(6))
    assert m.dim == 2
    assert np.allclose(m.moments(6), [0, 1, 0, 1, 0, 1])


def test_gns_semicircle_is_unit_jacobi_matrix():
    jd = jacobi_coefficients(semicircle(8))
    assert all(b == 1 for b in jd.offdiag_sq) and all(a == 0 for a in jd.diagonal)
    m = gns_realize(semicircle(8))
    assert m.dim == 4
    assert np.allclose(m.moments(7), [float(x) for x in semicircle(7).moments], atol=TOL)


@given(seeds)
def test_gns_reproduces_moments(seed):
    from treefree.laws import random_rational_law

    law = random_rational_law(random.Random(seed), 9, n_atoms=5)
    m = gns_realize(law)
    k = 2 * m.dim - 1 if m.dim < 5 else 9
    assert np.allclose(m.moments(k), [float(x) for x in law.moments[:k]], atol=1e-9)


def test_gns_rejects_non_law():
    with pytest.raises(NotALawError):
        gns_realize(ScalarLaw((0, -1, 0)))


# -- product spaces --------------------------------------------------------


def test_product_dimensions():
    two = [PointedModel(np.eye(2))] * 2
    assert build_product(Bool(2), two, 1).dim == 3
    assert build_product(Free(2), two, 3).dim == 7
    orth = build_product(Orth(), [PointedModel(np.eye(3))] * 2, 9)
    assert set(orth.offsets) == {(), (1,), (2, 1)}


@given(seeds)
def test_dimension_formula(seed):
    rng = random.Random(seed)
    tree = random_tree(3, 3, rng)
    dims = [rng.randint(2, 3) for _ in range(3)]
    pm = ProductModel(tree, dims, 3)
    assert pm.dim == sum(math.prod(dims[x - 1] - 1 for x in s) for s in truncate(tree, 3).vertices)


def test_dimension_guard(monkeypatch):
    monkeypatch.setenv("TREEFREE_MAX_DIM", "10")
    with pytest.raises(SizeLimitError):
        ProductModel(Free(2), [3, 3], 4)


def test_empty_word_is_one():
    pm = build_product(Free(2), [gns_realize(bernoulli(4))] * 2, 3)
    assert pm.word_expectation([]) == 1


def test_word_longer_than_level_is_refused():
    pm = build_product(Free(2), [gns_realize(bernoulli(4))] * 2, 3)
    with pytest.raises(TruncationError):
        pm.word_expectation([1, 2, 1, 2])


def test_free_bernoulli_word_matches_combinatorics():
    b = gns_realize(bernoulli(4))
    pm = build_product(Free(2), [b, b], 4)
    word = [(1, b.op), (2, b.op), (1, b.op), (2, b.op)]
    got = pm.word_expectation([1, 2, 1, 2])
    assert abs(got - oracles.word_expectation_oracle(oracles.free_member(2), word)) < TOL
    assert abs(got) < TOL


@given(seeds, st.integers(2, 6))
def test_alternating_centered_word_vanishes_in_free(seed, ell):
    rng = rng_for(seed)
    mats = []
    for _ in range(3):
        a = random_matrix(rng, 3)
        a[0, 0] = 0
        mats.append(a)
    pm = ProductModel(Free(3), [3, 3, 3], ell)
    letters = [1]
    for _ in range(ell - 1):
        letters.append(rng.choice([j for j in (1, 2, 3) if j != letters[-1]]))
    ops = [pm.lam(j, mats[j - 1]) for j in letters]
    assert abs(expect(pm, ops)) < TOL


TREES = [Free(2), Bool(2), Mono(2), Orth(), Sub()]


@pytest.mark.parametrize("tree", TREES, ids=lambda t: t.kind)
@given(seed=seeds, ell=st.integers(1, 6))
def test_word_expectation_matches_oracle(tree, seed, ell):
    _check_oracle(tree, seed, ell)


@given(seeds, st.integers(1, 6))
def test_word_expectation_matches_oracle_random_tree(seed, ell):
    _check_oracle(random_tree(3, 3, random.Random(seed)), seed, ell)


def _check_oracle(tree, seed, ell):
    rng = rng_for(seed)
    dims = [int(rng.integers(2, 4)) for _ in range(tree.N)]
    mats = [random_matrix(rng, d) for d in dims]
    letters = [int(rng.integers(1, tree.N + 1)) for _ in range(ell)]
    pm = ProductModel(tree, dims, 6)
    ball = truncate(tree, 6)
    member = lambda w: len(w) <= 6 and ball.has(w)
    got = expect(pm, [pm.lam(j, mats[j - 1]) for j in letters])
    want = oracles.word_expectation_oracle(member, [(j, mats[j - 1]) for j in letters])
    assert abs(got - want) <= TOL * max(1.0, abs(want))


def test_sum_moments_match_convolution():
    b = gns_realize(bernoulli(6))
    pm = build_product(Mono(2), [b, b], 6)
    ms = pm.sum_moments(6)
    want = convolve(Mono(2), [bernoulli(6)] * 2, 6).moments
    assert np.allclose(ms, [float(x) for x in want], atol=TOL)


@given(seeds)
def test_composition_isomorphism(seed):
    rng = random.Random(seed)
    nrng = rng_for(seed)
    outer = random_tree(2, 2, rng)
    inner = random_tree(2, 2, rng)
    dims = [nrng.integers(2, 4) for _ in range(3)]
    mats = [random_matrix(nrng, int(d)) for d in dims]
    comp = compose(outer, [inner, IDENTITY])
    flat = ProductModel(comp, dims, height(comp))
    first = ProductModel(inner, dims[:2], height(inner))
    nested = ProductModel(outer, [first.dim, dims[2]], height(outer))

    def flat_op(j):
        return flat.lam(j, mats[j - 1])

    def nested_op(j):
        if j == 3:
            return nested.lam(2, mats[2])
        return nested.lam(1, first.lam(j, mats[j - 1]).toarray())

    for ell in range(1, 5):
        letters = [rng.randint(1, 3) for _ in range(ell)]
        a = expect(flat, [flat_op(j) for j in letters])
        b = expect(nested, [nested_op(j) for j in letters])
        assert abs(a - b) <= TOL * max(1.0, abs(a))


@given(seeds, st.integers(1, 5))
def test_lambda_is_multiplicative(seed, ell):
    rng = random.Random(seed)
    nrng = rng_for(seed)
    tree = random_tree(2, 3, rng)
    dims = [3, 2]
    pm = ProductModel(tree, dims, height(tree))
    a, b = random_matrix(nrng, 3), random_matrix(nrng, 3)
    rest = [pm.lam(j, random_matrix(nrng, dims[j - 1])) for j in [rng.randint(1, 2) for _ in range(ell)]]
    split = expect(pm, [pm.lam(1, a), pm.lam(1, b)] + rest)
    joined = expect(pm, [pm.lam(1, a @ b)] + rest)
    assert abs(split - joined) <= TOL * max(1.0, abs(split))


@given(seeds, st.integers(1, 3), st.integers(1, 5))
def test_index_subset(seed, M, ell):
    rng = random.Random(seed)
    nrng = rng_for(seed)
    tree = random_tree(4, 3, rng)
    dims = [int(nrng.integers(2, 4)) for _ in range(4)]
    mats = [random_matrix(nrng, d) for d in dims]
    letters = [rng.randint(1, M) for _ in range(ell)]
    big = ProductModel(tree, dims, 5)
    small = ProductModel(LetterSubset(tree, M), dims[:M], 5)
    a = expect(big, [big.lam(j, mats[j - 1]) for j in letters])
    b = expect(small, [small.lam(j, mats[j - 1]) for j in letters])
    assert abs(a - b) <= TOL * max(1.0, abs(a))


# -- norms -----------------------------------------------------------------


def test_norm_of_zero_operators():
    pm = ProductModel(Free(2), [3, 3], 4)
    r = norm_bound_check(pm, [np.zeros((3, 3))] * 2)
    assert r.truncated_norm == 0 and r.ok


def test_norm_bernoulli_free():
    b = gns_realize(bernoulli(4)).op
    pm = ProductModel(Free(2), [2, 2], 6)
    r = norm_bound_check(pm, [b, b])
    assert r.truncated_norm <= 2 * math.sqrt(2) + 1
    assert r.ok and r.max_up_degree == 2


@pytest.mark.parametrize("tree", [Free(3), Mono(3), Regular(2, 2), Bool(3)], ids=lambda t: t.kind)
@given(seed=seeds)
def test_norm_bounds_hold(tree, seed):
    nrng = rng_for(seed)
    mats = []
    for _ in range(tree.N):
        a = random_matrix(nrng, 3)
        a[0, 0] = 0
        mats.append(a)
    r = norm_bound_check(ProductModel(tree, [3] * tree.N, 4), mats)
    assert r.ok


def test_norm_requires_centered():
    with pytest.raises(PreconditionError):
        norm_bound_check(ProductModel(Free(2), [2, 2], 2), [np.eye(2), np.zeros((2, 2))])


# -- central limit coupling ------------------------------------------------


def test_coupling_at_level_zero_with_bernoulli():
    b = gns_realize(bernoulli(4))
    # level zero is the single-letter tree
    r = clt_coupling(Free(2), [b], 0, 5)
    assert r.diff_norm == 0 and r.ok


@pytest.mark.parametrize("k", [1, 2])
def test_coupling_free(k):
    nrng = rng_for(4)
    models = [random_centered_model(nrng, 3) for _ in range(2**k)]
    r = clt_coupling(Free(2), models, k, 4)
    assert r.diff_norm <= 2 ** (-k / 2) * max(m.norm for m in models) * (1 + 1e-12)
    assert r.ok


@pytest.mark.parametrize("tree", [Free(2), Mono(2), Regular(2, 2), Regular(3, 1)], ids=lambda t: t.kind)
def test_bernoulli_part_norm_bound(tree):
    nrng = rng_for(8)
    models = [random_centered_model(nrng, 3) for _ in range(tree.N)]
    r = clt_coupling(tree, models, 1, 5)
    n = truncate(tree, 1).n
    assert r.z_norm <= 2 * math.sqrt((tree.N - 1) / (n - 1)) * (1 + 1e-12)


def test_bernoulli_part():
    a = np.arange(9.0).reshape(3, 3)
    z = bernoulli_part(a)
    assert z[0, 0] == 0 and z[1, 1] == 0 and z[0, 2] == 2 and z[2, 0] == 6


def test_coupling_requires_centered():
    with pytest.raises(PreconditionError):
        clt_coupling(Free(2), [PointedModel(np.eye(2))] * 2, 1, 3)


# -- multiplicative --------------------------------------------------------


WORDS = star_words(4)


def test_identity_unitaries_give_point_mass_at_one():
    eye = PointedModel(np.eye(2), "unitary")
    out = multiplicative_moments(Free(2), [eye, eye], WORDS)
    assert all(abs(v - 1) < TOL for v in out.values())


@pytest.mark.parametrize("outer", [Free(2), Mono(2), Bool(2)], ids=lambda t: t.kind)
@pytest.mark.parametrize("inner", [Bool(2), Orth(), Mono(2)], ids=lambda t: t.kind)
def test_multiplicative_operad_morphism(outer, inner):
    nrng = rng_for(12)
    us = [random_unitary(nrng, 2) for _ in range(3)]
    nested = multiplicative_moments(outer, [product_unitary_model(inner, us[:2]), us[2]], WORDS)
    flat = multiplicative_moments(compose(outer, [inner, IDENTITY]), us, WORDS)
    for w in WORDS:
        assert abs(nested[w] - flat[w]) < TOL


def test_multiplicative_increasing_pushforward():
    nrng = rng_for(13)
    u1, u2 = random_unitary(nrng, 2), random_unitary(nrng, 2)
    src = compose(Bool(2), [Orth(), IDENTITY])
    lhs = multiplicative_moments(src, [u1, u2, u2], WORDS)
    rhs = multiplicative_moments(Mono(2), [u1, u2], WORDS)
    for w in WORDS:
        assert abs(lhs[w] - rhs[w]) < TOL


def test_multiplicative_requires_unitary():
    with pytest.raises(PreconditionError):
        multiplicative_moments(Free(2), [PointedModel(np.diag([2.0, 1.0])), random_unitary(rng_for(0))], ["Z"])


def test_model_product_from_symbols():
    b = gns_realize(bernoulli(4))
    pm = ModelProduct(Bool(2), [b, b], 2)
    assert abs(pm.word_expectation([(1, "X"), (1, "X*")]) - 1) < TOL
