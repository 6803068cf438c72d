import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import explicit_trees, permutations, seeds
from treefree.errors import (
    DepthError,
    IncompatibleAlphabetError,
    InvalidLetterError,
    InvalidPermutationError,
    InvalidTreeError,
)
from treefree.trees import (
    IDENTITY,
    AntiMono,
    Bool,
    Explicit,
    Free,
    Mono,
    Orth,
    Sub,
    ball_agreement_depth,
    compose,
    format_word,
    permute,
    pushforward_check,
    random_tree,
    reduce_string,
    spec_from_json,
    spec_to_json,
    truncate,
)


def words(ball):
    return {format_word(s) for s in ball.vertices}


# -- reduce_string ---------------------------------------------------------


@pytest.mark.parametrize(
    "raw, reduced",
    [("112331", "1231"), ("1221311", "12131"), ("", "")],
)
def test_reduce_string_examples(raw, reduced):
    assert format_word(reduce_string(raw)) == reduced


def test_reduce_string_rejects_out_of_range():
    with pytest.raises(InvalidLetterError):
        reduce_string("1203", N=3)


# -- truncate --------------------------------------------------------------


@pytest.mark.parametrize(
    "spec, depth, expected",
    [
        (Bool(3), 5, {"", "1", "2", "3"}),
        (Mono(2), 2, {"", "1", "2", "21"}),
        (Free(2), 2, {"", "1", "2", "12", "21"}),
        (Orth(), 9, {"", "1", "21"}),
        (Sub(), 3, {"", "1", "21", "121"}),
    ],
)
def test_truncate_examples(spec, depth, expected):
    assert words(truncate(spec, depth)) == expected


def test_truncation_order_is_length_lexicographic():
    verts = truncate(Free(3), 2).vertices
    keys = [(len(s), s) for s in verts]
    assert keys == sorted(keys)


def test_explicit_rejects_missing_suffix():
    with pytest.raises(InvalidTreeError):
        Explicit(2, [(), (1,), (2, 1), (1, 2)])  # "12" needs "2"


def test_explicit_rejects_non_alternating():
    with pytest.raises(InvalidTreeError):
        Explicit(2, [(), (1,), (1, 1)])


def test_depth_guard_on_membership():
    ball = truncate(Free(2), 2)
    with pytest.raises(DepthError):
        (1, 2, 1) in ball
    with pytest.raises(DepthError):
        ball.children((1, 2))


@given(explicit_trees(depth=3))
def test_suffix_closure(tree):
    ball = truncate(tree, 4)
    for s in ball.vertices:
        for k in range(len(s)):
            assert ball.has(s[k + 1 :])


@given(explicit_trees(depth=3), st.integers(0, 4))
def test_ball_is_exactly_short_members(tree, depth):
    ball = truncate(tree, depth)
    expected = {s for s in tree.vertices if len(s) <= depth}
    assert set(ball.vertices) == expected


# -- compose ---------------------------------------------------------------


def test_compose_boolean_of_orthogonal_and_identity():
    t = compose(Bool(2), [Orth(), IDENTITY])
    assert words(truncate(t, 3)) == {"", "1", "21", "3"}


def test_compose_alphabet_mismatch():
    with pytest.raises(IncompatibleAlphabetError):
        compose(Free(2), [Free(2)])


@given(explicit_trees(depth=3), st.integers(0, 4))
def test_operad_identities(tree, depth):
    ball = truncate(tree, depth)
    assert truncate(compose(tree, [IDENTITY] * tree.N), depth) == ball
    assert truncate(compose(IDENTITY, [tree]), depth) == ball


@given(seeds)
def test_operad_associativity(seed):
    rng = random.Random(seed)
    outer = random_tree(2, 2, rng)
    mids = [random_tree(2, 2, rng) for _ in range(2)]
    inners = [random_tree(rng.randint(1, 2), 2, rng) for _ in range(4)]
    left = compose(outer, [compose(mids[0], inners[:2]), compose(mids[1], inners[2:])])
    right = compose(compose(outer, mids), inners)
    for d in range(5):
        assert truncate(left, d) == truncate(right, d)


@given(seeds, st.integers(1, 3))
def test_ball_composition_bound(seed, ell):
    """Arguments agreeing on B_ell give composites agreeing on B_ell."""
    rng = random.Random(seed)
    outer_a = random_tree(2, 3, rng)
    inner_a = [random_tree(2, 3, rng) for _ in range(2)]
    # second family: equal up to ell, arbitrary growth below
    extend = lambda t: _extend_below(t, ell)
    outer_b = extend(outer_a)
    inner_b = [extend(t) for t in inner_a]
    for a, b in [(outer_a, outer_b)] + list(zip(inner_a, inner_b)):
        assert truncate(a, ell) == truncate(b, ell)
    agree = ball_agreement_depth(compose(outer_a, inner_a), compose(outer_b, inner_b), 6)
    assert agree >= ell


def _extend_below(t, ell):
    """Keep the ball of radius ell and then grow every level-ell vertex by all alternating words."""
    verts = {s for s in t.vertices if len(s) <= ell}
    full = truncate(Free(t.N), ell + 2).vertices
    for s in full:
        if len(s) > ell and s[len(s) - ell :] in verts:
            verts.add(s)
    return Explicit(t.N, sorted(verts))


# -- permute ---------------------------------------------------------------


def test_permute_reverses_monotone():
    for N in (2, 3, 4):
        sigma = [N - i + 1 for i in range(1, N + 1)]
        assert truncate(permute(Mono(N), sigma), 4) == truncate(AntiMono(N), 4)


@given(st.integers(2, 4).flatmap(lambda N: st.tuples(st.just(N), permutations(N))))
def test_free_and_boolean_are_symmetric(arg):
    N, sigma = arg
    assert truncate(permute(Free(N), sigma), 3) == truncate(Free(N), 3)
    assert truncate(permute(Bool(N), sigma), 3) == truncate(Bool(N), 3)


def test_permute_rejects_non_bijection():
    with pytest.raises(InvalidPermutationError):
        permute(Free(3), [1, 1, 2])
    with pytest.raises(InvalidPermutationError):
        permute(Free(3), [1, 2])


@given(explicit_trees(N=3, depth=3), permutations(3), permutations(3))
def test_permutation_is_right_action(tree, sigma, tau):
    st_ = tuple(sigma[tau[i] - 1] for i in range(3))  # (sigma tau)(i) = sigma(tau(i))
    lhs = permute(permute(tree, sigma), tau)
    rhs = permute(tree, st_)
    for d in range(4):
        assert truncate(lhs, d) == truncate(rhs, d)


# -- metric ----------------------------------------------------------------


def test_agreement_depth_examples():
    assert ball_agreement_depth(Free(2), Mono(2), 5) == 1
    assert ball_agreement_depth(Bool(2), Mono(2), 5) == 1
    assert ball_agreement_depth(Free(3), Free(3), 5) == math.inf


def test_agreement_depth_alphabet_mismatch():
    with pytest.raises(IncompatibleAlphabetError):
        ball_agreement_depth(Free(2), Free(3), 3)


@given(explicit_trees(N=2), explicit_trees(N=2), explicit_trees(N=2))
def test_metric_is_ultrametric(a, b, c):
    d = lambda x, y: ball_agreement_depth(x, y, 5)
    # agreement depth is the negative log distance: d(a,c) >= min(d(a,b), d(b,c))
    assert d(a, c) >= min(d(a, b), d(b, c))


# -- pushforward -----------------------------------------------------------


def test_pushforward_boolean_orthogonal_onto_monotone():
    src = compose(Bool(2), [Orth(), IDENTITY])
    assert pushforward_check(src, Mono(2), (1, 2, 2), 6).ok


def test_pushforward_antimonotone_subordination_onto_free():
    src = compose(AntiMono(2), [Sub(), IDENTITY])
    for depth in range(5):
        assert pushforward_check(src, Free(2), (1, 2, 2), depth).ok


def test_pushforward_identity():
    assert pushforward_check(Mono(3), Mono(3), (1, 2, 3), 5).ok


def test_pushforward_witness():
    r = pushforward_check(Free(2), Bool(2), (1, 2), 2)
    assert not r.ok and r.witness == "12"


# -- json ------------------------------------------------------------------


@given(explicit_trees(depth=3))
def test_json_round_trip_explicit(tree):
    assert truncate(spec_from_json(spec_to_json(tree)), 4) == truncate(tree, 4)


@pytest.mark.parametrize(
    "spec",
    [Free(3), Bool(2), Mono(3), AntiMono(2), Orth(), Sub(), IDENTITY, compose(Bool(2), [Orth(), IDENTITY]), permute(Mono(3), (3, 1, 2))],
)
def test_json_round_trip_named(spec):
    again = spec_from_json(spec_to_json(spec))
    assert truncate(again, 4) == truncate(spec, 4)
