import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from strategies import seeds
from treefree.cumulants import alpha, boolean_cumulants, tfree_cumulants
from treefree.digraphs import Regular
from treefree.errors import OrderError, PreconditionError, RootDegreeError, UnboundSymbolError, ValidationError
from treefree.identities import check_identity
from treefree.laws import (
    ScalarLaw,
    bernoulli,
    bn_semigroup,
    boolean_power,
    bp_bijection,
    clt_convergence,
    clt_law,
    convolution_power,
    convolve,
    dilate,
    id_divisor,
    id_law,
    moment_distance,
    point_mass,
    random_centered_law,
    random_rational_law,
    regular_bp_expression,
    self_convolve_levels,
    semicircle,
)
from treefree.partitions import pair_partitions
from treefree.trees import (
    IDENTITY,
    Bool,
    Free,
    LetterSubset,
    Mono,
    Orth,
    ball_agreement_depth,
    compose,
    permute,
    random_tree,
    truncate,
)

ORDER = 8


def laws(seed, k, order=ORDER):
    rng = random.Random(seed)
    return [random_rational_law(rng, order) for _ in range(k)]


@st.composite
def small_trees(draw, N=None, depth=3):
    n = draw(st.integers(1, 3)) if N is None else N
    return random_tree(n, depth, random.Random(draw(seeds)))


# -- convolve --------------------------------------------------------------


@given(small_trees(depth=3), seeds)
def test_series_and_partition_routes_agree(tree, seed):
    ls = laws(seed, tree.N, 7)
    assert convolve(tree, ls, 7, "series") == convolve(tree, ls, 7, "partition")


@given(small_trees(depth=3), seeds)
def test_convolve_matches_colouring_oracle(tree, seed):
    ls = laws(seed, tree.N, 6)
    ball = truncate(tree, 6)
    member = lambda w: len(w) <= 6 and ball.has(w)
    bc = [boolean_cumulants(l.moments).values for l in ls]
    expected = oracles.convolution_oracle(member, tree.N, bc, 6)
    assert list(convolve(tree, ls, 6).moments) == expected


@pytest.mark.parametrize(
    "spec, member",
    [(Free(2), oracles.free_member(2)), (Mono(3), oracles.mono_member(3)), (Regular(2, 2), oracles.regular_member(2, 2))],
)
def test_named_trees_match_colouring_oracle(spec, member):
    ls = laws(7, spec.N, 6)
    bc = [boolean_cumulants(l.moments).values for l in ls]
    assert list(convolve(spec, ls, 6).moments) == oracles.convolution_oracle(member, spec.N, bc, 6)


@given(seeds, st.integers(1, 3))
def test_letter_subset_pads_with_point_mass_at_zero(seed, M):
    tree = random_tree(4, 3, random.Random(seed))
    ls = laws(seed, M)
    padded = ls + [point_mass(0, ORDER)] * (4 - M)
    assert convolve(LetterSubset(tree, M), ls, ORDER) == convolve(tree, padded, ORDER)


def test_bernoulli_boolean_square():
    b = bernoulli(ORDER)
    out = convolve(Bool(2), [b, b], ORDER)
    assert out.moments == (0, 2, 0, 4, 0, 8, 0, 16)


@given(small_trees(), seeds)
def test_point_mass_at_zero_is_right_unit(tree, seed):
    if not truncate(tree, 1).has((1,)) or tree.N < 2:
        return
    mu = laws(seed, 1)[0]
    args = [mu] + [point_mass(0, ORDER)] * (tree.N - 1)
    assert convolve(tree, args, ORDER) == mu


@given(seeds, small_trees(N=2))
def test_variance_adds_for_centered_laws(seed, tree):
    ball = truncate(tree, 1)
    if not (ball.has((1,)) and ball.has((2,))):
        return
    rng = random.Random(seed)
    mu, nu = random_centered_law(rng, 4), random_centered_law(rng, 4)
    out = convolve(tree, [mu, nu], 4)
    assert out.moments[1] == mu.moments[1] + nu.moments[1]


def test_convolve_order_error():
    with pytest.raises(OrderError):
        convolve(Free(2), [bernoulli(4), bernoulli(3)], 4)


def test_orthogonal_convolution_needs_no_root_degree():
    out = convolve(Orth(), [bernoulli(6), bernoulli(6)], 6)
    assert out.order == 6


# -- invariants ------------------------------------------------------------


@given(small_trees(N=2, depth=4), small_trees(N=2, depth=4), seeds)
def test_moment_metric_continuity(a, b, seed):
    ell = ball_agreement_depth(a, b, 4)
    ell = 4 if ell == float("inf") else ell
    if ell == 0:
        return
    ls = laws(seed, 2, ell)
    assert convolve(a, ls, ell) == convolve(b, ls, ell)


@given(small_trees(), seeds, st.fractions(min_value=-3, max_value=3, max_denominator=4))
def test_homogeneity(tree, seed, c):
    ls = laws(seed, tree.N)
    lhs = convolve(tree, [dilate(l, c) for l in ls], ORDER)
    assert lhs.moments == dilate(convolve(tree, ls, ORDER), c).moments


@given(small_trees(), seeds)
def test_radius_bound(tree, seed):
    ls = laws(seed, tree.N)
    out = convolve(tree, ls, ORDER)
    R = sum(l.radius for l in ls)
    assert out.radius == pytest.approx(R)
    for ell, m in enumerate(out.moments, start=1):
        assert abs(float(m)) <= R**ell * (1 + 1e-12)


@given(small_trees(N=3), st.permutations([1, 2, 3]), seeds)
def test_permutation_equivariance(tree, sigma, seed):
    ls = laws(seed, 3)
    lhs = convolve(permute(tree, sigma), [ls[s - 1] for s in sigma], ORDER)
    assert lhs == convolve(tree, ls, ORDER)


@given(seeds)
def test_binary_associativity_and_commutativity(seed):
    a, b, c = laws(seed, 3)
    for op in (Free(2), Bool(2), Mono(2)):
        left = convolve(op, [convolve(op, [a, b], ORDER), c], ORDER)
        right = convolve(op, [a, convolve(op, [b, c], ORDER)], ORDER)
        assert left == right
    for op in (Free(2), Bool(2)):
        assert convolve(op, [a, b], ORDER) == convolve(op, [b, a], ORDER)


def test_monotone_is_not_commutative():
    a = bernoulli(ORDER)
    b = point_mass(1, ORDER)
    assert convolve(Mono(2), [a, b], ORDER) != convolve(Mono(2), [b, a], ORDER)


# -- powers ----------------------------------------------------------------


@given(seeds)
def test_power_one_is_identity(seed):
    mu = laws(seed, 1)[0]
    assert convolution_power(mu, Regular(2, 2), 1, ORDER) == mu


@pytest.mark.parametrize("spec", [Free(2), Free(3), Mono(2), Regular(2, 2), Regular(3, 1)])
def test_integer_power_is_self_convolution(spec):
    mu = laws(3, 1)[0]
    n = truncate(spec, 1).n
    assert convolve(spec, [mu] * spec.N, ORDER) == convolution_power(mu, spec, n, ORDER)


@given(seeds)
def test_free_boolean_power_exchange(seed):
    mu = laws(seed, 1)[0]
    lhs = boolean_power(convolution_power(mu, Free(2), 3, ORDER), 2, ORDER)
    rhs = convolution_power(boolean_power(mu, 4, ORDER), Free(2), Fraction(3, 2), ORDER)
    assert lhs == rhs


def test_power_needs_two_root_letters():
    with pytest.raises(RootDegreeError):
        convolution_power(bernoulli(4), Orth(), 2, 4)


# -- central limit ---------------------------------------------------------


@pytest.mark.parametrize(
    "spec, m4",
    [(Free(2), 2), (Bool(3), 1), (Regular(2, 2), 1 + Fraction(2, 1)), (Regular(3, 2), 1 + Fraction(2, 2)), (Regular(4, 1), 1 + Fraction(1, 3))],
)
def test_clt_fourth_moment(spec, m4):
    law = clt_law(spec, 1, 6)
    assert law.moments[3] == m4
    assert law.moments[0] == law.moments[2] == law.moments[4] == 0


def test_clt_law_is_pair_partition_sum():
    ball = truncate(Mono(3), 4)
    law = clt_law(ball, Fraction(2), 8)
    for ell in (2, 4, 6, 8):
        expected = sum(alpha(ball, pi) for pi in pair_partitions(ell)) * 2 ** (ell // 2)
        assert law.moment(ell) == expected


def test_free_clt_is_semicircle():
    assert clt_law(Free(2), 1, 8) == ScalarLaw(semicircle(8).moments)


@pytest.mark.parametrize("spec", [Free(2), Mono(2), Regular(2, 2)])
def test_clt_routes_agree(spec):
    mu = random_centered_law(random.Random(5), 6)
    fast = clt_convergence(mu, spec, 2, 6, route="cumulant")
    slow = clt_convergence(mu, spec, 2, 6, route="iterated")
    assert [r.moments for r in fast] == [r.moments for r in slow]


def test_clt_zero_level_gap_is_direct():
    mu = random_centered_law(random.Random(9), 6)
    row = clt_convergence(mu, Free(2), 0, 6)[0]
    limit = clt_law(Free(2), mu.moments[1], 6)
    assert row.gaps == tuple(abs(a - b) for a, b in zip(mu.moments, limit.moments))


def test_free_clt_fourth_moment_gap():
    mu = ScalarLaw(bernoulli(4).moments)
    for k, row in enumerate(clt_convergence(mu, Free(2), 4, 4)):
        # fourth free cumulant of a Bernoulli law is -1, scaled by n^k / n^{2k}
        assert row.gaps[3] == Fraction(1, 2**k)


def test_clt_requires_centered():
    with pytest.raises(PreconditionError):
        clt_convergence(point_mass(1, 4), Free(2), 1, 4)


# -- infinitely divisible --------------------------------------------------


def test_id_law_with_point_mass_sigma_is_clt():
    sigma = point_mass(0, ORDER)
    assert id_law(Regular(2, 2), 0, sigma, ORDER, mass=3) == clt_law(Regular(2, 2), 3, ORDER)


def test_boolean_id_law_has_expected_boolean_cumulants():
    sigma = laws(2, 1)[0]
    law = id_law(Bool(2), Fraction(1, 2), sigma, ORDER)
    expected = (Fraction(1, 2), 1) + sigma.moments[: ORDER - 2]
    assert boolean_cumulants(law.moments).values == expected


@pytest.mark.parametrize("spec", [Free(2), Mono(2), Regular(2, 2)])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_id_divisibility(spec, k):
    sigma = laws(11, 1)[0]
    mu = id_law(spec, Fraction(1, 3), sigma, ORDER)
    piece = id_divisor(spec, Fraction(1, 3), sigma, ORDER, k)
    assert self_convolve_levels(piece, spec, k, ORDER) == mu


# -- BP and BN -------------------------------------------------------------


@given(seeds)
def test_bp_same_tree_is_identity(seed):
    mu = laws(seed, 1)[0]
    assert bp_bijection(mu, Mono(2), Mono(2), ORDER) == mu


@pytest.mark.parametrize("n, d", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_bp_regular_to_boolean_is_bn(n, d):
    mu = laws(13, 1)[0]
    lhs = bp_bijection(mu, Bool(2), Regular(n, d), ORDER)
    assert lhs == bn_semigroup(mu, Fraction(d, n - 1), ORDER)


@pytest.mark.parametrize("spec", [Free(2), Free(3), Regular(2, 2), Regular(3, 1), Regular(3, 2)])
def test_bp_to_boolean_via_powers(spec):
    mu = laws(17, 1)[0]
    assert bp_bijection(mu, Bool(2), spec, ORDER) == regular_bp_expression(mu, spec, ORDER)


def test_bp_transplants_cumulants():
    mu = laws(19, 1)[0]
    out = bp_bijection(mu, Mono(2), Free(2), ORDER)
    assert tfree_cumulants(out.moments, truncate(Free(2), 4)) == tfree_cumulants(mu.moments, truncate(Mono(2), 4))


# -- identities ------------------------------------------------------------


NAMED = [
    ("(mono m n)", "(bool (orth m n) n)"),
    ("(free m n)", "(antimono (sub m n) n)"),
    ("(sub (free a b) n)", "(free (sub a n) (sub b n))"),
]


@pytest.mark.parametrize("lhs, rhs", NAMED)
@given(seed=seeds)
def test_named_identities_hold_exactly(lhs, rhs, seed):
    rng = random.Random(seed)
    bindings = {s: random_rational_law(rng, ORDER) for s in ("m", "n", "a", "b")}
    v = check_identity(lhs, rhs, bindings, ORDER)
    assert v.verdict == "equal-exact"


@given(seeds)
def test_operad_morphism_identity(seed):
    rng = random.Random(seed)
    outer = random_tree(2, 3, rng)
    inner = random_tree(2, 3, rng)
    a, b, c = (random_rational_law(rng, ORDER) for _ in range(3))
    lhs = convolve(compose(outer, [inner, IDENTITY]), [a, b, c], ORDER)
    rhs = convolve(outer, [convolve(inner, [a, b], ORDER), c], ORDER)
    assert lhs == rhs


def test_false_identity_reports_first_difference():
    b = {"m": bernoulli(ORDER), "n": point_mass(1, ORDER)}
    v = check_identity("(mono m n)", "(mono n m)", b, ORDER)
    assert not v.equal and v.first_difference is not None


def test_float_identity_uses_tolerance():
    b = {"m": bernoulli(ORDER).to_float(), "n": semicircle(ORDER).to_float()}
    assert check_identity("(free m n)", "(free n m)", b, ORDER).verdict == "equal-tol"


def test_unbound_symbol():
    with pytest.raises(UnboundSymbolError):
        check_identity("(free m n)", "(free n m)", {"m": bernoulli(4)}, 4)


def test_bad_operator():
    with pytest.raises(ValidationError):
        check_identity("(frob m n)", "m", {"m": bernoulli(4), "n": bernoulli(4)}, 4)


# -- law utilities ---------------------------------------------------------


def test_hankel_validation():
    assert bernoulli(8).is_positive()
    assert not ScalarLaw((0, -1)).is_positive()
    assert ScalarLaw((0, 1, 0, 1), 1.0).validate()


def test_moment_distance():
    mu, nu = bernoulli(4), point_mass(0, 4)
    assert moment_distance(mu, nu, 1.0) == pytest.approx(1 / 4)
    assert moment_distance(mu, mu, 1.0) == 0
