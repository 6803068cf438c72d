"""Command line: ``treefree tree|digraph|alpha|cumulants|convolve|identity|clt|ktransform|model``.

Results go to stdout as canonical JSON (sorted keys, no spaces) or CSV with a
header row.  Failures print ``{"error": ..., "kind": ...}`` and exit with 2
(validation), 3 (numerical) or 4 (size limit).
"""

from __future__ import annotations

import csv
import functools
import io
import random
import sys

import click
import numpy as np

from .errors import TreeFreeError, ValidationError
from .jsonio import (
    dumps,
    law_to_json,
    model_from_json,
    model_to_json,
    number_to_json,
    parse_digraph,
    parse_law,
    parse_tree,
    tree_to_json,
)
from .trees import format_word

DEFAULT_ORDER = 8
COMBINATORIAL_TOL = 1e-10
CONTOUR_NODES = 4096
DENSITY_EPS = 1e-3


def _emit(obj):
    click.echo(dumps(obj))


def _emit_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    click.echo(buf.getvalue(), nl=False)


def _fail(exc: TreeFreeError):
    click.echo(dumps({"error": str(exc), "kind": type(exc).__name__}))
    sys.exit(exc.exit_code)


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TreeFreeError as exc:
            _fail(exc)
        except (ValueError, ZeroDivisionError) as exc:
            _fail(ValidationError(str(exc)))

    return wrapper


def _vertices(ball):
    return {"vertices": [format_word(s) for s in sorted(ball.vertices)]}


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from None


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Tree-indexed non-commutative independences: trees, cumulants, convolutions."""


# ---------------------------------------------------------------------------
# trees


@main.group()
def tree():
    """Build, compare and transport rooted subtrees of the free tree."""


@tree.command("truncate")
@click.argument("spec", nargs=-1, required=True)
@click.option("--depth", type=int, default=4, show_default=True)
@_guard
def tree_truncate(spec, depth):
    """List the vertices of a tree up to DEPTH."""
    _emit(_vertices(parse_tree(" ".join(spec)).truncate(depth)))


@tree.command("compose")
@click.argument("outer")
@click.argument("inners", nargs=-1, required=True)
@click.option("--depth", type=int, default=4, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print the composite tree description instead of its vertices.")
@_guard
def tree_compose(outer, inners, depth, as_json):
    """Compose OUTER with one inner tree per letter."""
    from .trees import compose

    t = compose(parse_tree(outer), [parse_tree(x) for x in inners])
    _emit(tree_to_json(t) if as_json else _vertices(t.truncate(depth)))


@tree.command("permute")
@click.argument("spec")
@click.argument("sigma")
@click.option("--depth", type=int, default=4, show_default=True)
@_guard
def tree_permute(spec, sigma, depth):
    """Relabel letters by the permutation SIGMA (e.g. "2,1")."""
    from .trees import permute

    _emit(_vertices(permute(parse_tree(spec), _ints(sigma)).truncate(depth)))


@tree.command("metric")
@click.argument("first")
@click.argument("second")
@click.option("--max-depth", type=int, default=8, show_default=True)
@_guard
def tree_metric(first, second, max_depth):
    """Largest depth at which the two trees agree (null if they agree through MAX_DEPTH)."""
    from .trees import ball_agreement_depth

    d = ball_agreement_depth(parse_tree(first), parse_tree(second), max_depth)
    _emit({"agreement_depth": d if d != float("inf") else None})


@tree.command("pushforward-check")
@click.argument("src")
@click.argument("dst")
@click.option("--psi", required=True, help='Letter map, e.g. "1,2,2".')
@click.option("--depth", type=int, default=6, show_default=True)
@_guard
def tree_pushforward(src, dst, psi, depth):
    """Check that PSI maps SRC bijectively onto DST restricted to its range."""
    from .trees import pushforward_check

    r = pushforward_check(parse_tree(src), parse_tree(dst), _ints(psi), depth)
    _emit({"ok": r.ok, "witness": r.witness, "reason": r.reason})


# ---------------------------------------------------------------------------
# digraphs


@main.group()
def digraph():
    """Digraphs and their walk trees."""


@digraph.command("walk")
@click.argument("graph")
@click.option("--depth", type=int, default=4, show_default=True)
@_guard
def digraph_walk(graph, depth):
    """Vertices of the walk tree of GRAPH."""
    from .digraphs import walk_tree

    _emit(_vertices(walk_tree(parse_digraph(graph)).truncate(depth)))


@digraph.command("compose")
@click.argument("outer")
@click.argument("inners", nargs=-1, required=True)
@_guard
def digraph_compose(outer, inners):
    """Substitute one digraph per vertex of OUTER."""
    from .digraphs import compose_digraph

    _emit(compose_digraph(parse_digraph(outer), [parse_digraph(x) for x in inners]).to_json())


# ---------------------------------------------------------------------------
# coefficients and cumulants


def _ball(tree_text, depth):
    return parse_tree(tree_text).truncate(depth)


@main.command()
@click.option("--tree", "tree_text", required=True)
@click.option("--partition", required=True, help='Restricted growth string "1,2,1" or blocks "{1,3}{2}".')
@_guard
def alpha(tree_text, partition):
    """The moment-cumulant coefficient of a non-crossing partition."""
    from .cumulants import alpha as alpha_fn
    from .partitions import NCPartition

    pi = NCPartition.from_string(partition)
    click.echo(str(alpha_fn(_ball(tree_text, max(pi.depth, 1)), pi)))


@main.command()
@click.option("--tree", "tree_text", required=True)
@click.option("--law", "law_text", required=True)
@click.option("--order", type=int, default=DEFAULT_ORDER, show_default=True)
@click.option("--flavor", type=click.Choice(["tree", "boolean"]), default="tree", show_default=True)
@_guard
def cumulants(tree_text, law_text, order, flavor):
    """Cumulants of a law for a tree, or its Boolean cumulants."""
    from .cumulants import boolean_cumulants, required_depth, tfree_cumulants

    law = parse_law(law_text, order)
    if flavor == "boolean":
        cv = boolean_cumulants(law.moments[:order])
    else:
        cv = tfree_cumulants(law.moments[:order], _ball(tree_text, required_depth(order)))
    _emit({"flavor": cv.flavor, "values": [number_to_json(x) for x in cv.values]})


@main.command()
@click.option("--tree", "tree_text", required=True)
@click.option("--law", "law_texts", multiple=True, required=True, help="One per letter; repeat the option.")
@click.option("--order", type=int, default=DEFAULT_ORDER, show_default=True)
@click.option("--method", type=click.Choice(["series", "partition"]), default="series", show_default=True)
@click.option("--float", "as_float", is_flag=True, help="Use floating point instead of exact rationals.")
@_guard
def convolve(tree_text, law_texts, order, method, as_float):
    """Moments of the tree convolution of the given laws."""
    from .laws import convolve as conv

    t = parse_tree(tree_text)
    laws = [parse_law(x, order) for x in law_texts]
    if len(laws) == 1 and t.N > 1:
        laws = laws * t.N
    if as_float:
        laws = [l.to_float() for l in laws]
    _emit(law_to_json(conv(t, laws, order, method=method)))


def _default_bindings(names, order):
    from .laws import random_rational_law

    return {name: random_rational_law(random.Random(1000 + i), order) for i, name in enumerate(sorted(names))}


@main.command()
@click.argument("equation")
@click.option("--bind", "binds", multiple=True, help="NAME=LAW; unbound symbols get seeded random rational laws.")
@click.option("--order", type=int, default=DEFAULT_ORDER, show_default=True)
@click.option("--tol", type=float, default=COMBINATORIAL_TOL, show_default=True)
@_guard
def identity(equation, binds, order, tol):
    """Check "<lhs> == <rhs>" moment by moment; exit 0 iff the sides agree."""
    from .identities import check_identity, split_equation, symbols

    lhs, rhs = split_equation(equation)
    given = {}
    for b in binds:
        name, sep, law = b.partition("=")
        if not sep:
            raise ValidationError(f"binding {b!r} must look like NAME=LAW")
        given[name.strip()] = parse_law(law, order)
    names = (symbols(lhs) | symbols(rhs)) - set(given)
    bindings = {**_default_bindings(names, order), **given}
    v = check_identity(lhs, rhs, bindings, order, tol)
    _emit({"verdict": v.verdict, "first_difference": v.first_difference})
    sys.exit(0 if v.equal else 1)


@main.command()
@click.option("--tree", "tree_text", required=True)
@click.option("--law", "law_text", required=True)
@click.option("--kmax", type=int, default=4, show_default=True)
@click.option("--order", type=int, default=6, show_default=True)
@click.option("--route", type=click.Choice(["cumulant", "iterated"]), default="cumulant", show_default=True)
@_guard
def clt(tree_text, law_text, kmax, order, route):
    """Moment gaps between rescaled self-convolutions and the central limit law (CSV)."""
    from .laws import clt_convergence

    rows = clt_convergence(parse_law(law_text, order), parse_tree(tree_text), kmax, order, route=route)
    out = []
    for row in rows:
        for ell, g in enumerate(row.gaps, start=1):
            out.append((row.k, ell, repr(float(g))))
    _emit_csv(("k", "order", "gap"), out)


@main.command()
@click.option("--tree", "tree_text", required=True)
@click.option("--law", "law_texts", multiple=True, required=True)
@click.option("--order", type=int, default=16, show_default=True, help="Moments used to build each Jacobi model.")
@click.option("--depth", type=int, default=6, show_default=True, help="Ball radius used for infinite trees.")
@click.option("--xmin", type=float, default=-4.0, show_default=True)
@click.option("--xmax", type=float, default=4.0, show_default=True)
@click.option("--points", type=int, default=81, show_default=True)
@click.option("--eps", type=float, default=DENSITY_EPS, show_default=True)
@click.option("--moments", "moment_order", type=int, default=None, help="Print moments recovered by contour integration instead.")
@click.option("--nodes", type=int, default=CONTOUR_NODES, show_default=True)
@click.option("--fixed-point", is_flag=True, help="For walk trees, solve the digraph fixed-point system (only valid far from the support).")
@_guard
def ktransform(tree_text, law_texts, order, depth, xmin, xmax, points, eps, moment_order, nodes, fixed_point):
    """Density of a tree convolution from its K transform (CSV x, density)."""
    from .digraphs import Walk
    from .transforms import DigraphHandle, FiniteTreeHandle, cauchy_from_law, density, moments_from_handle

    t = parse_tree(tree_text)
    laws = [parse_law(x, order) for x in law_texts]
    if len(laws) == 1 and t.N > 1:
        laws = laws * t.N
    handles = [cauchy_from_law(l) for l in laws]
    if fixed_point:
        if not isinstance(t, Walk):
            raise ValidationError("--fixed-point needs a walk tree (complete:N, increasing:N, ...)")
        h = DigraphHandle(t.digraph, handles)
    else:
        h = FiniteTreeHandle(t.truncate(depth), handles)
    if moment_order is not None:
        ms, err = moments_from_handle(h, moment_order, nodes=nodes, return_error=True)
        _emit({"moments": list(ms), "error_estimate": err})
        return
    xs = np.linspace(xmin, xmax, points)
    ys = density(h, xs, eps)
    _emit_csv(("x", "density"), [(repr(float(x)), repr(float(y))) for x, y in zip(xs, ys)])


# ---------------------------------------------------------------------------
# operator models


@main.group()
def model():
    """Finite-dimensional operator realisations."""


@model.command("gns")
@click.option("--law", "law_text", required=True)
@click.option("--order", type=int, default=DEFAULT_ORDER, show_default=True)
@click.option("--degree", type=int, default=None)
@_guard
def model_gns(law_text, order, degree):
    """Jacobi matrix whose first basis vector reproduces the law."""
    from .models import gns_realize

    _emit(model_to_json(gns_realize(parse_law(law_text, order), degree)))


def _models(law_texts, model_files, order):
    import json

    from .models import gns_realize

    if model_files:
        out = []
        for path in model_files:
            with open(path) as fh:
                out.append(model_from_json(json.load(fh)))
        return out
    return [gns_realize(parse_law(x, order)) for x in law_texts]


@model.command("moments")
@click.option("--tree", "tree_text", required=True)
@click.option("--law", "law_texts", multiple=True)
@click.option("--model", "model_files", multiple=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--order", type=int, default=6, show_default=True)
@click.option("--level", type=int, default=None, help="Truncation level (default: ORDER).")
@_guard
def model_moments(tree_text, law_texts, model_files, order, level):
    """Moments of the sum in the product space next to the combinatorial value (CSV)."""
    from .laws import convolve as conv
    from .models import ModelProduct

    t = parse_tree(tree_text)
    ms = _models(law_texts, model_files, order + 2)
    if len(ms) == 1 and t.N > 1:
        ms = ms * t.N
    level = level if level is not None else order
    pm = ModelProduct(t, ms, level)
    got = pm.sum_moments(order)
    ref = conv(t, [m.law(order) for m in ms], order)
    rows = [(ell, repr(float(r)), repr(complex(g).real), repr(complex(g).imag)) for ell, (r, g) in enumerate(zip(ref.moments, got), start=1)]
    _emit_csv(("order", "combinatorial", "model_re", "model_im"), rows)


@model.command("norm")
@click.option("--tree", "tree_text", required=True)
@click.option("--level", type=int, default=6, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--dim", type=int, default=3, show_default=True)
@_guard
def model_norm(tree_text, level, seed, dim):
    """Truncated norm of a random centered sum against the a priori bounds."""
    from .models import ModelProduct, norm_bound_check, random_centered_model

    t = parse_tree(tree_text)
    rng = np.random.default_rng(seed)
    ms = [random_centered_model(rng, dim) for _ in range(t.N)]
    r = norm_bound_check(ModelProduct(t, ms, level), [m.op for m in ms])
    _emit({
        "truncated_norm": r.truncated_norm,
        "bound": r.bound,
        "corollary_sum_bound": r.corollary_sum_bound,
        "corollary_degree_bound": r.corollary_degree_bound,
        "max_up_degree": r.max_up_degree,
        "ok": r.ok,
    })


@model.command("unitary")
@click.option("--tree", "tree_text", required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-len", type=int, default=3, show_default=True)
@click.option("--level", type=int, default=None)
@_guard
def model_unitary(tree_text, seed, max_len, level):
    """*-moments of the multiplicative product of random 2x2 unitaries (CSV)."""
    from .models import multiplicative_moments, random_unitary, star_words

    t = parse_tree(tree_text)
    rng = np.random.default_rng(seed)
    us = [random_unitary(rng) for _ in range(t.N)]
    words = star_words(max_len)
    vals = multiplicative_moments(t, us, words, level)
    _emit_csv(("word", "re", "im"), [(w, repr(vals[w].real), repr(vals[w].imag)) for w in words])


if __name__ == "__main__":  # pragma: no cover
    main()
