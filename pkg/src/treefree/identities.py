"""A small prefix expression language over laws, and an identity checker.

Examples::

    (mono m n)
    (bool (orth m n) n)
    (conv regular:2,2 a b c)
    (power free:2 3/2 m)   (boolpow 2 m)   (dilate 1/2 m)   (bn 1 m)
    (bp bool:2 regular:2,2 m)

Binary operator names map to two-letter trees: ``free`` (free), ``bool``
(Boolean), ``mono``/``antimono`` (monotone and anti-monotone), ``orth``
(orthogonal) and ``sub`` (subordination).  ``free``, ``bool``, ``mono`` and
``antimono`` accept any number of arguments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

from .errors import UnboundSymbolError, ValidationError
from .laws import (
    ScalarLaw,
    as_number,
    bn_semigroup,
    boolean_power,
    bp_bijection,
    convolution_power,
    convolve,
    dilate,
    free_power,
    shift,
)
from .trees import AntiMono, Bool, Free, Mono, Orth, Sub

Expr = Union[str, tuple]

_NARY = {"free": Free, "bool": Bool, "mono": Mono, "antimono": AntiMono}
_BINARY = {"orth": Orth, "sub": Sub}


def parse_expression(text: str) -> Expr:
    tokens = re.findall(r"\(|\)|[^\s()]+", text)
    if not tokens:
        raise ValidationError("empty expression")
    pos = 0

    def walk():
        nonlocal pos
        if pos >= len(tokens):
            raise ValidationError("unexpected end of expression")
        tok = tokens[pos]
        pos += 1
        if tok == ")":
            raise ValidationError("unexpected ')'")
        if tok != "(":
            return tok
        items = []
        while True:
            if pos >= len(tokens):
                raise ValidationError("missing ')'")
            if tokens[pos] == ")":
                pos += 1
                break
            items.append(walk())
        if not items or not isinstance(items[0], str):
            raise ValidationError("expression must start with an operator name")
        return tuple(items)

    out = walk()
    if pos != len(tokens):
        raise ValidationError(f"trailing tokens after expression: {' '.join(tokens[pos:])}")
    return out


def split_equation(text: str) -> tuple:
    if "==" not in text:
        raise ValidationError("identity must have the form '<lhs> == <rhs>'")
    lhs, rhs = text.split("==", 1)
    return parse_expression(lhs), parse_expression(rhs)


def symbols(expr: Expr) -> set:
    if isinstance(expr, str):
        return {expr}
    op, args = expr[0], expr[1:]
    skip = {"conv": 1, "power": 2, "boolpow": 1, "freepow": 1, "dilate": 1, "shift": 1, "bn": 1, "bp": 2}.get(op, 0)
    out = set()
    for a in args[skip:]:
        out |= symbols(a)
    return out


def _num(tok):
    if not isinstance(tok, str):
        raise ValidationError(f"expected a number, got {tok!r}")
    try:
        return as_number(tok)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"expected a number, got {tok!r}") from None


def evaluate(expr: Expr, bindings: Mapping[str, ScalarLaw], order: int) -> ScalarLaw:
    from .jsonio import parse_tree

    if isinstance(expr, str):
        if expr not in bindings:
            raise UnboundSymbolError(f"symbol {expr!r} is not bound")
        return bindings[expr].truncated(order)
    op, args = expr[0], expr[1:]
    ev = lambda e: evaluate(e, bindings, order)  # noqa: E731
    if op in _NARY:
        if len(args) < 2:
            raise ValidationError(f"{op} needs at least two arguments")
        return convolve(_NARY[op](len(args)), [ev(a) for a in args], order)
    if op in _BINARY:
        if len(args) != 2:
            raise ValidationError(f"{op} takes exactly two arguments")
        return convolve(_BINARY[op](), [ev(a) for a in args], order)
    if op == "conv":
        tree = parse_tree(args[0])
        return convolve(tree, [ev(a) for a in args[1:]], order)
    if op == "power":
        _arity(op, args, 3)
        return convolution_power(ev(args[2]), parse_tree(args[0]), _num(args[1]), order)
    if op in ("boolpow", "freepow", "dilate", "shift", "bn"):
        _arity(op, args, 2)
        fn = {"boolpow": boolean_power, "freepow": free_power, "bn": bn_semigroup}.get(op)
        if fn is not None:
            return fn(ev(args[1]), _num(args[0]), order)
        return (dilate if op == "dilate" else shift)(ev(args[1]), _num(args[0]))
    if op == "bp":
        _arity(op, args, 3)
        return bp_bijection(ev(args[2]), parse_tree(args[0]), parse_tree(args[1]), order)
    raise ValidationError(f"unknown operator {op!r}")


def _arity(op, args, k):
    if len(args) != k:
        raise ValidationError(f"{op} takes {k} arguments, got {len(args)}")


@dataclass(frozen=True)
class IdentityVerdict:
    verdict: str  # "equal-exact", "equal-tol" or "differ"
    first_difference: int | None
    lhs: ScalarLaw
    rhs: ScalarLaw

    @property
    def equal(self) -> bool:
        return self.verdict != "differ"


def check_identity(lhs, rhs, bindings: Mapping[str, ScalarLaw], order: int, tol: float = 1e-10) -> IdentityVerdict:
    """Compare two expressions moment by moment up to ``order``."""
    lhs = parse_expression(lhs) if isinstance(lhs, str) else lhs
    rhs = parse_expression(rhs) if isinstance(rhs, str) else rhs
    missing = sorted((symbols(lhs) | symbols(rhs)) - set(bindings))
    if missing:
        raise UnboundSymbolError(f"unbound symbols: {', '.join(missing)}")
    a = evaluate(lhs, bindings, order)
    b = evaluate(rhs, bindings, order)
    exact = a.exact and b.exact
    for ell, (x, y) in enumerate(zip(a.moments, b.moments), start=1):
        same = x == y if exact else abs(complex(x) - complex(y)) <= tol * max(1.0, abs(float(x)))
        if not same:
            return IdentityVerdict("differ", ell, a, b)
    return IdentityVerdict("equal-exact" if exact else "equal-tol", None, a, b)


__all__ = [
    "parse_expression",
    "split_equation",
    "evaluate",
    "check_identity",
    "IdentityVerdict",
    "symbols",
]
