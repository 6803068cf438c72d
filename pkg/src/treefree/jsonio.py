"""JSON and short-string formats for trees, digraphs, laws and matrix models."""

from __future__ import annotations

import json
import os
import random
import re
from fractions import Fraction
from typing import TYPE_CHECKING

from .errors import InvalidTreeError, ValidationError
from .trees import (
    IDENTITY,
    AntiMono,
    Bool,
    Free,
    Mono,
    Orth,
    Sub,
    TreeSpec,
    spec_from_json,
    spec_to_json,
)

if TYPE_CHECKING:
    from .laws import ScalarLaw
    from .models import PointedModel


def number_to_json(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return float(x)


def number_from_json(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, bool):
        raise ValidationError("booleans are not numbers")
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def _load_maybe_file(text: str):
    text = text.strip()
    if text.startswith("{") or text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad JSON: {exc}") from None
    if os.path.isfile(text):
        with open(text) as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"bad JSON in {text}: {exc}") from None
    return None


_SIMPLE = {"free": Free, "bool": Bool, "mono": Mono, "antimono": AntiMono}


def parse_tree(text: str) -> TreeSpec:
    """Tree from JSON, a JSON file, or shorthand like ``free:2``, ``free2``, ``bool 3``, ``regular:3,2``, ``orth``.

    ``walk:<digraph>`` takes the walk tree of any digraph accepted by :func:`parse_digraph`.
    """
    from .digraphs import Regular, Walk, complete, edgeless, increasing

    obj = _load_maybe_file(text)
    if obj is not None:
        return spec_from_json(obj)
    head, sep, rest = text.strip().partition(":")
    if sep and head.lower() == "walk":
        return Walk(parse_digraph(rest))
    t = text.strip().lower()
    m = re.fullmatch(r"([a-z]+)\s*[: ]?\s*([0-9][0-9, ]*)?", t)
    if not m:
        raise InvalidTreeError(f"cannot parse tree {text!r}")
    kind, args = m.group(1), m.group(2)
    nums = [int(x) for x in re.split(r"[ ,]+", args.strip())] if args else []
    if kind in _SIMPLE:
        if len(nums) != 1:
            raise InvalidTreeError(f"{kind} needs one size argument")
        return _SIMPLE[kind](nums[0])
    if kind in ("orth", "sub", "id") and not nums:
        return {"orth": Orth(), "sub": Sub(), "id": IDENTITY}[kind]
    if kind == "regular" and len(nums) == 2:
        return Regular(nums[0], nums[1])
    if kind in ("complete", "edgeless", "increasing") and len(nums) == 1:
        g = {"complete": complete, "edgeless": edgeless, "increasing": increasing}[kind](nums[0])
        return Walk(g)
    raise InvalidTreeError(f"cannot parse tree {text!r}")


def parse_digraph(text: str):
    """Digraph from JSON ``{"N": .., "edges": [[i, j], ..]}``, a JSON file, or
    ``complete:N``, ``edgeless:N``, ``increasing:N``, ``cyclic:N,d``."""
    from .digraphs import Digraph, complete, cyclic_regular, edgeless, increasing

    obj = _load_maybe_file(text)
    if obj is not None:
        return Digraph.from_json(obj)
    m = re.fullmatch(r"([a-z]+)\s*[: ]?\s*([0-9][0-9, ]*)", text.strip().lower())
    if m:
        kind = m.group(1)
        nums = [int(x) for x in re.split(r"[ ,]+", m.group(2).strip())]
        makers = {"complete": complete, "edgeless": edgeless, "increasing": increasing}
        if kind in makers and len(nums) == 1:
            return makers[kind](nums[0])
        if kind == "cyclic" and len(nums) == 2:
            return cyclic_regular(*nums)
    raise InvalidTreeError(f"cannot parse digraph {text!r}")


def tree_to_json(spec: TreeSpec) -> dict:
    return spec_to_json(spec)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# -- laws ---------------------------------------------------------------------


def law_to_json(law) -> dict:
    return {
        "moments": [number_to_json(m) for m in law.moments],
        "radius": law.radius,
        "exact": law.exact,
    }


def law_from_json(obj) -> "ScalarLaw":
    from .laws import ScalarLaw

    if isinstance(obj, list):
        obj = {"moments": obj}
    if not isinstance(obj, dict) or "moments" not in obj:
        raise ValidationError("law JSON needs a 'moments' list")
    ms = [number_from_json(x) for x in obj["moments"]]
    if obj.get("exact") is False:
        ms = [float(x) for x in ms]
    return ScalarLaw(tuple(ms), obj.get("radius"))


def parse_law(text: str, order: int) -> "ScalarLaw":
    """Law from JSON/file or shorthand: ``bernoulli[:a]``, ``semicircle[:var]``, ``point:c``,
    ``atoms:p1,p2;w1,w2``, ``random:seed``."""
    from .laws import atoms, bernoulli, point_mass, random_rational_law, semicircle

    obj = _load_maybe_file(text)
    if obj is not None:
        law = law_from_json(obj)
        return law.truncated(order) if law.order > order else law
    t = text.strip()
    kind, _, arg = t.partition(":")
    kind = kind.lower()
    try:
        if kind == "bernoulli":
            return bernoulli(order, arg or 1)
        if kind == "semicircle":
            return semicircle(order, arg or 1)
        if kind in ("point", "delta"):
            return point_mass(arg or 0, order)
        if kind == "atoms":
            pts, _, ws = arg.partition(";")
            pts = [p for p in pts.split(",") if p]
            ws = [w for w in ws.split(",") if w] or ["1"] * len(pts)
            return atoms(pts, ws, order)
        if kind == "random":
            return random_rational_law(random.Random(int(arg or 0)), order)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot parse law {text!r}: {exc}") from None
    raise ValidationError(f"cannot parse law {text!r}")


# -- matrix models ------------------------------------------------------------


def model_to_json(model) -> dict:
    a = model.op
    return {
        "dim": int(a.shape[0]),
        "matrix": [[float(z.real), float(z.imag)] for z in a.reshape(-1)],
        "tag": model.tag,
    }


def model_from_json(obj) -> "PointedModel":
    import numpy as np

    from .models import PointedModel

    try:
        dim = int(obj["dim"])
        raw = obj["matrix"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"model JSON is missing {exc}") from None
    if len(raw) == dim * dim and not (dim == 1 and isinstance(raw[0], list) and len(raw[0]) == 1):
        flat = raw  # row-major [re, im] pairs
    elif len(raw) == dim and all(isinstance(r, list) and len(r) == dim for r in raw):
        flat = [x for row in raw for x in row]
    else:
        flat = raw
    if len(flat) != dim * dim:
        raise ValidationError(f"expected {dim * dim} matrix entries, got {len(flat)}")
    vals = [complex(x[0], x[1]) if isinstance(x, list) else complex(x) for x in flat]
    return PointedModel(np.array(vals, dtype=complex).reshape(dim, dim), obj.get("tag", "selfadjoint"))
