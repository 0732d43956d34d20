"""Closed values of value types: typing, JSON literals and display.

JSON literal encoding: ``null`` is unit, a non-negative integer is a natural
number, a float is a float, ``[a, b]`` is a pair and ``{"in": 1|2, "val": v}``
is an injection.  Booleans are not accepted, to keep ``true`` from silently
meaning ``1``.
"""

from __future__ import annotations

import math
from typing import Any

from .core import (
    FloatLit,
    Float,
    Inj,
    Nat,
    Pair,
    Prod,
    Sum,
    Suc,
    Term,
    TypeExpr,
    Unit,
    UnitVal,
    Zero,
    nat,
    nat_value,
)


class LiteralError(ValueError):
    pass


def from_json(obj: Any) -> Term:
    if obj is None:
        return UnitVal()
    if isinstance(obj, bool):
        raise LiteralError("booleans are not value literals; use {\"in\": 1, \"val\": null} for true")
    if isinstance(obj, int):
        if obj < 0:
            raise LiteralError(f"natural numbers are non-negative, got {obj}")
        return nat(obj)
    if isinstance(obj, float):
        return FloatLit(obj)
    if isinstance(obj, list):
        if len(obj) != 2:
            raise LiteralError(f"a pair literal has exactly two components, got {len(obj)}")
        return Pair(from_json(obj[0]), from_json(obj[1]))
    if isinstance(obj, dict):
        if set(obj) != {"in", "val"} or obj["in"] not in (1, 2) or isinstance(obj["in"], bool):
            raise LiteralError('an injection literal looks like {"in": 1 or 2, "val": ...}')
        return Inj(obj["in"], from_json(obj["val"]))
    raise LiteralError(f"not a value literal: {obj!r}")


def to_json(v: Term) -> Any:
    match v:
        case UnitVal():
            return None
        case Zero() | Suc():
            n = nat_value(v)
            if n is None:
                raise LiteralError(f"not a closed natural number: {v!r}")
            return n
        case FloatLit(x):
            return x
        case Pair(a, b):
            return [to_json(a), to_json(b)]
        case Inj(i, a):
            return {"in": i, "val": to_json(a)}
    raise LiteralError(f"not a value of a value type: {v!r}")


def has_type(v: Term, ty: TypeExpr) -> bool:
    """Whether a closed value inhabits a value type."""
    match ty, v:
        case Unit(), UnitVal():
            return True
        case Nat(), (Zero() | Suc()):
            return nat_value(v) is not None
        case Float(), FloatLit(x):
            return isinstance(x, float) or isinstance(x, int)
        case Prod(a, b), Pair(x, y):
            return has_type(x, a) and has_type(y, b)
        case Sum(a, b), Inj(i, x):
            return has_type(x, a if i == 1 else b)
    return False


def coerce(obj: Any, ty: TypeExpr) -> Term:
    """Decode a JSON literal against an expected type; integers are accepted where floats are expected."""
    match ty:
        case Float() if isinstance(obj, int) and not isinstance(obj, bool):
            return FloatLit(float(obj))
        case Prod(a, b) if isinstance(obj, list) and len(obj) == 2:
            return Pair(coerce(obj[0], a), coerce(obj[1], b))
        case Sum(a, b) if isinstance(obj, dict) and obj.get("in") in (1, 2):
            return Inj(obj["in"], coerce(obj.get("val"), a if obj["in"] == 1 else b))
    return from_json(obj)


def random_value(rng, ty: TypeExpr) -> Term:
    """A random closed value of a value type, drawn from a small range."""
    match ty:
        case Unit():
            return UnitVal()
        case Nat():
            return nat(rng.randint(0, 3))
        case Float():
            return FloatLit(rng.choice([0.0, 0.1, 0.25, 0.5, 1.0, 2.0]))
        case Prod(a, b):
            return Pair(random_value(rng, a), random_value(rng, b))
        case Sum(a, b):
            i = rng.randint(1, 2)
            return Inj(i, random_value(rng, a if i == 1 else b))
    raise LiteralError(f"not a value type: {ty}")


def show_value(v: Term) -> str:
    match v:
        case UnitVal():
            return "()"
        case Zero() | Suc():
            return str(nat_value(v))
        case FloatLit(x):
            return repr(x) if math.isfinite(x) else str(x)
        case Pair(a, b):
            return f"({show_value(a)}, {show_value(b)})"
        case Inj(i, a):
            return f"{'inl' if i == 1 else 'inr'} {show_value(a)}"
    from .pretty import show_term

    return show_term(v)
