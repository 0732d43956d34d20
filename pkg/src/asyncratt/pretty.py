"""Human-readable rendering of types and core terms, in surface syntax."""

from __future__ import annotations

from .core import (
    Adv,
    App,
    Await,
    Box,
    BoxT,
    Case,
    ClockExpr,
    ClockOf,
    ClockUnion,
    Delay,
    DelayAny,
    DelayExist,
    DFix,
    FixRec,
    FixT,
    Float,
    FloatLit,
    FloatOp,
    Fun,
    Inj,
    Into,
    Lam,
    Let,
    Loc,
    Meta,
    Nat,
    NatRec,
    Never,
    Out,
    Pair,
    Prod,
    Proj,
    Read,
    Select,
    Suc,
    Sum,
    Term,
    TypeExpr,
    TypeVar,
    Unbox,
    Unit,
    UnitVal,
    Var,
    Zero,
    nat_value,
    sig_element,
)

FLOAT_SYMBOLS = {"add": "+.", "sub": "-.", "mul": "*.", "div": "/.", "eq": "==.", "lt": "<.", "le": "<=."}


def show_type(t: TypeExpr, level: int = 0) -> str:
    """Levels: 0 function, 1 sum, 2 product, 3 constructor application, 4 atom."""

    def wrap(text: str, own: int) -> str:
        return f"({text})" if own < level else text

    elem = sig_element(t)
    if elem is not None:
        return wrap(f"Sig {show_type(elem, 4)}", 3)
    match t:
        case Unit():
            return "Unit"
        case Nat():
            return "Nat"
        case Float():
            return "Float"
        case TypeVar(name):
            return name
        case Meta(i):
            return f"?{i}"
        case Fun(a, b):
            return wrap(f"{show_type(a, 1)} -> {show_type(b, 0)}", 0)
        case Sum(a, b):
            return wrap(f"{show_type(a, 2)} + {show_type(b, 1)}", 1)
        case Prod(a, b):
            return wrap(f"{show_type(a, 3)} * {show_type(b, 2)}", 2)
        case DelayExist(a):
            return wrap(f"O {show_type(a, 4)}", 3)
        case DelayAny(a):
            return wrap(f"OAny {show_type(a, 4)}", 3)
        case Box(a):
            return wrap(f"Box {show_type(a, 4)}", 3)
        case FixRec(binder, body):
            return f"(Fix {binder}. {show_type(body, 0)})"
    raise TypeError(f"not a type: {t!r}")


def _name(x: str) -> str:
    return x.replace("%", "'")


def to_surface(t: Term):
    """Translate a core term into a surface AST that elaborates back to it (up to alpha)."""
    from .surface import syntax as s

    def pat(x: str):
        return s.PWild() if x == "_" else s.PVar(_name(x))

    def clock(theta: ClockExpr):
        match theta:
            case ClockOf(Var(x)):
                return s.SClockAtom(s.SVar(_name(x)))
            case ClockOf(Await(ch)):
                return s.SClockAtom(s.SAwait(ch))
            case ClockOf(v):
                return s.SClockAtom(s.SRaw(f"({show_term(v)})" if not isinstance(v, Loc) else str(v.loc)))
            case ClockUnion(a, b):
                return s.SClockUnion(clock(a), clock(b))
        raise TypeError(f"not a clock expression: {theta!r}")

    def go(t: Term):
        match t:
            case Var(x):
                return s.SVar(_name(x))
            case UnitVal():
                return s.SUnit()
            case Zero():
                return s.SNat(0)
            case Suc(a):
                n = nat_value(t)
                return s.SNat(n) if n is not None else s.SPrim("suc", (go(a),))
            case FloatLit(x):
                return s.SFloat(x)
            case FloatOp(op, (a, b)):
                return s.SBinOp(FLOAT_SYMBOLS[op], go(a), go(b))
            case Lam(x, body):
                return s.SLam((pat(x),), go(body))
            case Pair(a, b):
                return s.SPair(go(a), go(b))
            case Inj(i, a):
                return s.SPrim("inl" if i == 1 else "inr", (go(a),))
            case Proj(i, a):
                return s.SPrim("fst" if i == 1 else "snd", (go(a),))
            case App(f, a):
                return s.SApp(go(f), go(a))
            case Let("_", bound, body):
                return s.SSeq(go(bound), go(body))
            case Let(x, bound, body):
                return s.SLet(pat(x), go(bound), go(body))
            case Case(scrut, x, left, y, right):
                return s.SCase(go(scrut), ((s.PInj(1, pat(x)), go(left)), (s.PInj(2, pat(y)), go(right))))
            case NatRec(base, x, y, step, n):
                return s.SNatRec(go(base), _name(x), _name(y), go(step), go(n))
            case Delay(theta, body):
                return s.SDelay(clock(theta), go(body))
            case Adv(a):
                return s.SPrim("adv", (go(a),))
            case Select(a, b):
                return s.SPrim("select", (go(a), go(b)))
            case Never():
                return s.SNever()
            case Await(ch):
                return s.SAwait(ch)
            case Read(ch):
                return s.SRead(ch)
            case BoxT(a):
                return s.SPrim("box", (go(a),))
            case Unbox(a):
                return s.SPrim("unbox", (go(a),))
            case FixT(x, body):
                return s.SFix(_name(x), go(body))
            case Into(Pair(h, tl)):
                return s.SCons(go(h), go(tl))
            case Into(a):
                return s.SPrim("into", (go(a),))
            case Out(a):
                return s.SPrim("out", (go(a),))
            case Loc(loc):
                return s.SRaw(str(loc))
            case DFix(x, body):
                return s.SRaw(f"(dfix {_name(x)} -> {show_term(body)})")
        raise TypeError(f"not a term: {t!r}")

    return go(t)


def show_term(t: Term) -> str:
    from .surface.printer import show_expr

    return show_expr(to_surface(t))


def show_clock(theta: ClockExpr) -> str:
    match theta:
        case ClockOf(v):
            return f"cl({show_term(v)})"
        case ClockUnion(a, b):
            return f"{show_clock(a)} | {show_clock(b)}"
    raise TypeError(f"not a clock expression: {theta!r}")


def show_clock_set(clock) -> str:
    return "{" + ", ".join(sorted(clock)) + "}"
