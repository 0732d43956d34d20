"""Abstract syntax shared by every stage: types, clocks, terms, contexts, heaps and stores."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union

Pos = Optional[tuple[int, int]]


# ---------------------------------------------------------------------------
# Types


class TypeExpr:
    __slots__ = ()

    def __str__(self) -> str:
        from .pretty import show_type

        return show_type(self)


@dataclass(frozen=True)
class Unit(TypeExpr):
    pass


@dataclass(frozen=True)
class Nat(TypeExpr):
    pass


@dataclass(frozen=True)
class Float(TypeExpr):
    pass


@dataclass(frozen=True)
class Prod(TypeExpr):
    left: TypeExpr
    right: TypeExpr


@dataclass(frozen=True)
class Sum(TypeExpr):
    left: TypeExpr
    right: TypeExpr


@dataclass(frozen=True)
class Fun(TypeExpr):
    arg: TypeExpr
    res: TypeExpr


@dataclass(frozen=True)
class DelayExist(TypeExpr):
    """Asynchronous delay: a computation paired with the clock it waits on."""

    body: TypeExpr


@dataclass(frozen=True)
class DelayAny(TypeExpr):
    """Delay runnable on a tick of any clock; the type of recursion variables."""

    body: TypeExpr


@dataclass(frozen=True)
class Box(TypeExpr):
    body: TypeExpr


@dataclass(frozen=True)
class FixRec(TypeExpr):
    binder: str
    body: TypeExpr


@dataclass(frozen=True)
class TypeVar(TypeExpr):
    """Either bound by an enclosing FixRec or a schematic parameter of a top-level scheme."""

    name: str


@dataclass(frozen=True)
class Meta(TypeExpr):
    """Unification variable; only ever produced inside the typechecker."""

    id: int


UNIT = Unit()
NAT = Nat()
FLOAT = Float()
BOOL = Sum(UNIT, UNIT)

SIG_BINDER = "'sig"


def Sig(a: TypeExpr) -> FixRec:
    return FixRec(SIG_BINDER, Prod(a, TypeVar(SIG_BINDER)))


def sig_element(t: TypeExpr) -> Optional[TypeExpr]:
    """Return A if t is (alpha-equivalent to) Sig A, else None."""
    if isinstance(t, FixRec) and isinstance(t.body, Prod):
        tail = t.body.right
        if isinstance(tail, TypeVar) and tail.name == t.binder and t.binder not in free_type_vars(t.body.left):
            return t.body.left
    return None


def free_type_vars(t: TypeExpr) -> frozenset[str]:
    match t:
        case TypeVar(name):
            return frozenset([name])
        case FixRec(binder, body):
            return free_type_vars(body) - {binder}
        case Prod(a, b) | Sum(a, b) | Fun(a, b):
            return free_type_vars(a) | free_type_vars(b)
        case DelayExist(a) | DelayAny(a) | Box(a):
            return free_type_vars(a)
    return frozenset()


def subst_type(t: TypeExpr, mapping: Mapping[str, TypeExpr]) -> TypeExpr:
    """Substitute closed types for free type variables."""
    if not mapping:
        return t
    match t:
        case TypeVar(name):
            return mapping.get(name, t)
        case FixRec(binder, body):
            inner = {k: v for k, v in mapping.items() if k != binder}
            return FixRec(binder, subst_type(body, inner))
        case Prod(a, b):
            return Prod(subst_type(a, mapping), subst_type(b, mapping))
        case Sum(a, b):
            return Sum(subst_type(a, mapping), subst_type(b, mapping))
        case Fun(a, b):
            return Fun(subst_type(a, mapping), subst_type(b, mapping))
        case DelayExist(a):
            return DelayExist(subst_type(a, mapping))
        case DelayAny(a):
            return DelayAny(subst_type(a, mapping))
        case Box(a):
            return Box(subst_type(a, mapping))
    return t


def unfold(t: FixRec) -> TypeExpr:
    """Fix a.A  ~>  A[DelayExist(Fix a.A)/a]."""
    return subst_type(t.body, {t.binder: DelayExist(t)})


def type_alpha_eq(a: TypeExpr, b: TypeExpr) -> bool:
    match a, b:
        case FixRec(x, body_a), FixRec(y, body_b):
            return type_alpha_eq(body_a, subst_type(body_b, {y: TypeVar(x)}))
        case (Prod(a1, a2), Prod(b1, b2)) | (Sum(a1, a2), Sum(b1, b2)) | (Fun(a1, a2), Fun(b1, b2)):
            return type_alpha_eq(a1, b1) and type_alpha_eq(a2, b2)
        case (DelayExist(x), DelayExist(y)) | (DelayAny(x), DelayAny(y)) | (Box(x), Box(y)):
            return type_alpha_eq(x, y)
    return a == b


def is_stable(a: TypeExpr, stable_vars: frozenset[str] = frozenset()) -> bool:
    """Stable types: Unit | Nat | Float | S x S' | S + S' | DelayAny A | Box A.

    ``stable_vars`` names schematic variables carrying a ``Stable`` constraint.
    """
    match a:
        case Unit() | Nat() | Float() | DelayAny(_) | Box(_):
            return True
        case Prod(l, r) | Sum(l, r):
            return is_stable(l, stable_vars) and is_stable(r, stable_vars)
        case TypeVar(name):
            return name in stable_vars
    return False


def is_value_type(a: TypeExpr) -> bool:
    match a:
        case Unit() | Nat() | Float():
            return True
        case Prod(l, r) | Sum(l, r):
            return is_value_type(l) and is_value_type(r)
    return False


# ---------------------------------------------------------------------------
# Channels and input contexts


class ChannelClass(enum.Enum):
    PUSH_ONLY = "p"
    BUFFERED_ONLY = "b"
    BUFFERED_PUSH = "bp"

    @property
    def is_push(self) -> bool:
        return self is not ChannelClass.BUFFERED_ONLY

    @property
    def is_buffered(self) -> bool:
        return self is not ChannelClass.PUSH_ONLY


@dataclass(frozen=True)
class ChannelDecl:
    cls: ChannelClass
    type: TypeExpr


class InputContext(Mapping[str, ChannelDecl]):
    """Ordered, immutable map from channel names to their class and value type."""

    def __init__(self, entries: Union[Mapping[str, ChannelDecl], list[tuple[str, ChannelDecl]], None] = None):
        items = list(entries.items()) if isinstance(entries, Mapping) else list(entries or [])
        self._entries: dict[str, ChannelDecl] = {}
        for name, decl in items:
            if name in self._entries:
                raise ValueError(f"duplicate input channel {name!r}")
            if not is_value_type(decl.type):
                raise ValueError(f"input channel {name!r} must carry a value type, not {decl.type}")
            self._entries[name] = decl

    @classmethod
    def unchecked(cls, entries: list[tuple[str, ChannelDecl]]) -> "InputContext":
        """Build a context whose channel types may be schematic; used to check channel-indexed definitions."""
        ctx = cls.__new__(cls)
        ctx._entries = dict(entries)
        return ctx

    @classmethod
    def of(cls, **channels: tuple[str, TypeExpr]) -> "InputContext":
        return cls([(name, ChannelDecl(ChannelClass(c), t)) for name, (c, t) in channels.items()])

    def __getitem__(self, name: str) -> ChannelDecl:
        return self._entries[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k} :{d.cls.value} {d.type}" for k, d in self._entries.items())
        return f"InputContext({inner})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, InputContext) and list(self._entries.items()) == list(other._entries.items())

    def __hash__(self) -> int:
        return hash(tuple(self._entries.items()))

    def push_channels(self) -> frozenset[str]:
        return frozenset(k for k, d in self._entries.items() if d.cls.is_push)

    def buffered_channels(self) -> frozenset[str]:
        return frozenset(k for k, d in self._entries.items() if d.cls.is_buffered)

    def extend(self, name: str, decl: ChannelDecl) -> "InputContext":
        return InputContext(list(self._entries.items()) + [(name, decl)])

    def restrict(self, names) -> "InputContext":
        keep = set(names)
        return InputContext([(k, d) for k, d in self._entries.items() if k in keep])


# ---------------------------------------------------------------------------
# Heap locations


@dataclass(frozen=True, order=True)
class Location:
    id: int
    clock: frozenset[str] = field(compare=False)

    def __str__(self) -> str:
        return f"l{self.id}"


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        from .pretty import show_term

        return show_term(self)


def _pos() -> Pos:
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Var(Term):
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class UnitVal(Term):
    pos: Pos = _pos()


@dataclass(frozen=True)
class Zero(Term):
    pos: Pos = _pos()


@dataclass(frozen=True)
class Suc(Term):
    arg: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Lam(Term):
    binder: str
    body: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Pair(Term):
    left: Term
    right: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Inj(Term):
    index: int
    arg: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Proj(Term):
    index: int
    arg: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class App(Term):
    fun: Term
    arg: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Let(Term):
    binder: str
    bound: Term
    body: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Case(Term):
    scrutinee: Term
    left_binder: str
    left: Term
    right_binder: str
    right: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class NatRec(Term):
    """rec_N(base, x.y.step, n): x is the predecessor, y the recursive result."""

    base: Term
    pred_binder: str
    acc_binder: str
    step: Term
    n: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Delay(Term):
    clock: "ClockExpr"
    body: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Adv(Term):
    arg: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Select(Term):
    left: Term
    right: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Never(Term):
    pos: Pos = _pos()


@dataclass(frozen=True)
class Await(Term):
    """Reference to the next value pushed on a channel."""

    channel: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Read(Term):
    """Current buffered value of a channel."""

    channel: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class BoxT(Term):
    body: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unbox(Term):
    arg: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class FixT(Term):
    binder: str
    body: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Into(Term):
    arg: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Out(Term):
    arg: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Loc(Term):
    loc: Location
    pos: Pos = _pos()


@dataclass(frozen=True)
class DFix(Term):
    binder: str
    body: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class FloatLit(Term):
    value: float
    pos: Pos = _pos()


FLOAT_OPS = {"add": 2, "sub": 2, "mul": 2, "div": 2, "eq": 2, "lt": 2, "le": 2}


@dataclass(frozen=True)
class FloatOp(Term):
    op: str
    args: tuple[Term, ...]
    pos: Pos = _pos()


# Clock expressions


class ClockExpr:
    __slots__ = ()


@dataclass(frozen=True)
class ClockOf(ClockExpr):
    value: Term


@dataclass(frozen=True)
class ClockUnion(ClockExpr):
    left: ClockExpr
    right: ClockExpr


def clock_join(clocks: list[ClockExpr]) -> ClockExpr:
    result = clocks[0]
    for c in clocks[1:]:
        result = ClockUnion(result, c)
    return result


def clock_atoms(theta: ClockExpr) -> list[Term]:
    match theta:
        case ClockOf(v):
            return [v]
        case ClockUnion(a, b):
            return clock_atoms(a) + clock_atoms(b)
    raise TypeError(f"not a clock expression: {theta!r}")


def nat(n: int) -> Term:
    t: Term = Zero()
    for _ in range(n):
        t = Suc(t)
    return t


def nat_value(t: Term) -> Optional[int]:
    n = 0
    while isinstance(t, Suc):
        t = t.arg
        n += 1
    return n if isinstance(t, Zero) else None


TRUE = Inj(1, UnitVal())
FALSE = Inj(2, UnitVal())


def cons(head: Term, tail: Term) -> Term:
    return Into(Pair(head, tail))


def is_value(t: Term) -> bool:
    while isinstance(t, (Suc, Into, Inj)):
        t = t.arg
    match t:
        case Var() | UnitVal() | Zero() | Lam() | Loc() | Await() | BoxT() | DFix() | FloatLit():
            return True
        case Pair(l, r):
            return is_value(l) and is_value(r)
    return False


def free_vars(t: Term) -> frozenset[str]:
    """Free variables of t, cached on each node (terms are immutable)."""
    cached = t.__dict__.get("_fv")
    if cached is not None:
        return cached
    match t:
        case Var(name):
            out = frozenset([name])
        case Lam(x, body) | FixT(x, body) | DFix(x, body):
            out = free_vars(body) - {x}
        case Let(x, s, body):
            out = free_vars(s) | (free_vars(body) - {x})
        case Case(s, x, l, y, r):
            out = free_vars(s) | (free_vars(l) - {x}) | (free_vars(r) - {y})
        case NatRec(base, x, y, step, n):
            out = free_vars(base) | free_vars(n) | (free_vars(step) - {x, y})
        case _:
            out = _EMPTY
            for child in children(t):
                fv = free_vars(child)
                if fv:
                    out = out | fv
    object.__setattr__(t, "_fv", out)
    return out


_EMPTY: frozenset[str] = frozenset()


def children(t: Term) -> tuple[Term, ...]:
    """Immediate subterms, clock atoms included."""
    match t:
        case Suc(a) | Inj(_, a) | Proj(_, a) | Adv(a) | BoxT(a) | Unbox(a) | Into(a) | Out(a):
            return (a,)
        case Lam(_, b) | FixT(_, b) | DFix(_, b):
            return (b,)
        case Pair(a, b) | App(a, b) | Select(a, b) | Let(_, a, b):
            return (a, b)
        case Case(s, _, l, _, r):
            return (s, l, r)
        case NatRec(base, _, _, step, n):
            return (base, step, n)
        case Delay(theta, body):
            return tuple(clock_atoms(theta)) + (body,)
        case FloatOp(_, args):
            return args
    return ()


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        stack.extend(reversed(children(u)))


_fresh_counter = itertools.count()


def fresh_name(base: str, avoid: frozenset[str]) -> str:
    stem = base.split("%")[0]
    while True:
        candidate = f"{stem}%{next(_fresh_counter)}"
        if candidate not in avoid:
            return candidate


def subst(t: Term, v: Term, x: str) -> Term:
    """Capture-avoiding t[v/x]."""
    return subst_many(t, {x: v})


def subst_many(t: Term, env: Mapping[str, Term], closed: bool = False) -> Term:
    """Capture-avoiding simultaneous substitution.

    ``closed=True`` promises that every substituted term is closed, so no
    binder can capture anything and the free-variable scan is skipped.
    """
    if not env:
        return t
    fv_env: Optional[frozenset[str]] = frozenset() if closed else None

    def env_fv() -> frozenset[str]:
        nonlocal fv_env
        if fv_env is None:
            acc: frozenset[str] = frozenset()
            for val in env.values():
                acc |= free_vars(val)
            fv_env = acc
        return fv_env

    def under(binders: tuple[str, ...], body: Term, e: Mapping[str, Term]) -> tuple[tuple[str, ...], Term, Mapping[str, Term]]:
        inner = {k: w for k, w in e.items() if k not in binders}
        if not inner:
            return binders, body, inner
        clash = [b for b in binders if b in env_fv()]
        if clash:
            renames = {}
            new_binders = []
            avoid = env_fv() | free_vars(body)
            for b in binders:
                if b in clash:
                    nb = fresh_name(b, avoid)
                    renames[b] = Var(nb)
                    new_binders.append(nb)
                else:
                    new_binders.append(b)
            body = subst_many(body, renames)
            binders = tuple(new_binders)
        return binders, body, inner

    def go(t: Term, e: Mapping[str, Term]) -> Term:
        if not e:
            return t
        fv = free_vars(t)
        if fv.isdisjoint(e):
            return t
        out = build(t, e)
        if closed:
            # substituted values are closed, so the result's free variables are known already
            object.__setattr__(out, "_fv", fv.difference(e))
        return out

    def build(t: Term, e: Mapping[str, Term]) -> Term:
        match t:
            case Var(name):
                return e.get(name, t)
            case UnitVal() | Zero() | Never() | Await() | Read() | Loc() | FloatLit():
                return t
            case Suc(a):
                return Suc(go(a, e), pos=t.pos)
            case Lam(x, body):
                (x,), body, inner = under((x,), body, e)
                return Lam(x, go(body, inner), pos=t.pos)
            case Pair(a, b):
                return Pair(go(a, e), go(b, e), pos=t.pos)
            case Inj(i, a):
                return Inj(i, go(a, e), pos=t.pos)
            case Proj(i, a):
                return Proj(i, go(a, e), pos=t.pos)
            case App(f, a):
                return App(go(f, e), go(a, e), pos=t.pos)
            case Let(x, s, body):
                s2 = go(s, e)
                (x,), body, inner = under((x,), body, e)
                return Let(x, s2, go(body, inner), pos=t.pos)
            case Case(s, x, l, y, r):
                s2 = go(s, e)
                (x,), l, inner_l = under((x,), l, e)
                (y,), r, inner_r = under((y,), r, e)
                return Case(s2, x, go(l, inner_l), y, go(r, inner_r), pos=t.pos)
            case NatRec(base, x, y, step, n):
                (x, y), step, inner = under((x, y), step, e)
                return NatRec(go(base, e), x, y, go(step, inner), go(n, e), pos=t.pos)
            case Delay(theta, body):
                return Delay(subst_clock(theta, e), go(body, e), pos=t.pos)
            case Adv(a):
                return Adv(go(a, e), pos=t.pos)
            case Select(a, b):
                return Select(go(a, e), go(b, e), pos=t.pos)
            case BoxT(a):
                return BoxT(go(a, e), pos=t.pos)
            case Unbox(a):
                return Unbox(go(a, e), pos=t.pos)
            case FixT(x, body):
                (x,), body, inner = under((x,), body, e)
                return FixT(x, go(body, inner), pos=t.pos)
            case DFix(x, body):
                (x,), body, inner = under((x,), body, e)
                return DFix(x, go(body, inner), pos=t.pos)
            case Into(a):
                return Into(go(a, e), pos=t.pos)
            case Out(a):
                return Out(go(a, e), pos=t.pos)
            case FloatOp(op, args):
                return FloatOp(op, tuple(go(a, e) for a in args), pos=t.pos)
        raise TypeError(f"unknown term {t!r}")

    def subst_clock(theta: ClockExpr, e: Mapping[str, Term]) -> ClockExpr:
        match theta:
            case ClockOf(v):
                return ClockOf(go(v, e))
            case ClockUnion(a, b):
                return ClockUnion(subst_clock(a, e), subst_clock(b, e))
        raise TypeError(f"not a clock expression: {theta!r}")

    return go(t, env)


def alpha_eq(a: Term, b: Term) -> bool:
    """Structural equality up to renaming of bound variables."""

    def go(a: Term, b: Term, env_a: dict, env_b: dict, depth: int) -> bool:
        if type(a) is not type(b):
            return False
        match a:
            case Var(name):
                ia, ib = env_a.get(name), env_b.get(b.name)
                if ia is None and ib is None:
                    return name == b.name
                return ia == ib
            case Lam(x, body) | FixT(x, body) | DFix(x, body):
                return go(body, b.body, {**env_a, x: depth}, {**env_b, b.binder: depth}, depth + 1)
            case Let(x, s, body):
                return go(s, b.bound, env_a, env_b, depth) and go(
                    body, b.body, {**env_a, x: depth}, {**env_b, b.binder: depth}, depth + 1
                )
            case Case(s, x, l, y, r):
                return (
                    go(s, b.scrutinee, env_a, env_b, depth)
                    and go(l, b.left, {**env_a, x: depth}, {**env_b, b.left_binder: depth}, depth + 1)
                    and go(r, b.right, {**env_a, y: depth}, {**env_b, b.right_binder: depth}, depth + 1)
                )
            case NatRec(base, x, y, step, n):
                return (
                    go(base, b.base, env_a, env_b, depth)
                    and go(n, b.n, env_a, env_b, depth)
                    and go(
                        step,
                        b.step,
                        {**env_a, x: depth, y: depth + 1},
                        {**env_b, b.pred_binder: depth, b.acc_binder: depth + 1},
                        depth + 2,
                    )
                )
            case Delay(theta, body):
                if not clock_shape_eq(theta, b.clock, lambda p, q: go(p, q, env_a, env_b, depth)):
                    return False
                return go(body, b.body, env_a, env_b, depth)
            case Inj(i, _) | Proj(i, _):
                if i != b.index:
                    return False
            case Await(ch) | Read(ch):
                return ch == b.channel
            case Loc(l):
                return l == b.loc
            case FloatLit(x):
                return x == b.value
            case FloatOp(op, args):
                if op != b.op or len(args) != len(b.args):
                    return False
        ca, cb = children(a), children(b)
        return len(ca) == len(cb) and all(go(p, q, env_a, env_b, depth) for p, q in zip(ca, cb))

    return go(a, b, {}, {}, 0)


def clock_shape_eq(a: ClockExpr, b: ClockExpr, atom_eq) -> bool:
    match a, b:
        case ClockOf(v), ClockOf(w):
            return atom_eq(v, w)
        case ClockUnion(a1, a2), ClockUnion(b1, b2):
            return clock_shape_eq(a1, b1, atom_eq) and clock_shape_eq(a2, b2, atom_eq)
    return False


# ---------------------------------------------------------------------------
# Typing contexts


@dataclass(frozen=True)
class Scheme:
    """A top-level type scheme: quantified variables, those constrained Stable, and the body."""

    params: tuple[str, ...]
    stable: frozenset[str]
    body: TypeExpr

    def __str__(self) -> str:
        from .pretty import show_type

        if not self.params:
            return show_type(self.body)
        constraints = ", ".join(f"Stable {p}" for p in self.params if p in self.stable)
        prefix = f"{constraints} => " if constraints else ""
        return prefix + show_type(self.body)


@dataclass(frozen=True)
class VarBind:
    name: str
    type: Union[TypeExpr, Scheme]


@dataclass(frozen=True)
class Tick:
    clock: ClockExpr


@dataclass(frozen=True)
class Lock:
    """Marks a stabilisation point: entries to its left are seen through the Box filter."""


CtxEntry = Union[VarBind, Tick, Lock]
TypingContext = tuple[CtxEntry, ...]


# ---------------------------------------------------------------------------
# Heaps and stores

Heap = Mapping[Location, Term]


@dataclass(frozen=True)
class SingleHeap:
    later: Heap

    def locations(self) -> list[Location]:
        return list(self.later)


@dataclass(frozen=True)
class TwoHeap:
    now: Heap
    channel: str
    value: Term
    later: Heap

    def locations(self) -> list[Location]:
        return list(self.now) + list(self.later)


Store = Union[SingleHeap, TwoHeap]

EMPTY_STORE = SingleHeap({})


def heap_in(heap: Heap, kappa: str) -> bool:
    """Heaps_kappa membership."""
    return all(kappa in loc.clock for loc in heap)
