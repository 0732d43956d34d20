"""Big-step evaluation over heap-structured stores.

``evaluate(t, store, buffer)`` reduces a closed term to a value, threading a
store: delayed computations are allocated on the later heap, and ``adv`` /
``select`` run delayed computations from the now heap of a two-heap store.
Substitution-based; tail positions loop instead of recursing so long-running
signals do not grow the Python stack.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, TextIO

from .core import (
    FALSE,
    TRUE,
    Adv,
    App,
    Await,
    BoxT,
    Case,
    ClockExpr,
    ClockOf,
    ClockUnion,
    Delay,
    DFix,
    FixT,
    FloatLit,
    FloatOp,
    Heap,
    Inj,
    Into,
    Lam,
    Let,
    Loc,
    Location,
    NatRec,
    Never,
    Out,
    Pair,
    Proj,
    Read,
    Select,
    SingleHeap,
    Store,
    Suc,
    Term,
    TwoHeap,
    Unbox,
    UnitVal,
    Var,
    Zero,
    subst_many,
)
from .errors import FuelExhausted, StuckError, StuckKind

DEFAULT_FUEL = 10_000_000

InputBuffer = Mapping[str, Term]
Tracer = Callable[[str, Term, int], None]

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))


class Allocator:
    """Per-run source of location ids; ids are never reused, even after collection."""

    def __init__(self, start: int = 0):
        self.next_id = start

    def alloc(self, clock: frozenset[str]) -> Location:
        loc = Location(self.next_id, frozenset(clock))
        self.next_id += 1
        return loc


@dataclass(frozen=True)
class EvalOutcome:
    value: Term
    store: Store


def clock_eval(theta: ClockExpr) -> frozenset[str]:
    """The set of channels denoted by a closed clock expression."""
    match theta:
        case ClockOf(Loc(loc)):
            return loc.clock
        case ClockOf(Await(ch)):
            return frozenset([ch])
        case ClockOf(v):
            raise StuckError(StuckKind.IllTypedRedex, v, detail=f"clock of a non-delayed value {v!r}")
        case ClockUnion(a, b):
            return clock_eval(a) | clock_eval(b)
    raise StuckError(StuckKind.IllTypedRedex, theta, detail=f"not a clock expression {theta!r}")


def alloc(store: Store, clock: frozenset[str], allocator: Allocator) -> tuple[Location, Store]:
    """A location fresh for the store (and for the whole run); the store itself is unchanged."""
    loc = allocator.alloc(clock)
    return loc, store


def jsonl_tracer(stream: TextIO) -> Tracer:
    """A tracer writing one JSON record per rule application."""
    from .pretty import show_term

    def emit(rule: str, redex: Term, size: int) -> None:
        stream.write(json.dumps({"rule": rule, "redex": show_term(redex), "store_size": size}) + "\n")

    return emit


class Evaluator:
    """One evaluation context: an input buffer, an allocator and a fuel budget.

    ``on_deref`` is called with every location read by ``adv``, before the
    read; auditors use it to watch for reads of collected locations.
    """

    def __init__(
        self,
        buffer: InputBuffer,
        allocator: Optional[Allocator] = None,
        fuel: int = DEFAULT_FUEL,
        tracer: Optional[Tracer] = None,
        on_deref: Optional[Callable[[Location], None]] = None,
    ):
        self.buffer = buffer
        self.allocator = allocator if allocator is not None else Allocator()
        self.budget = fuel
        self.fuel = fuel
        self.tracer = tracer
        self.on_deref = on_deref
        # mutable view of the store being threaded through one evaluation
        self._now: Heap = {}
        self._later: dict[Location, Term] = {}
        self._input: Optional[tuple[str, Term]] = None

    def run(self, t: Term, store: Store) -> EvalOutcome:
        if isinstance(store, TwoHeap):
            self._now, self._input = store.now, (store.channel, store.value)
        else:
            self._now, self._input = {}, None
        self._later = dict(store.later)
        value = self.eval(t)
        if self._input is None:
            out: Store = SingleHeap(self._later)
        else:
            out = TwoHeap(self._now, self._input[0], self._input[1], self._later)
        return EvalOutcome(value, out)

    # -- helpers --------------------------------------------------------------

    def _store(self) -> Store:
        if self._input is None:
            return SingleHeap(dict(self._later))
        return TwoHeap(self._now, self._input[0], self._input[1], dict(self._later))

    def _stuck(self, kind: StuckKind, t: Term, detail: str) -> StuckError:
        return StuckError(kind, t, self._store(), detail)

    def _step(self, rule: str, t: Term) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise FuelExhausted(self.budget)
        if self.tracer is not None:
            self.tracer(rule, t, len(self._now) + len(self._later))

    @staticmethod
    def _bind(body: Term, **env: Term) -> Term:
        env = {k: v for k, v in env.items() if k != "_"}
        return subst_many(body, env, closed=True)

    # -- evaluation -----------------------------------------------------------

    def eval(self, t: Term) -> Term:
        while True:
            match t:
                case UnitVal() | Zero() | Lam() | Loc() | Await() | BoxT() | DFix() | FloatLit():
                    return t
                case Var(name):
                    raise self._stuck(StuckKind.IllTypedRedex, t, f"free variable {name}")
                case Suc():
                    if _is_numeral(t):
                        self._step("suc", t)
                        return t
                    # peel the successors iteratively so large naturals do not deepen the stack
                    depth = 0
                    while isinstance(t, Suc):
                        self._step("suc", t)
                        t, depth = t.arg, depth + 1
                    v = self.eval(t)
                    for _ in range(depth):
                        v = Suc(v)
                    return v
                case Pair(a, b):
                    self._step("pair", t)
                    u = self.eval(a)
                    return Pair(u, self.eval(b))
                case Inj(i, a):
                    self._step("inj", t)
                    return Inj(i, self.eval(a))
                case Into(a):
                    self._step("into", t)
                    return Into(self.eval(a))
                case Proj(i, a):
                    self._step("proj", t)
                    v = self.eval(a)
                    if not isinstance(v, Pair):
                        raise self._stuck(StuckKind.IllTypedRedex, t, "projection from a non-pair")
                    return v.left if i == 1 else v.right
                case Out(a):
                    self._step("out", t)
                    v = self.eval(a)
                    if not isinstance(v, Into):
                        raise self._stuck(StuckKind.IllTypedRedex, t, "out of a non-folded value")
                    return v.arg
                case App(f, a):
                    self._step("app", t)
                    fn = self.eval(f)
                    if not isinstance(fn, Lam):
                        raise self._stuck(StuckKind.IllTypedRedex, t, "application of a non-function")
                    t = self._bind(fn.body, **{fn.binder: self.eval(a)})
                case Let(x, s, body):
                    self._step("let", t)
                    t = self._bind(body, **{x: self.eval(s)})
                case Case(s, x, left, y, right):
                    self._step("case", t)
                    v = self.eval(s)
                    if not isinstance(v, Inj):
                        raise self._stuck(StuckKind.IllTypedRedex, t, "case on a non-injection")
                    t = self._bind(left, **{x: v.arg}) if v.index == 1 else self._bind(right, **{y: v.arg})
                case NatRec(base, x, y, step, n):
                    self._step("natrec", t)
                    k = self.eval(n)
                    preds = []
                    while isinstance(k, Suc):
                        preds.append(k.arg)
                        k = k.arg
                    if not isinstance(k, Zero):
                        raise self._stuck(StuckKind.IllTypedRedex, t, "natrec on a non-numeral")
                    acc = self.eval(base)
                    for pred in reversed(preds):
                        self._step("natrec-suc", t)
                        acc = self.eval(self._bind(step, **{x: pred, y: acc}))
                    return acc
                case FloatOp(op, args):
                    self._step("float", t)
                    vals = []
                    for a in args:
                        v = self.eval(a)
                        if not isinstance(v, FloatLit):
                            raise self._stuck(StuckKind.IllTypedRedex, t, "float operation on a non-float")
                        vals.append(v.value)
                    return _float_op(op, vals)
                case Unbox(a):
                    self._step("unbox", t)
                    b = self.eval(a)
                    if not isinstance(b, BoxT):
                        raise self._stuck(StuckKind.IllTypedRedex, t, "unbox of a non-box")
                    t = b.body
                case FixT(x, body):
                    self._step("fix", t)
                    t = self._bind(body, **{x: DFix(x, body)})
                case Read(ch):
                    self._step("read", t)
                    if ch not in self.buffer:
                        raise self._stuck(StuckKind.UnboundChannelBuffer, t, f"no buffered value for channel {ch}")
                    return self.buffer[ch]
                case Delay(theta, body):
                    self._step("delay", t)
                    loc = self.allocator.alloc(clock_eval(theta))
                    self._later[loc] = body
                    return Loc(loc)
                case Never():
                    self._step("never", t)
                    return Loc(self.allocator.alloc(frozenset()))
                case Adv(a):
                    self._step("adv", t)
                    v = self.eval(a)
                    if isinstance(v, DFix):
                        t = self._bind(v.body, **{v.binder: v})
                        continue
                    return self._advance(v, t)
                case Select(a, b):
                    self._step("select", t)
                    return self._select(self.eval(a), self.eval(b), t)
                case _:
                    raise self._stuck(StuckKind.IllTypedRedex, t, f"no rule for {type(t).__name__}")

    def _advance(self, v: Term, t: Term) -> Term:
        if self._input is None:
            raise self._stuck(StuckKind.AdvOutsideNowHeap, t, "adv with no input being processed")
        channel, value = self._input
        match v:
            case Await(ch):
                if ch != channel:
                    raise self._stuck(StuckKind.AdvOutsideNowHeap, t, f"await {ch} while processing input on {channel}")
                return value
            case Loc(loc):
                if self.on_deref is not None:
                    self.on_deref(loc)
                if loc not in self._now:
                    raise self._stuck(StuckKind.DanglingLocation, t, f"location {loc} is not in the now heap")
                return self.eval(self._now[loc])
        raise self._stuck(StuckKind.IllTypedRedex, t, "adv of a value that is not delayed")

    def _select(self, v1: Term, v2: Term, t: Term) -> Term:
        if self._input is None:
            raise self._stuck(StuckKind.AdvOutsideNowHeap, t, "select with no input being processed")
        channel = self._input[0]
        in1 = channel in _value_clock(v1, self, t)
        in2 = channel in _value_clock(v2, self, t)
        if in1 and in2:
            u1 = self._advance(v1, t)
            return Inj(2, Pair(u1, self._advance(v2, t)))
        if in1:
            return Inj(1, Inj(1, Pair(self._advance(v1, t), v2)))
        if in2:
            return Inj(1, Inj(2, Pair(v1, self._advance(v2, t))))
        raise self._stuck(StuckKind.BadSelect, t, f"select where neither clock contains {channel}")


def _is_numeral(t: Term) -> bool:
    """Whether t is suc^n(zero); the answer is cached on every successor node visited."""
    path = []
    while isinstance(t, Suc):
        known = t.__dict__.get("_numeral")
        if known is not None:
            result = known
            break
        path.append(t)
        t = t.arg
    else:
        result = isinstance(t, Zero)
    for node in path:
        object.__setattr__(node, "_numeral", result)
    return result


def _value_clock(v: Term, ev: Evaluator, t: Term) -> frozenset[str]:
    if isinstance(v, (Loc, Await)):
        return clock_eval(ClockOf(v))
    raise ev._stuck(StuckKind.IllTypedRedex, t, "select on a value that is not delayed")


def _float_op(op: str, xs: list[float]) -> Term:
    a, b = xs
    match op:
        case "add":
            return FloatLit(a + b)
        case "sub":
            return FloatLit(a - b)
        case "mul":
            return FloatLit(a * b)
        case "div":
            return FloatLit(a / b if b != 0 else (float("nan") if a == 0 else float("inf") if a > 0 else float("-inf")))
        case "eq":
            return TRUE if a == b else FALSE
        case "lt":
            return TRUE if a < b else FALSE
        case "le":
            return TRUE if a <= b else FALSE
    raise ValueError(f"unknown float operation {op}")


def evaluate(
    t: Term,
    store: Store,
    buffer: InputBuffer,
    allocator: Optional[Allocator] = None,
    fuel: int = DEFAULT_FUEL,
    tracer: Optional[Tracer] = None,
) -> EvalOutcome:
    """Evaluate a closed term; raises StuckError or FuelExhausted."""
    return Evaluator(buffer, allocator, fuel, tracer).run(t, store)


__all__ = [
    "DEFAULT_FUEL",
    "Allocator",
    "EvalOutcome",
    "Evaluator",
    "InputBuffer",
    "alloc",
    "clock_eval",
    "evaluate",
    "jsonl_tracer",
]
