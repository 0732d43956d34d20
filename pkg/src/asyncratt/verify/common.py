"""Shared pieces of the verification harnesses: program handles, reports and state hashing."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Any, Union

from ..core import (
    ClockOf,
    ClockUnion,
    Delay,
    InputContext,
    Loc,
    Location,
    SingleHeap,
    Term,
    TwoHeap,
    Var,
    free_vars,
)
from ..core import Await, FloatLit, FloatOp, Inj, Proj, Read
from ..pipeline import Compiled
from ..reactive import InputEvent, Running
from ..values import random_value

Program = Union[Compiled, tuple[Term, InputContext, tuple[str, ...]]]


def unpack(program: Program) -> tuple[Term, InputContext, tuple[str, ...]]:
    if isinstance(program, Compiled):
        return program.term, program.delta, program.output_names
    term, delta, names = program
    return term, delta, tuple(names)


def random_script(rng: random.Random, delta: InputContext, count: int) -> list[InputEvent]:
    """``count`` random well-typed events over the channels of ``delta``, chosen uniformly."""
    channels = list(delta)
    events = []
    for _ in range(count):
        ch = rng.choice(channels)
        events.append(InputEvent(ch, random_value(rng, delta[ch].type)))
    return events


def random_buffer(rng: random.Random, delta: InputContext) -> dict[str, Term]:
    """A random initial value for every buffered channel."""
    return {ch: random_value(rng, delta[ch].type) for ch in delta if delta[ch].cls.is_buffered}


@dataclass
class Report:
    name: str
    ok: bool = True
    steps: int = 0
    failures: list[dict] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    def fail(self, **info: Any) -> None:
        self.ok = False
        self.failures.append(info)

    def records(self) -> list[dict]:
        head = {"check": self.name, "ok": self.ok, "steps": self.steps, **self.details}
        return [head] + [{"check": self.name, "failure": f} for f in self.failures]


class _Canon:
    """Canonical rendering of machine states, up to location ids and bound-variable names."""

    def __init__(self) -> None:
        self.locs: dict[Location, int] = {}
        self.order: list[Location] = []

    def loc(self, loc: Location) -> str:
        if loc not in self.locs:
            self.locs[loc] = len(self.locs)
            self.order.append(loc)
        return f"L{self.locs[loc]}{{{','.join(sorted(loc.clock))}}}"

    def term(self, t: Term) -> str:
        parts: list = []
        self._go(t, {}, 0, parts)
        # locations are numbered here, in order of first occurrence
        return "".join(self.loc(p) if isinstance(p, Location) else p for p in parts)

    def _go(self, t: Term, env: dict[str, int], depth: int, out: list) -> None:
        # Bound variables print as de Bruijn indices, so a closed subterm renders
        # the same everywhere; its rendering is cached as a template in which
        # locations are left as placeholders to be numbered by the caller.
        closed = not free_vars(t)
        if closed:
            cached = t.__dict__.get("_canon")
            if cached is not None:
                out.extend(cached)
                return
            env, depth, start = {}, 0, len(out)
        match t:
            case Var(x):
                out.append(f"#{depth - 1 - env[x]}" if x in env else "$" + x)
            case Loc(loc):
                out.append(loc)
            case FloatLit(x):
                out.append(f"F{x!r}")
            case Await(ch) | Read(ch):
                out.append(f"{type(t).__name__}:{ch}")
            case Inj(i, a) | Proj(i, a):
                out.append(f"{type(t).__name__}{i}(")
                self._go(a, env, depth, out)
                out.append(")")
            case FloatOp(op, args):
                out.append(f"{op}(")
                for a in args:
                    self._go(a, env, depth, out)
                    out.append(",")
                out.append(")")
            case Delay(theta, body):
                out.append("Delay[")
                self._clock(theta, env, depth, out)
                out.append("](")
                self._go(body, env, depth, out)
                out.append(")")
            case _:
                out.append(type(t).__name__ + "(")
                for child, names in _binders(t):
                    inner, d = env, depth
                    if names:
                        inner = dict(env)
                        for n in names:
                            inner[n] = d
                            d += 1
                    self._go(child, inner, d, out)
                    out.append(",")
                out.append(")")
        if closed:
            object.__setattr__(t, "_canon", _compact(out[start:]))

    def _clock(self, theta, env, depth, out) -> None:
        match theta:
            case ClockOf(v):
                self._go(v, env, depth, out)
            case ClockUnion(a, b):
                out.append("(")
                self._clock(a, env, depth, out)
                out.append("|")
                self._clock(b, env, depth, out)
                out.append(")")


def _compact(parts: list) -> tuple:
    """Merge adjacent strings of a rendering, keeping location placeholders apart."""
    out: list = []
    run: list[str] = []
    for p in parts:
        if isinstance(p, Location):
            if run:
                out.append("".join(run))
                run = []
            out.append(p)
        else:
            run.append(p)
    if run:
        out.append("".join(run))
    return tuple(out)


def _binders(t: Term) -> list[tuple[Term, tuple[str, ...]]]:
    from ..core import Case, DFix, FixT, Lam, Let, NatRec, children

    match t:
        case Lam(x, b) | FixT(x, b) | DFix(x, b):
            return [(b, (x,))]
        case Let(x, s, b):
            return [(s, ()), (b, (x,))]
        case Case(s, x, l, y, r):
            return [(s, ()), (l, (x,)), (r, (y,))]
        case NatRec(base, x, y, step, n):
            return [(base, ()), (step, (x, y)), (n, ())]
    return [(c, ()) for c in children(t)]


def state_hash(state: Running) -> str:
    """Hash of a machine state, invariant under location renaming and alpha-conversion.

    Locations are numbered in order of first reach: the output map first, then
    the heap contents of reached locations, then unreached heap entries in
    allocation order.
    """
    canon = _Canon()
    store = state.store
    heap = store.later if isinstance(store, SingleHeap) else {**store.now, **store.later}
    lines = [f"out {name}={canon.loc(loc)}" for name, loc in state.outputs]
    done: set[Location] = set()
    i = 0
    while True:
        while i < len(canon.order):
            loc = canon.order[i]
            i += 1
            if loc in heap and loc not in done:
                done.add(loc)
                lines.append(f"{canon.loc(loc)} := {canon.term(heap[loc])}")
        rest = sorted(l for l in heap if l not in done)
        if not rest:
            break
        canon.loc(rest[0])
    for ch in sorted(state.buffer):
        lines.append(f"buf {ch}={canon.term(state.buffer[ch])}")
    if isinstance(store, TwoHeap):
        lines.append(f"input {store.channel}={canon.term(store.value)}")
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def batch_key(batch) -> str:
    """Exact rendering of an output batch, bit-level for floats."""
    canon = _Canon()
    return ";".join(f"{name}={canon.term(v)}" for name, v in batch)
