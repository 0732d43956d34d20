"""Productivity fuzzing: random well-typed programs built from the prelude, driven by random events.

Programs are generated as surface source over a fixed input context, so
every generated program also goes through the parser, elaborator and
typechecker.  A generated program that fails to compile is a generator bug
and is reported like any other failure.  Failures are shrunk: the program by
replacing subexpressions with smaller ones of the same type, the event
script by delta debugging.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from ..core import FloatLit, Term, UnitVal, nat
from ..errors import FuelExhausted, RattError, StuckError
from ..eval import DEFAULT_FUEL, Allocator
from ..pipeline import compile_source
from ..reactive import InputEvent, Machine
from .common import Program, Report, unpack

FUZZ_INPUTS = """inputs
  a : p Nat
  b : p Nat
  u : p Unit
  f : bp Float
  t : b Float
"""

INITIAL_BUFFER: dict[str, Term] = {"f": FloatLit(0.1), "t": FloatLit(1.0)}

NAT, FLT, DNAT, DFLT = "Nat", "Float", "O Nat", "O Float"
OUTPUT_TYPES = {NAT: "Nat", FLT: "Float"}


@dataclass
class Node:
    """A generated expression: a template with ``<0>``, ``<1>``... holes for its children."""

    ty: str
    template: str
    children: list["Node"] = field(default_factory=list)
    binds_n: bool = False  # the template binds n around its children
    uses_n: bool = False  # the template mentions n itself

    def render(self) -> str:
        text = self.template
        for i, c in enumerate(self.children):
            text = text.replace(f"<{i}>", c.render())
        return text

    def free_n(self) -> bool:
        return self.uses_n or (not self.binds_n and any(c.free_n() for c in self.children))

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


LEAVES: dict[str, list[tuple[str, bool]]] = {
    NAT: [
        ("(const {k})", False),
        ("(count (sigAwait @u) {k})", False),
        ("(count (sigAwait @a) {k})", False),
        ("({k} :: sigAwait @a)", False),
        ("({k} :: sigAwait @b)", False),
        ("(const n)", True),
        ("(count (sigAwait @b) n)", True),
    ],
    FLT: [
        ("(const {x})", False),
        ("(sig @f)", False),
        ("(map (box (\\x -> x +. read t)) (sig @f))", False),
        ("({x} :: sigAwait @f)", False),
    ],
    DNAT: [("(sigAwait @a)", False), ("(sigAwait @b)", False)],
    DFLT: [("(sigAwait @f)", False)],
}

# (template, child types, weight, binds n); select-based combinators weigh more
COMPOUND: dict[str, list[tuple[str, tuple[str, ...], int, bool]]] = {
    NAT: [
        ("(map (box (\\m -> m + {k})) <0>)", (NAT,), 2, False),
        ("(scan (box (\\x acc -> acc + 1)) {k} <0>)", (NAT,), 2, False),
        ("(sum ({k} :: sigAwait @a))", (), 1, False),
        ("(switch <0> (delay (adv (await u) ; <1>)))", (NAT, NAT), 4, False),
        ("(toggleSig (box (await u)) (box (\\n -> <0>)) (box (\\n -> <1>)) {k})", (NAT, NAT), 4, True),
        ("({k} :: interleave (box (\\x y -> x + y)) <0> <1>)", (DNAT, DNAT), 4, False),
        ("(map (box (\\p -> fst p + snd p)) (zip <0> <1>))", (NAT, NAT), 4, False),
    ],
    FLT: [
        ("(map (box (\\x -> x *. 0.5)) <0>)", (FLT,), 2, False),
        ("(integral @f 0.0 <0>)", (FLT,), 4, False),
        ("(derivative @f <0>)", (FLT,), 4, False),
        ("(switch <0> (delay (adv (await u) ; <1>)))", (FLT, FLT), 3, False),
        ("(0.0 :: interleave (box (\\x y -> x +. y)) <0> <1>)", (DFLT, DFLT), 3, False),
    ],
    DNAT: [("(delay (adv (await u) ; <0>))", (NAT,), 2, False)],
    DFLT: [("(delay (adv (await u) ; <0>))", (FLT,), 1, False)],
}


class Generator:
    def __init__(self, rng: random.Random, size: int):
        self.rng = rng
        self.size = max(1, min(size, 7))

    def _fill(self, template: str) -> str:
        return template.replace("{k}", str(self.rng.randint(0, 3))).replace(
            "{x}", self.rng.choice(["0.0", "1.5", "2.0", "0.25"])
        )

    def leaf(self, ty: str, n_in_scope: bool) -> Node:
        options = [(t, uses) for t, uses in LEAVES[ty] if n_in_scope or not uses]
        template, uses = self.rng.choice(options)
        return Node(ty, self._fill(template), uses_n=uses)

    def expr(self, ty: str, depth: int, no_delay: bool = False, n_in_scope: bool = False) -> Node:
        if depth <= 1 or self.rng.random() < 0.25:
            return self.leaf(ty, n_in_scope)
        options = [c for c in COMPOUND[ty] if not (no_delay and "delay" in c[0])]
        if not options:
            return self.leaf(ty, n_in_scope)
        template, kids, _, binds = self.rng.choices(options, weights=[c[2] for c in options])[0]
        node = Node(ty, self._fill(template), binds_n=binds)
        for i, kid in enumerate(kids):
            # the second argument of switch runs under the delay's tick
            under_tick = "delay" in template and (i == 1 or ty in (DNAT, DFLT))
            node.children.append(
                self.expr(kid, depth - 1, no_delay or under_tick, n_in_scope or binds)
            )
        return node

    def program(self) -> "GeneratedProgram":
        count = self.rng.randint(1, 3)
        outputs = [self.expr(self.rng.choice([NAT, NAT, FLT]), self.size) for _ in range(count)]
        return GeneratedProgram(outputs)


@dataclass
class GeneratedProgram:
    outputs: list[Node]

    def source(self) -> str:
        lines = [FUZZ_INPUTS + "outputs"]
        for i, node in enumerate(self.outputs):
            lines.append(f"  o{i} : {OUTPUT_TYPES[node.ty]} = {node.render()}")
        return "\n".join(lines) + "\n"

    def size(self) -> int:
        return sum(n.size() for n in self.outputs)


def random_events(rng: random.Random, count: int) -> list[InputEvent]:
    events = []
    for _ in range(count):
        ch = rng.choices(["a", "b", "u", "f", "t"], weights=[3, 3, 2, 3, 1])[0]
        if ch in ("a", "b"):
            value: Term = nat(rng.randint(0, 3))
        elif ch == "u":
            value = UnitVal()
        elif ch == "f":
            value = FloatLit(rng.choice([0.1, 0.25, 0.5]))
        else:
            value = FloatLit(rng.choice([0.0, 1.0, 2.5]))
        events.append(InputEvent(ch, value))
    return events


def drive(program: Program, buffer, events: Iterable[InputEvent], fuel: int = DEFAULT_FUEL) -> Optional[str]:
    """Run to completion; the failure description, or None if every step finished.

    ``program`` may also be a raw (term, input context, output names) triple,
    which is run without being typechecked.
    """
    term, delta, names = unpack(program)
    machine = Machine(delta, names, Allocator(), fuel)
    try:
        machine.run(term, buffer, events)
    except (StuckError, FuelExhausted) as exc:
        return f"{exc.kind}: {exc.message}"
    return None


def ddmin(items: list, fails: Callable[[list], bool]) -> list:
    """Delta debugging: a 1-minimal sublist on which ``fails`` still holds."""
    n = 2
    while len(items) >= 2:
        chunk = max(1, len(items) // n)
        reduced = False
        for start in range(0, len(items), chunk):
            candidate = items[:start] + items[start + chunk :]
            if candidate and fails(candidate):
                items, n, reduced = candidate, max(n - 1, 2), True
                break
        if not reduced:
            if n >= len(items):
                break
            n = min(len(items), n * 2)
    return items


def _replacements(node: Node, gen: Generator) -> Iterable[Node]:
    simple = Node(node.ty, "(const 0)" if node.ty == NAT else "(const 0.0)" if node.ty == FLT else "(sigAwait @a)" if node.ty == DNAT else "(sigAwait @f)")
    if simple.render() != node.render():
        yield simple
    stack = list(node.children)
    while stack:
        c = stack.pop()
        if c.ty == node.ty and not c.free_n():
            yield c
        stack.extend(c.children)


def shrink_program(prog: GeneratedProgram, fails: Callable[[GeneratedProgram], bool], gen: Generator) -> GeneratedProgram:
    """Greedy shrinking: keep replacing a subexpression while the failure persists."""
    improved = True
    while improved:
        improved = False
        for idx in range(len(prog.outputs)):
            if len(prog.outputs) > 1:
                candidate = GeneratedProgram(prog.outputs[:idx] + prog.outputs[idx + 1 :])
                if fails(candidate):
                    prog, improved = candidate, True
                    break
            for path, node in _walk(prog.outputs[idx]):
                for rep in _replacements(node, gen):
                    candidate = GeneratedProgram(list(prog.outputs))
                    candidate.outputs[idx] = _replace(prog.outputs[idx], path, rep)
                    if candidate.size() < prog.size() and fails(candidate):
                        prog, improved = candidate, True
                        break
                if improved:
                    break
            if improved:
                break
    return prog


def _walk(node: Node, path=()):
    yield path, node
    for i, c in enumerate(node.children):
        yield from _walk(c, path + (i,))


def _replace(node: Node, path, rep: Node) -> Node:
    if not path:
        return rep
    kids = list(node.children)
    kids[path[0]] = _replace(kids[path[0]], path[1:], rep)
    return Node(node.ty, node.template, kids, node.binds_n, node.uses_n)


def fuzz_cases(seed: int, count: int, size: int = 5, steps: int = 50):
    """Deterministic stream of (generated program, compiled program, events)."""
    rng = random.Random(seed)
    gen = Generator(rng, size)
    for _ in range(count):
        prog = gen.program()
        events = random_events(rng, steps)
        yield prog, events


def fuzz_productivity(
    seed: int = 0,
    size: int = 5,
    steps: int = 100,
    programs: int = 20,
    fuel: int = DEFAULT_FUEL,
) -> Report:
    """Generate programs, run each on random events; shrink and report any failure."""
    report = Report("productivity")
    gen = Generator(random.Random(seed ^ 0x5EED), size)
    total_steps = 0
    for index, (prog, events) in enumerate(fuzz_cases(seed, programs, size, steps)):
        outcome = _attempt(prog, events, fuel)
        total_steps += len(events)
        if outcome is None:
            continue

        def prog_fails(p: GeneratedProgram) -> bool:
            return _attempt(p, events, fuel) is not None

        small = shrink_program(prog, prog_fails, gen)
        small_events = ddmin(list(events), lambda evs: _attempt(small, evs, fuel) is not None)
        report.fail(
            program=index,
            reason=outcome,
            source=small.source(),
            events=[[e.channel, _show(e.value)] for e in small_events],
            minimized_reason=_attempt(small, small_events, fuel),
        )
    report.steps = total_steps
    report.details.update(seed=seed, size=size, programs=programs)
    return report


def _attempt(prog: GeneratedProgram, events, fuel) -> Optional[str]:
    try:
        compiled = compile_source(prog.source())
    except RattError as exc:
        return f"generated program rejected: {exc.kind}: {exc}"
    return drive(compiled, INITIAL_BUFFER, events, fuel)


def _show(v: Term):
    from ..values import to_json

    return to_json(v)
