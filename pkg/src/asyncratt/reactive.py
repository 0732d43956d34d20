"""The reactive machine: initialisation, input and output transitions, heap splitting and GC.

A run alternates an input transition (record the event and split the heap
into the part waiting on the event's channel and the rest) with an output
transition (advance every output whose pending location waits on the
channel, then drop the now heap).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

from .core import (
    EMPTY_STORE,
    Adv,
    Heap,
    InputContext,
    Into,
    Loc,
    Location,
    Pair,
    SingleHeap,
    Store,
    Term,
    TwoHeap,
    is_value,
    subterms,
)
from .errors import EventError, StuckError, StuckKind
from .eval import DEFAULT_FUEL, Allocator, Evaluator, InputBuffer, Tracer
from .values import has_type

OutputBatch = tuple[tuple[str, Term], ...]


@dataclass(frozen=True)
class InputEvent:
    channel: str
    value: Term


@dataclass(frozen=True)
class Init:
    buffer: InputBuffer
    program: Term


@dataclass(frozen=True)
class Running:
    buffer: InputBuffer
    outputs: tuple[tuple[str, Location], ...]
    store: Store

    @property
    def output_map(self) -> dict[str, Location]:
        return dict(self.outputs)

    @property
    def heap(self) -> Heap:
        """The later heap (the whole heap between steps)."""
        return self.store.later


MachineState = Union[Init, Running]


def heap_split(heap: Heap, channel: str) -> tuple[dict[Location, Term], dict[Location, Term]]:
    now: dict[Location, Term] = {}
    later: dict[Location, Term] = {}
    for loc, t in heap.items():
        (now if channel in loc.clock else later)[loc] = t
    return now, later


def gc(store: Store) -> SingleHeap:
    if isinstance(store, TwoHeap):
        return SingleHeap(store.later)
    return store


def validate_event(delta: InputContext, event: InputEvent) -> None:
    if event.channel not in delta:
        raise EventError(f"event on undeclared channel {event.channel}")
    decl = delta[event.channel]
    if not is_value(event.value) or not has_type(event.value, decl.type):
        raise EventError(f"value for channel {event.channel} does not have type {decl.type}")


def validate_buffer(delta: InputContext, buffer: InputBuffer) -> None:
    expected = set(delta.buffered_channels())
    missing = expected - set(buffer)
    extra = set(buffer) - expected
    if missing:
        raise EventError(f"initial buffer is missing buffered channel(s) {', '.join(sorted(missing))}")
    if extra:
        raise EventError(f"initial buffer has entries for non-buffered channel(s) {', '.join(sorted(extra))}")
    for ch, v in buffer.items():
        if not is_value(v) or not has_type(v, delta[ch].type):
            raise EventError(f"initial value for channel {ch} does not have type {delta[ch].type}")


def split_outputs(value: Term, count: int) -> list[Term]:
    """Destructure the right-nested tuple of output signals."""
    if count == 0:
        return []
    parts = []
    for _ in range(count - 1):
        if not isinstance(value, Pair):
            raise StuckError(StuckKind.IllTypedRedex, value, detail="program did not produce a tuple of signals")
        parts.append(value.left)
        value = value.right
    parts.append(value)
    return parts


def _signal_step(value: Term, name: str) -> tuple[Term, Location]:
    if isinstance(value, Into) and isinstance(value.arg, Pair) and isinstance(value.arg.right, Loc):
        return value.arg.left, value.arg.right.loc
    raise StuckError(
        StuckKind.IllTypedRedex, value, detail=f"output {name} did not produce a value :: location signal step"
    )


class Machine:
    """Runs one program; owns the allocator so location ids are unique for the whole run."""

    def __init__(
        self,
        delta: InputContext,
        output_names: Iterable[str],
        allocator: Optional[Allocator] = None,
        fuel: int = DEFAULT_FUEL,
        tracer: Optional[Tracer] = None,
        on_deref: Optional[Callable[[Location], None]] = None,
        validate: bool = True,
    ):
        self.delta = delta
        self.output_names = tuple(output_names)
        self.allocator = allocator if allocator is not None else Allocator()
        self.fuel = fuel
        self.tracer = tracer
        self.on_deref = on_deref
        self.validate = validate

    def _evaluator(self, buffer: InputBuffer) -> Evaluator:
        return Evaluator(buffer, self.allocator, self.fuel, self.tracer, self.on_deref)

    def init(self, program: Term, buffer: InputBuffer) -> tuple[OutputBatch, Running]:
        buffer = dict(buffer)
        if self.validate:
            validate_buffer(self.delta, buffer)
        outcome = self._evaluator(buffer).run(program, EMPTY_STORE)
        batch, outputs = [], []
        for name, sig in zip(self.output_names, split_outputs(outcome.value, len(self.output_names))):
            head, loc = _signal_step(sig, name)
            batch.append((name, head))
            outputs.append((name, loc))
        return tuple(batch), Running(buffer, tuple(outputs), gc(outcome.store))

    def step_input(self, state: Running, event: InputEvent) -> Running:
        if self.validate:
            validate_event(self.delta, event)
        if not isinstance(state.store, SingleHeap):
            raise EventError("an input arrived while the previous one was still being processed")
        buffer = state.buffer
        if self.delta[event.channel].cls.is_buffered:
            buffer = {**buffer, event.channel: event.value}
        now, later = heap_split(state.store.later, event.channel)
        return Running(buffer, state.outputs, TwoHeap(now, event.channel, event.value, later))

    def step_output(self, state: Running) -> tuple[OutputBatch, Running]:
        store = state.store
        if not isinstance(store, TwoHeap):
            raise EventError("output transition with no input being processed")
        batch, outputs = [], []
        for name, loc in state.outputs:
            if store.channel not in loc.clock:
                outputs.append((name, loc))
                continue
            outcome = self._evaluator(state.buffer).run(Adv(Loc(loc)), store)
            store = outcome.store
            head, tail = _signal_step(outcome.value, name)
            batch.append((name, head))
            outputs.append((name, tail))
        return tuple(batch), Running(state.buffer, tuple(outputs), gc(store))

    def step(self, state: Running, event: InputEvent) -> tuple[OutputBatch, Running]:
        return self.step_output(self.step_input(state, event))

    def run(
        self,
        program: Term,
        buffer: InputBuffer,
        events: Iterable[InputEvent],
        observe: Optional[Callable[[int, OutputBatch, Running], None]] = None,
    ) -> list[OutputBatch]:
        batch, state = self.init(program, buffer)
        batches = [batch]
        if observe is not None:
            observe(0, batch, state)
        for i, event in enumerate(events, start=1):
            batch, state = self.step(state, event)
            batches.append(batch)
            if observe is not None:
                observe(i, batch, state)
        return batches


def init(program: Term, buffer: InputBuffer, delta: InputContext, output_names: Iterable[str], **kw):
    return Machine(delta, output_names, **kw).init(program, buffer)


def run(program: Term, delta: InputContext, output_names: Iterable[str], buffer: InputBuffer, events, **kw):
    return Machine(delta, output_names, **kw).run(program, buffer, events)


def referenced_locations(t: Term) -> set[Location]:
    return {u.loc for u in subterms(t) if isinstance(u, Loc)}


def live_locations(state: Running) -> set[Location]:
    """Heap locations reachable from the output map through stored terms."""
    heap = state.store.later if isinstance(state.store, SingleHeap) else {**state.store.now, **state.store.later}
    seen: set[Location] = set()
    stack = [loc for _, loc in state.outputs]
    while stack:
        loc = stack.pop()
        if loc in seen or loc not in heap:
            continue
        seen.add(loc)
        stack.extend(referenced_locations(heap[loc]))
    return seen


def describe_state(state: Running) -> dict:
    """A JSON-friendly dump of a machine state: outputs, heap with clocks, buffer."""
    from .pretty import show_term
    from .values import to_json

    store = state.store
    heap = store.later if isinstance(store, SingleHeap) else {**store.now, **store.later}
    return {
        "outputs": {name: str(loc) for name, loc in state.outputs},
        "heap": [
            {"loc": str(loc), "clock": sorted(loc.clock), "term": show_term(heap[loc])}
            for loc in sorted(heap)
        ],
        "buffer": {ch: to_json(v) for ch, v in state.buffer.items()},
    }


__all__ = [
    "Init",
    "InputEvent",
    "Machine",
    "MachineState",
    "OutputBatch",
    "Running",
    "describe_state",
    "gc",
    "heap_split",
    "init",
    "live_locations",
    "run",
    "split_outputs",
    "validate_buffer",
    "validate_event",
]
