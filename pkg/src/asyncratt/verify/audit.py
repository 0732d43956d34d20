"""GC safety: a shadow store remembers every collected location and flags any later read of one."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from ..core import Adv, Loc, Location, SingleHeap
from ..errors import FuelExhausted, RattError, StuckError
from ..eval import DEFAULT_FUEL, Allocator
from ..reactive import InputEvent, Machine, Running, gc
from .common import Program, Report, unpack


class AuditFailure(RattError):
    kind = "AuditFailure"

    def __init__(self, step: int, location: Location, collected_at: int):
        self.step = step
        self.location = location
        self.collected_at = collected_at
        self.message = f"step {step} read {location}, which was collected at step {collected_at}"
        super().__init__(self.message)


@dataclass
class ShadowStore:
    """Tombstones for everything the collector removed: location -> step of deletion."""

    tombstones: dict[Location, int] = field(default_factory=dict)
    step: int = 0

    def on_deref(self, loc: Location) -> None:
        if loc in self.tombstones:
            raise AuditFailure(self.step, loc, self.tombstones[loc])

    def collect(self, before: Iterable[Location], after: Iterable[Location]) -> None:
        kept = set(after)
        for loc in before:
            if loc not in kept:
                self.tombstones.setdefault(loc, self.step)


class StaleOutputMachine(Machine):
    """Deliberately faulty machine for negative controls: it collects the now
    heap as usual but keeps pointing each advanced output at its old location
    instead of the freshly produced one."""

    def step_output(self, state: Running):
        store = state.store
        batch = []
        for name, loc in state.outputs:
            if store.channel not in loc.clock:
                continue
            outcome = self._evaluator(state.buffer).run(Adv(Loc(loc)), store)
            store = outcome.store
            value = outcome.value
            batch.append((name, value.arg.left))
        return tuple(batch), Running(state.buffer, state.outputs, gc(store))


def audit_gc(
    program: Program,
    buffer,
    events: Iterable[InputEvent],
    fuel: int = DEFAULT_FUEL,
    machine_class: type[Machine] = Machine,
) -> Report:
    """Run with a shadow store; fail on any read of a collected location.

    Also checks that after every step the heap is exactly the previous later
    heap plus new allocations (nothing waiting on the consumed channel
    survives), and records the heap size after each step.
    """
    term, delta, names = unpack(program)
    shadow = ShadowStore()
    report = Report("gc-audit")
    machine = machine_class(delta, names, Allocator(), fuel, on_deref=shadow.on_deref)
    sizes: list[int] = []
    peaks: list[int] = []
    try:
        _, state = machine.init(term, buffer)
        sizes.append(len(state.heap))
        peaks.append(len(state.heap))
        for step, event in enumerate(events, start=1):
            shadow.step = step
            report.steps = step
            before = set(state.heap)
            mid = machine.step_input(state, event)
            _, state = machine.step_output(mid)
            if not isinstance(state.store, SingleHeap):
                report.fail(step=step, reason="store is not a single heap after the output step")
            leaked = [str(l) for l in state.heap if event.channel in l.clock and l in before]
            if leaked:
                report.fail(step=step, reason="locations waiting on the consumed channel survived", locations=leaked)
            if not set(mid.store.later) <= set(state.heap):
                report.fail(step=step, reason="the collector removed part of the later heap")
            shadow.collect(before, state.heap)
            sizes.append(len(state.heap))
            peaks.append(len(mid.store.now) + len(state.heap))
    except AuditFailure as exc:
        report.fail(step=exc.step, location=str(exc.location), collected_at=exc.collected_at, reason="tombstone read")
    except (StuckError, FuelExhausted) as exc:
        report.fail(step=shadow.step, reason=f"{exc.kind}: {exc.message}")
    report.details.update(
        tombstones=len(shadow.tombstones),
        tombstone_hits=sum(1 for f in report.failures if f.get("reason") == "tombstone read"),
        heap_sizes=sizes,
        high_water=peaks,
    )
    return report
