"""Determinism: two runs on the same inputs agree on every batch and, up to location renaming, every state."""

from __future__ import annotations

from typing import Iterable

from ..errors import FuelExhausted, StuckError
from ..eval import DEFAULT_FUEL, Allocator
from ..reactive import InputEvent, Machine
from .common import Program, Report, batch_key, state_hash, unpack


def trace_run(program: Program, buffer, events: Iterable[InputEvent], seed: int = 0, fuel: int = DEFAULT_FUEL):
    """Batches and state hashes of one run, or the error that ended it."""
    term, delta, names = unpack(program)
    machine = Machine(delta, names, Allocator(seed), fuel)
    batches: list[str] = []
    hashes: list[str] = []

    def observe(step, batch, state):
        batches.append(batch_key(batch))
        hashes.append(state_hash(state))

    error = None
    try:
        machine.run(term, buffer, list(events), observe)
    except (StuckError, FuelExhausted) as exc:
        error = f"{exc.kind}: {exc.message}"
    return batches, hashes, error


def check_determinism(
    program: Program, buffer, events: Iterable[InputEvent], seeds=(0, 0), fuel: int = DEFAULT_FUEL
) -> Report:
    events = list(events)
    report = Report("determinism")
    b1, h1, e1 = trace_run(program, buffer, events, seeds[0], fuel)
    b2, h2, e2 = trace_run(program, buffer, events, seeds[1], fuel)
    report.steps = max(len(b1), len(b2)) - 1
    if e1 != e2:
        report.fail(reason="runs ended differently", first=e1, second=e2)
    for step, (x, y, hx, hy) in enumerate(zip(b1, b2, h1, h2)):
        if x != y:
            report.fail(step=step, reason="batches differ", first=x, second=y)
            break
        if hx != hy:
            report.fail(step=step, reason="machine states differ beyond location renaming")
            break
    if len(b1) != len(b2):
        report.fail(reason="runs have different lengths", first=len(b1), second=len(b2))
    report.details["seeds"] = list(seeds)
    return report
