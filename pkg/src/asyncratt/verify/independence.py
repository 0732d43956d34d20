"""Signal independence: outputs only update on the channels they were typed against,
and events on buffered-only channels never produce output."""

from __future__ import annotations

from typing import Iterable, Mapping, Optional

from ..core import InputContext, Sig, free_vars
from ..errors import FuelExhausted, RattTypeError, StuckError
from ..eval import DEFAULT_FUEL, Allocator
from ..pipeline import Compiled
from ..reactive import InputEvent, Machine
from ..typecheck import check, check_definition, def_context
from .common import Report


def used_definitions(compiled: Compiled, output: str):
    """The definitions an output depends on, in definition order."""
    defs = {d.name: d for d in compiled.core.defs}
    out = next(o for o in compiled.core.outputs if o.name == output)
    needed: set[str] = set()
    stack = [n for n in free_vars(out.term) if n in defs]
    while stack:
        name = stack.pop()
        if name in needed:
            continue
        needed.add(name)
        stack.extend(n for n in free_vars(defs[name].body) if n in defs and n not in needed)
    return [d for d in compiled.core.defs if d.name in needed]


def typechecks_under(compiled: Compiled, output: str, sub_delta: InputContext) -> Optional[str]:
    """None if the output (with everything it uses) typechecks under the smaller input context."""
    used = used_definitions(compiled, output)
    out = next(o for o in compiled.core.outputs if o.name == output)
    try:
        for i, d in enumerate(used):
            check_definition(sub_delta, d, used[:i])
        check(sub_delta, def_context(used), out.term, Sig(out.type))
    except RattTypeError as exc:
        return exc.message
    return None


def minimal_contexts(compiled: Compiled) -> dict[str, InputContext]:
    """For each output, the channels it cannot do without.

    Channels are dropped one at a time while the output still typechecks; the
    result is a context the output is well typed under.
    """
    out: dict[str, InputContext] = {}
    for o in compiled.core.outputs:
        names = list(compiled.delta)
        for ch in list(names):
            trial = [n for n in names if n != ch]
            if typechecks_under(compiled, o.name, compiled.delta.restrict(trial)) is None:
                names = trial
        out[o.name] = compiled.delta.restrict(names)
    return out


def check_independence(
    compiled: Compiled,
    buffer,
    events: Iterable[InputEvent],
    sub_contexts: Optional[Mapping[str, InputContext]] = None,
    fuel: int = DEFAULT_FUEL,
) -> Report:
    """Run the program and check every output against its smaller input context.

    ``sub_contexts`` maps output names to contexts they should typecheck
    under; each is verified first.  By default each output gets the smallest
    context found by ``minimal_contexts``.
    """
    report = Report("independence")
    subs = dict(sub_contexts) if sub_contexts is not None else minimal_contexts(compiled)
    for name, sub in subs.items():
        problem = typechecks_under(compiled, name, sub)
        if problem is not None:
            report.fail(output=name, reason=f"does not typecheck under {sorted(sub)}: {problem}")
    if not report.ok:
        return report
    delta = compiled.delta
    machine = Machine(delta, compiled.output_names, Allocator(), fuel)
    updates = {name: 0 for name in compiled.output_names}
    try:
        _, state = machine.init(compiled.term, buffer)
        for step, event in enumerate(events, start=1):
            report.steps = step
            batch, state = machine.step(state, event)
            cls = delta[event.channel].cls
            if batch and not cls.is_push:
                report.fail(step=step, channel=event.channel, reason="output on a buffered-only event")
            for name, _ in batch:
                updates[name] += 1
                if name in subs and event.channel not in subs[name]:
                    report.fail(step=step, channel=event.channel, output=name, reason="output outside its channels")
    except (StuckError, FuelExhausted) as exc:
        report.fail(step=report.steps, reason=f"{exc.kind}: {exc.message}")
    report.details["contexts"] = {name: sorted(sub) for name, sub in subs.items()}
    report.details["updates"] = updates
    return report
