"""Command-line driver: check, run and trace programs, plus the verification harnesses.

Exit codes: 0 ok, 1 parse/elaboration/type error, 2 I/O error, 3 invalid
event or buffer, 4 stuck or out of fuel (or a failed verification).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Iterable, Iterator, Optional, TextIO

from .core import InputContext, Term
from .errors import EventError, FuelExhausted, RattError, StuckError
from .eval import DEFAULT_FUEL, Allocator
from .pipeline import Compiled, compile_source
from .reactive import InputEvent, Machine, OutputBatch, Running, describe_state
from .values import LiteralError, coerce, to_json

EXIT_OK, EXIT_TYPE, EXIT_IO, EXIT_EVENT, EXIT_STUCK = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def diagnostic(path: str, err: RattError) -> str:
    rec = err.record()
    where = f"{path}:{rec['span']['line']}:{rec['span']['col']}" if rec["span"] else path
    return f"{where}: {rec['kind']}: {rec['message']}"


def load_program(path: str, prelude: bool = True) -> Compiled:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_IO, f"{path}: cannot read program: {exc.strerror or exc}") from None
    try:
        return compile_source(text, prelude=prelude)
    except RattError as exc:
        raise CliError(EXIT_TYPE, diagnostic(path, exc)) from None


def parse_event(line: str, delta: InputContext) -> InputEvent:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise EventError(f"not a JSON record: {exc.msg}") from None
    if not isinstance(rec, dict) or set(rec) != {"ch", "val"} or not isinstance(rec["ch"], str):
        raise EventError('an event record looks like {"ch": "name", "val": literal}')
    ch = rec["ch"]
    if ch not in delta:
        raise EventError(f"event on undeclared channel {ch}")
    try:
        value = coerce(rec["val"], delta[ch].type)
    except LiteralError as exc:
        raise EventError(f"channel {ch}: {exc}") from None
    return InputEvent(ch, value)


def _records(path: str) -> list[tuple[int, str]]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [(i, line) for i, line in enumerate(fh, start=1) if line.strip()]
    except OSError as exc:
        raise CliError(EXIT_IO, f"{path}: cannot read: {exc.strerror or exc}") from None


def load_events(path: str, delta: InputContext) -> list[InputEvent]:
    events = []
    for lineno, line in _records(path):
        try:
            events.append(parse_event(line, delta))
        except EventError as exc:
            raise CliError(EXIT_EVENT, f"{path}:{lineno}: {exc}") from None
    return events


def load_buffer(path: Optional[str], delta: InputContext) -> dict[str, Term]:
    buffer: dict[str, Term] = {}
    if path is None:
        return buffer
    for lineno, line in _records(path):
        try:
            ev = parse_event(line, delta)
        except EventError as exc:
            raise CliError(EXIT_EVENT, f"{path}:{lineno}: {exc}") from None
        if ev.channel in buffer:
            raise CliError(EXIT_EVENT, f"{path}:{lineno}: channel {ev.channel} appears twice")
        buffer[ev.channel] = ev.value
    return buffer


def batch_record(step: int, batch: OutputBatch, state: Optional[Running] = None) -> str:
    rec: dict = {"step": step, "outputs": [[name, to_json(v)] for name, v in batch]}
    if state is not None:
        rec["state"] = describe_state(state)
    return json.dumps(rec)


def _interactive_events(stream: TextIO, delta: InputContext, err: TextIO) -> Iterator[InputEvent]:
    for line in stream:
        if not line.strip():
            continue
        try:
            yield parse_event(line, delta)
        except EventError as exc:
            print(f"<stdin>: {exc} (event skipped)", file=err, flush=True)


def execute(
    compiled: Compiled,
    buffer: dict[str, Term],
    events: Iterable[InputEvent],
    out: TextIO,
    dump_state: bool = False,
    fuel: int = DEFAULT_FUEL,
    seed: int = 0,
) -> None:
    machine = Machine(compiled.delta, compiled.output_names, Allocator(seed), fuel)
    try:
        batch, state = machine.init(compiled.term, buffer)
    except EventError as exc:
        raise CliError(EXIT_EVENT, f"initial buffer: {exc}") from None
    print(batch_record(0, batch, state if dump_state else None), file=out, flush=True)
    for step, event in enumerate(events, start=1):
        batch, state = machine.step(state, event)
        print(batch_record(step, batch, state if dump_state else None), file=out, flush=True)


def cmd_check(args, out: TextIO) -> int:
    compiled = load_program(args.file, not args.no_prelude)
    from .pretty import show_type

    for o in compiled.core.outputs:
        print(f"{o.name} : Sig {show_type(o.type, 4)}", file=out)
    return EXIT_OK


def cmd_run(args, out: TextIO, stdin: TextIO, err: TextIO, dump_state: bool = False) -> int:
    if bool(args.events) == bool(args.interactive):
        raise CliError(EXIT_IO, "choose exactly one of --events FILE or --interactive")
    compiled = load_program(args.file, not args.no_prelude)
    buffer = load_buffer(args.buffer, compiled.delta)
    if args.interactive:
        events: Iterable[InputEvent] = _interactive_events(stdin, compiled.delta, err)
    else:
        events = load_events(args.events, compiled.delta)
    try:
        execute(compiled, buffer, events, out, dump_state, args.fuel, args.seed)
    except EventError as exc:
        raise CliError(EXIT_EVENT, str(exc)) from None
    except (StuckError, FuelExhausted) as exc:
        raise CliError(EXIT_STUCK, f"{exc.kind}: {exc.message}") from None
    return EXIT_OK


def cmd_audit(args, out: TextIO) -> int:
    from .verify import audit_gc, check_determinism, check_independence

    compiled = load_program(args.file, not args.no_prelude)
    buffer = load_buffer(args.buffer, compiled.delta)
    events = load_events(args.events, compiled.delta)
    reports = [
        audit_gc(compiled, buffer, events, fuel=args.fuel),
        check_determinism(compiled, buffer, events, seeds=(args.seed, args.seed + 1000), fuel=args.fuel),
        check_independence(compiled, buffer, events, fuel=args.fuel),
    ]
    ok = True
    for report in reports:
        for rec in report.records():
            print(json.dumps(rec), file=out)
        ok = ok and report.ok
    return EXIT_OK if ok else EXIT_STUCK


def cmd_fuzz(args, out: TextIO) -> int:
    from .verify import fuzz_productivity

    report = fuzz_productivity(args.seed, size=args.size, steps=args.steps, programs=args.programs, fuel=args.fuel)
    for rec in report.records():
        print(json.dumps(rec), file=out)
    return EXIT_OK if report.ok else EXIT_STUCK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asyncratt", description="Async RaTT: check and run reactive programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("file", help="program source (.ratt)")
        p.add_argument("--no-prelude", action="store_true", help="do not import the standard combinators")

    def running(p: argparse.ArgumentParser) -> None:
        common(p)
        p.add_argument("--events", metavar="FILE", help='event script, one {"ch": ..., "val": ...} per line')
        p.add_argument("--interactive", action="store_true", help="read events from standard input as they arrive")
        p.add_argument("--buffer", metavar="FILE", help="initial values of the buffered channels, same format")
        p.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="evaluation budget per machine step")
        p.add_argument("--seed", type=int, default=0, help="first location id handed out by the allocator")

    common(sub.add_parser("check", help="parse, elaborate and typecheck a program"))
    running(sub.add_parser("run", help="run a program and print one output batch per step"))
    running(sub.add_parser("trace", help="like run, but also dump the machine state after every step"))
    audit = sub.add_parser("audit", help="check GC safety, determinism and signal independence on a run")
    common(audit)
    audit.add_argument("--events", metavar="FILE", required=True)
    audit.add_argument("--buffer", metavar="FILE")
    audit.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    audit.add_argument("--seed", type=int, default=0)
    fuzz = sub.add_parser("fuzz", help="run randomly generated well-typed programs on random events")
    fuzz.add_argument("--seed", type=int, default=0)
    fuzz.add_argument("--size", type=int, default=5, help="maximum expression depth of generated programs")
    fuzz.add_argument("--steps", type=int, default=100, help="events per program")
    fuzz.add_argument("--programs", type=int, default=20, help="number of programs to generate")
    fuzz.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    return parser


def main(argv: Optional[list[str]] = None, out: TextIO = None, err: TextIO = None, stdin: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    stdin = stdin or sys.stdin
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(args, out)
        if args.command == "run":
            return cmd_run(args, out, stdin, err)
        if args.command == "trace":
            return cmd_run(args, out, stdin, err, dump_state=True)
        if args.command == "audit":
            return cmd_audit(args, out)
        return cmd_fuzz(args, out)
    except CliError as exc:
        print(str(exc), file=err)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
