import io
import json

import pytest

from asyncratt.cli import main
from asyncratt.stdlib import example_path

PRELUDE = str(example_path("field1").parent.parent / "prelude.ratt")
FIELD1 = str(example_path("field1"))
CALCULUS = str(example_path("calculus"))


def cli(*argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err, stdin=io.StringIO(stdin))
    return code, out.getvalue(), err.getvalue()


def write_events(path, *records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    return str(path)


def unit(ch):
    return {"ch": ch, "val": None}


def records(text):
    return [json.loads(line) for line in text.splitlines()]


class TestCheck:
    def test_prelude(self):
        assert cli("check", PRELUDE)[0] == 0

    def test_examples_report_output_types(self):
        code, out, _ = cli("check", FIELD1)
        assert code == 0 and out.strip() == "x : Sig Nat"

    def test_box_of_a_function_variable(self, tmp_path):
        src = tmp_path / "bad.ratt"
        src.write_text("defs\n  bad : (Nat -> Nat) -> Box (Nat -> Nat)\n  bad f = box f\n")
        code, _, err = cli("check", str(src))
        assert code == 1
        assert err.startswith(f"{src}:3:") and "UnboundVariable" in err

    def test_syntax_error(self, tmp_path):
        src = tmp_path / "bad.ratt"
        src.write_text("outputs\n  x : Nat = let y = in y\n")
        code, _, err = cli("check", str(src))
        assert code == 1 and "SyntaxError" in err

    def test_missing_file(self, tmp_path):
        code, _, err = cli("check", str(tmp_path / "nope.ratt"))
        assert code == 2 and "cannot read" in err


class TestRun:
    def test_field1_golden_trace(self, tmp_path):
        events = write_events(tmp_path / "ev.jsonl", *map(unit, ["up", "toggle", "up", "up"]))
        code, out, _ = cli("run", FIELD1, "--events", events)
        assert code == 0
        assert records(out) == [
            {"step": 0, "outputs": [["x", 0]]},
            {"step": 1, "outputs": [["x", 1]]},
            {"step": 2, "outputs": [["x", 1]]},
            {"step": 3, "outputs": []},
            {"step": 4, "outputs": []},
        ]

    def test_empty_script(self, tmp_path):
        events = write_events(tmp_path / "ev.jsonl")
        code, out, _ = cli("run", FIELD1, "--events", events)
        assert code == 0 and records(out) == [{"step": 0, "outputs": [["x", 0]]}]

    def test_unknown_channel_aborts_before_running(self, tmp_path):
        events = write_events(tmp_path / "ev.jsonl", unit("up"), unit("down"))
        code, out, err = cli("run", FIELD1, "--events", events)
        assert code == 3 and out == "" and ":2:" in err and "down" in err

    def test_ill_typed_event_value(self, tmp_path):
        events = write_events(tmp_path / "ev.jsonl", {"ch": "up", "val": 3})
        assert cli("run", FIELD1, "--events", events)[0] == 3

    def test_exactly_one_event_source(self, tmp_path):
        assert cli("run", FIELD1)[0] == 2

    def test_interactive_skips_bad_events(self):
        stdin = "\n".join([json.dumps(unit("up")), "not json", json.dumps(unit("down")), json.dumps(unit("up"))]) + "\n"
        code, out, err = cli("run", FIELD1, "--interactive", stdin=stdin)
        assert code == 0
        assert [r["outputs"] for r in records(out)] == [[["x", 0]], [["x", 1]], [["x", 2]]]
        assert err.count("event skipped") == 2

    def test_buffer_file(self, tmp_path):
        buffer = write_events(tmp_path / "buf.jsonl", {"ch": "sample", "val": 0.1}, {"ch": "value", "val": 2})
        events = write_events(tmp_path / "ev.jsonl", *[{"ch": "sample", "val": 0.1}] * 3)
        code, out, _ = cli("run", CALCULUS, "--events", events, "--buffer", buffer)
        assert code == 0
        areas = [v for r in records(out) for n, v in r["outputs"] if n == "area"]
        assert areas == pytest.approx([0.0, 0.2, 0.4, 0.6])

    def test_missing_buffer_entry(self, tmp_path):
        buffer = write_events(tmp_path / "buf.jsonl", {"ch": "sample", "val": 0.1})
        events = write_events(tmp_path / "ev.jsonl")
        assert cli("run", CALCULUS, "--events", events, "--buffer", buffer)[0] == 3

    def test_out_of_fuel(self, tmp_path):
        events = write_events(tmp_path / "ev.jsonl", unit("up"))
        code, _, err = cli("run", FIELD1, "--events", events, "--fuel", "20")
        assert code == 4 and "FuelExhausted" in err

    def test_repeated_runs_are_byte_identical(self, tmp_path):
        events = write_events(tmp_path / "ev.jsonl", *map(unit, ["up", "toggle", "up", "toggle", "up"]))
        first = cli("trace", FIELD1, "--events", events, "--seed", "7")[1]
        second = cli("trace", FIELD1, "--events", events, "--seed", "7")[1]
        assert first == second and first


class TestTrace:
    def test_state_dumps_follow_the_heap(self, tmp_path):
        events = write_events(tmp_path / "ev.jsonl", unit("up"), unit("toggle"))
        code, out, _ = cli("trace", FIELD1, "--events", events)
        assert code == 0
        init, after_up, after_toggle = (r["state"] for r in records(out))
        assert sorted(map(sorted, (h["clock"] for h in init["heap"]))) == sorted(
            [["toggle", "up"], ["up"], ["up"], ["toggle"]]
        )
        assert init["outputs"]["x"] in {h["loc"] for h in init["heap"]}
        assert len(after_up["heap"]) == 4
        assert sorted(h["clock"] for h in after_toggle["heap"] if h["loc"] == after_toggle["outputs"]["x"]) == [["toggle"]]

    def test_program_without_outputs(self, tmp_path):
        src = tmp_path / "empty.ratt"
        src.write_text("inputs\n  up : p Unit\n")
        events = write_events(tmp_path / "ev.jsonl", unit("up"))
        code, out, _ = cli("trace", str(src), "--events", events)
        assert code == 0
        assert [r["state"]["outputs"] for r in records(out)] == [{}, {}]


class TestHarnesses:
    def test_audit(self, tmp_path):
        events = write_events(tmp_path / "ev.jsonl", *map(unit, ["up", "toggle", "up", "up"]))
        code, out, _ = cli("audit", FIELD1, "--events", events)
        assert code == 0
        assert all(r["ok"] for r in records(out) if "ok" in r)

    def test_fuzz(self):
        code, out, _ = cli("fuzz", "--seed", "3", "--programs", "3", "--steps", "20")
        assert code == 0 and records(out)
