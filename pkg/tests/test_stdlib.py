import pytest

from asyncratt.core import FloatLit, UnitVal, nat, nat_value
from asyncratt.errors import RattTypeError
from asyncratt.pipeline import compile_example, compile_source
from asyncratt.reactive import InputEvent
from asyncratt.stdlib import COMBINATORS, EXAMPLES, load_prelude, manifest, prelude_source
from asyncratt.values import to_json

from conftest import run_source, unit_events

NAT_INPUTS = "inputs\n  a : p Nat\n  b : p Nat\n  u : p Unit\n"
FLOAT_INPUTS = "inputs\n  sample : bp Float\n  value : bp Float\n"


def ev(ch, v=None):
    if v is None:
        return InputEvent(ch, UnitVal())
    return InputEvent(ch, FloatLit(v) if isinstance(v, float) else nat(v))


def trace(source, events, buffer=None):
    """Per-step lists of (name, json value)."""
    return [[(n, to_json(v)) for n, v in batch] for batch in run_source(source, events, buffer)]


def outputs(source, events, buffer=None, name=None):
    return [v for batch in trace(source, events, buffer) for n, v in batch if name in (None, n)]


class TestManifest:
    def test_all_fifteen_combinators_are_present(self):
        names = [e.name for e in manifest()]
        assert set(COMBINATORS) <= set(names)
        assert len(COMBINATORS) == 15

    def test_every_entry_typechecks(self):
        assert set(COMBINATORS) <= set(load_prelude())

    @pytest.mark.parametrize(
        "name, scheme, stable",
        [
            ("map", "Box (A -> B) -> Sig A -> Sig B", ()),
            ("scan", "Box (A -> B -> B) -> B -> Sig A -> Sig B", ("B",)),
            ("scanAwait", "Box (A -> B -> B) -> B -> O (Sig A) -> Sig B", ("B",)),
            ("zip", "Sig A -> Sig B -> Sig (A * B)", ("A", "B")),
            ("interleave", "Box (A -> A -> A) -> O (Sig A) -> O (Sig A) -> O (Sig A)", ()),
            ("toggleSig", "Box (O Unit) -> Box (A -> Sig A) -> Box (A -> Sig A) -> A -> Sig A", ("A",)),
            ("switch", "Sig A -> O (Sig A) -> Sig A", ()),
            ("const", "A -> Sig A", ()),
        ],
    )
    def test_stated_schemes(self, name, scheme, stable):
        entry = next(e for e in manifest() if e.name == name)
        assert entry.scheme == scheme and entry.stable == stable

    def test_channel_indexed_entries(self):
        indexed = {e.name: e.channels for e in manifest() if e.channels}
        assert indexed["sigAwait"] == ("k",) and indexed["sig"] == ("k",)
        assert indexed["integral"] == ("sample",) and indexed["derivative"] == ("sample",)

    def test_entries_carry_their_source(self):
        entry = next(e for e in manifest() if e.name == "map")
        assert entry.source.startswith("map :") and "delay" in entry.source

    @pytest.mark.parametrize(
        "signature, weakened",
        [
            ("zip : (Stable A, Stable B) => ", "zip : "),
            ("zip : (Stable A, Stable B) => ", "zip : Stable B => "),
            ("scan : Stable B => ", "scan : "),
        ],
    )
    def test_stability_constraints_are_needed(self, signature, weakened):
        source = prelude_source()
        assert signature in source
        with pytest.raises(RattTypeError):
            compile_source(source.replace(signature, weakened) + "outputs\n  x : Nat = const 0\n", prelude=False)

    @pytest.mark.parametrize("name", EXAMPLES)
    def test_examples_compile(self, name):
        assert compile_example(name).output_names


class TestBehaviour:
    def test_map_increments(self):
        source = NAT_INPUTS + "outputs\n  y : Nat = map (box (\\n -> n + 1)) (0 :: sigAwait @a)\n"
        assert outputs(source, [ev("a", 3), ev("u"), ev("a", 5)]) == [1, 4, 6]

    def test_zip_copies_the_stale_side(self):
        source = NAT_INPUTS + "outputs\n  p : Nat * Nat = zip (0 :: sigAwait @a) (0 :: sigAwait @b)\n"
        got = outputs(source, [ev("a", 1), ev("b", 2), ev("a", 3), ev("u")])
        assert got == [[0, 0], [1, 0], [1, 2], [3, 2]]

    def test_switch_hands_over_to_the_delayed_signal(self):
        source = NAT_INPUTS + "outputs\n  s : Nat = switch (0 :: sigAwait @a) (delay (adv (await u) ; 100 :: sigAwait @b))\n"
        got = trace(source, [ev("a", 1), ev("b", 7), ev("u"), ev("a", 5), ev("b", 9)])
        assert got == [[("s", 0)], [("s", 1)], [], [("s", 100)], [], [("s", 9)]]

    def test_toggle_sig_alternates(self):
        channels = ["up", "up", "toggle", "up", "toggle", "up", "up", "toggle", "toggle"]
        batches = compile_and_run("field1", unit_events(*channels))
        # oracle: a counter that only counts up presses while it has focus
        counting, value, expected = True, 0, [[0]]
        for ch in channels:
            if ch == "up":
                if counting:
                    value += 1
                expected.append([value] if counting else [])
            else:
                counting = not counting
                expected.append([value])
        assert batches == expected

    def test_interleave_and_sum(self):
        source = NAT_INPUTS + (
            "outputs\n"
            "  i : Nat = 0 :: interleave (box (\\x y -> x + y)) (sigAwait @a) (sigAwait @b)\n"
            "  t : Nat = sum (0 :: sigAwait @a)\n"
        )
        events = [ev("a", 2), ev("b", 5), ev("a", 4)]
        assert outputs(source, events, name="i") == [0, 2, 5, 4]
        assert outputs(source, events, name="t") == [0, 2, 6]

    def test_count_and_const(self):
        source = NAT_INPUTS + "outputs\n  c : Nat = count (sigAwait @u) 0\n  k : Nat = const 7\n"
        assert trace(source, [ev("u"), ev("a", 1), ev("u")]) == [[("c", 0), ("k", 7)], [("c", 1)], [], [("c", 2)]]

    def test_integral_of_zero_waits(self):
        source = FLOAT_INPUTS + "outputs\n  area : Float = integral @sample 0.0 (const 0.0)\n"
        got = trace(source, [ev("sample", 0.1)] * 5, {"sample": FloatLit(0.1), "value": FloatLit(0.0)})
        assert got == [[("area", 0.0)]] + [[]] * 5

    def test_integral_accumulates_rectangles(self):
        source = FLOAT_INPUTS + "outputs\n  area : Float = integral @sample 1.0 (sig @value)\n"
        events = [ev("sample", 0.5), ev("value", 4.0), ev("sample", 0.25)]
        got = outputs(source, events, {"sample": FloatLit(0.1), "value": FloatLit(2.0)})
        assert got == pytest.approx([1.0, 2.0, 2.0, 3.0])

    def test_derivative_of_a_constant_pauses(self):
        source = FLOAT_INPUTS + "outputs\n  slope : Float = derivative @sample (sig @value)\n"
        got = trace(source, [ev("sample", 0.1)] * 5, {"sample": FloatLit(0.1), "value": FloatLit(2.0)})
        assert got == [[("slope", 0.0)]] + [[]] * 5

    def test_derivative_follows_a_change(self):
        source = FLOAT_INPUTS + "outputs\n  slope : Float = derivative @sample (sig @value)\n"
        events = [ev("value", 3.0), ev("sample", 0.5), ev("sample", 0.5)]
        got = outputs(source, events, {"sample": FloatLit(0.5), "value": FloatLit(2.0)})
        # the update pretends sample ticked: (3 - 2) / 0.5; the next sample sees no change,
        # gives 0 and pauses, so the last sample emits nothing
        assert got == pytest.approx([0.0, 2.0, 0.0])


def compile_and_run(name, events):
    from asyncratt.reactive import Machine

    compiled = compile_example(name)
    batches = Machine(compiled.delta, compiled.output_names).run(compiled.term, {}, events)
    return [[nat_value(v) for _, v in batch] for batch in batches]
