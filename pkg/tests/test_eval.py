import io
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asyncratt.core import (
    EMPTY_STORE,
    Adv,
    App,
    Await,
    ClockOf,
    ClockUnion,
    Delay,
    DFix,
    FixT,
    FloatLit,
    FloatOp,
    Inj,
    Into,
    Lam,
    Loc,
    Location,
    NatRec,
    Never,
    Pair,
    Proj,
    Read,
    Select,
    SingleHeap,
    Suc,
    TwoHeap,
    UnitVal,
    Var,
    Zero,
    nat,
    nat_value,
)
from asyncratt.errors import FuelExhausted, StuckError, StuckKind
from asyncratt.eval import Allocator, alloc, clock_eval, evaluate, jsonl_tracer


def loc(i, *clock):
    return Location(i, frozenset(clock))


def two_heap(channel="up", value=UnitVal(), now=None, later=None):
    return TwoHeap(now or {}, channel, value, later or {})


def stuck(kind, t, store=EMPTY_STORE, buffer=None, **kw):
    with pytest.raises(StuckError) as info:
        evaluate(t, store, buffer or {}, **kw)
    assert info.value.stuck_kind == kind, info.value
    return info.value


class TestClockEval:
    def test_await(self):
        assert clock_eval(ClockOf(Await("up"))) == {"up"}

    def test_location(self):
        assert clock_eval(ClockOf(Loc(loc(1, "up", "toggle")))) == {"up", "toggle"}

    def test_union(self):
        theta = ClockUnion(ClockOf(Loc(loc(1, "toggle"))), ClockOf(Await("up")))
        assert clock_eval(theta) == {"toggle", "up"}


class TestAlloc:
    def test_fresh_on_empty(self):
        l0, store = alloc(EMPTY_STORE, frozenset({"up"}), Allocator())
        assert l0.clock == {"up"} and store == EMPTY_STORE

    def test_consecutive_ids_differ(self):
        a = Allocator()
        assert alloc(EMPTY_STORE, frozenset(), a)[0].id != alloc(EMPTY_STORE, frozenset(), a)[0].id

    def test_empty_clock(self):
        assert alloc(EMPTY_STORE, frozenset(), Allocator())[0].clock == frozenset()


class TestRules:
    def test_adv_await_returns_the_input(self):
        store = two_heap("up", UnitVal(), later={loc(9, "toggle"): Zero()})
        out = evaluate(Adv(Await("up")), store, {})
        assert out.value == UnitVal() and out.store == store

    def test_never_allocates_without_storing(self):
        out = evaluate(Never(), EMPTY_STORE, {})
        assert isinstance(out.value, Loc) and out.value.loc.clock == frozenset()
        assert out.store == EMPTY_STORE

    def test_delay_stores_on_the_later_heap(self):
        t = Delay(ClockOf(Await("up")), Adv(Await("up")))
        out = evaluate(t, EMPTY_STORE, {})
        (l,) = out.store.later
        assert out.value == Loc(l) and l.clock == {"up"} and out.store.later[l] == Adv(Await("up"))

    def test_field1_initial_value(self, field1):
        out = evaluate(field1.term, EMPTY_STORE, {})
        assert isinstance(out.value, Into) and out.value.arg.left == Zero()
        l1 = out.value.arg.right.loc
        assert l1.clock == {"toggle", "up"}
        assert len(out.store.later) == 4 and l1 in out.store.later

    def test_natrec(self):
        t = NatRec(Zero(), "x", "y", Suc(Var("y")), nat(2))
        assert evaluate(t, EMPTY_STORE, {}).value == nat(2)

    def test_read(self):
        assert evaluate(Read("time"), EMPTY_STORE, {"time": FloatLit(2.5)}).value == FloatLit(2.5)

    def test_adv_location_runs_the_stored_computation(self):
        l = loc(0, "up")
        store = two_heap("up", nat(3), now={l: Suc(Adv(Await("up")))})
        assert evaluate(Adv(Loc(l)), store, {}).value == nat(4)

    def test_adv_dfix_unrolls(self):
        body = Pair(Zero(), Var("r"))
        out = evaluate(Adv(DFix("r", body)), two_heap(), {})
        assert out.value == Pair(Zero(), DFix("r", body))

    def test_fix_unrolls_once(self):
        out = evaluate(FixT("r", Lam("n", Var("r"))), EMPTY_STORE, {})
        assert out.value == Lam("n", DFix("r", Lam("n", Var("r"))))

    def test_select_left_only(self):
        l1, l2 = loc(0, "up"), loc(1, "toggle")
        store = two_heap("up", UnitVal(), now={l1: nat(1)}, later={l2: nat(2)})
        out = evaluate(Select(Loc(l1), Loc(l2)), store, {})
        assert out.value == Inj(1, Inj(1, Pair(nat(1), Loc(l2))))

    def test_select_right_only(self):
        l1 = loc(1, "toggle")
        store = two_heap("up", nat(5), later={l1: nat(2)})
        out = evaluate(Select(Loc(l1), Await("up")), store, {})
        assert out.value == Inj(1, Inj(2, Pair(Loc(l1), nat(5))))

    def test_select_both_advances_left_then_right(self):
        l1, l2 = loc(0, "up"), loc(1, "up", "toggle")
        allocator = Allocator(100)
        store = two_heap(
            "up",
            UnitVal(),
            now={l1: Delay(ClockOf(Await("up")), Zero()), l2: Delay(ClockOf(Await("up")), Zero())},
        )
        out = evaluate(Select(Loc(l1), Loc(l2)), store, {}, allocator=allocator)
        assert out.value == Inj(2, Pair(Loc(loc(100, "up")), Loc(loc(101, "up"))))

    def test_float_operations(self):
        assert evaluate(FloatOp("add", (FloatLit(0.5), FloatLit(0.25))), EMPTY_STORE, {}).value == FloatLit(0.75)
        assert evaluate(FloatOp("lt", (FloatLit(0.5), FloatLit(0.25))), EMPTY_STORE, {}).value == Inj(2, UnitVal())
        inf = evaluate(FloatOp("div", (FloatLit(1.0), FloatLit(0.0))), EMPTY_STORE, {}).value
        assert inf.value == math.inf
        nan = evaluate(FloatOp("div", (FloatLit(0.0), FloatLit(0.0))), EMPTY_STORE, {}).value
        assert math.isnan(nan.value)


class TestStuck:
    def test_dangling_location(self):
        stuck(StuckKind.DanglingLocation, Adv(Loc(loc(7, "up"))), two_heap())

    def test_adv_outside_now_heap(self):
        stuck(StuckKind.AdvOutsideNowHeap, Adv(Await("up")))

    def test_unbound_buffer(self):
        stuck(StuckKind.UnboundChannelBuffer, Read("time"))

    def test_bad_select(self):
        l1, l2 = loc(0, "a"), loc(1, "b")
        stuck(StuckKind.BadSelect, Select(Loc(l1), Loc(l2)), two_heap("up", later={l1: Zero(), l2: Zero()}))

    def test_ill_typed_redex(self):
        err = stuck(StuckKind.IllTypedRedex, Proj(1, Zero()))
        assert err.term == Proj(1, Zero())

    def test_fuel(self):
        omega = Lam("x", App(Var("x"), Var("x")))
        with pytest.raises(FuelExhausted):
            evaluate(App(omega, omega), EMPTY_STORE, {}, fuel=1000)


class TestTracing:
    def test_one_record_per_rule(self):
        stream = io.StringIO()
        evaluate(Pair(Zero(), Suc(Zero())), EMPTY_STORE, {}, tracer=jsonl_tracer(stream))
        records = [json.loads(line) for line in stream.getvalue().splitlines()]
        assert [r["rule"] for r in records] == ["pair", "suc"]
        assert all(set(r) == {"rule", "redex", "store_size"} for r in records)


def plus(a, b):
    return NatRec(a, "_", "y", Suc(Var("y")), b)


def times(a, b):
    return NatRec(Zero(), "_", "y", plus(Var("y"), a), b)


@settings(max_examples=40, deadline=None)
@given(m=st.integers(0, 12), n=st.integers(0, 12))
def test_natrec_arithmetic_matches_host_arithmetic(m, n):
    assert nat_value(evaluate(plus(nat(m), nat(n)), EMPTY_STORE, {}).value) == m + n
    assert nat_value(evaluate(times(nat(m), nat(n)), EMPTY_STORE, {}).value) == m * n


def test_natrec_on_a_large_numeral_does_not_overflow_the_stack():
    assert nat_value(evaluate(plus(nat(0), nat(20000)), EMPTY_STORE, {}).value) == 20000


def test_evaluation_is_deterministic_and_monotone(field1):
    l0 = loc(500, "up")
    start = SingleHeap({l0: Zero()})
    a = evaluate(field1.term, start, {}, allocator=Allocator(3))
    b = evaluate(field1.term, start, {}, allocator=Allocator(3))
    assert a == b
    assert a.store.later[l0] == Zero()
    assert all(l.clock <= {"up", "toggle"} for l in a.store.later)
