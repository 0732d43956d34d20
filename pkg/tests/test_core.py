from hypothesis import given, strategies as st

from asyncratt.core import (
    BOOL,
    FLOAT,
    NAT,
    UNIT,
    App,
    Await,
    Box,
    BoxT,
    ChannelClass,
    ChannelDecl,
    ClockOf,
    Delay,
    DelayAny,
    DelayExist,
    DFix,
    FixRec,
    Fun,
    InputContext,
    Into,
    Lam,
    Let,
    Loc,
    Location,
    Pair,
    Prod,
    Sig,
    Suc,
    Sum,
    TypeVar,
    UnitVal,
    Var,
    Zero,
    alpha_eq,
    free_vars,
    is_stable,
    is_value,
    is_value_type,
    nat,
    nat_value,
    sig_element,
    subst,
    type_alpha_eq,
    unfold,
)


class TestTypes:
    def test_box_of_function_is_stable(self):
        assert is_stable(Box(Fun(NAT, NAT)))

    def test_function_is_not_stable(self):
        assert not is_stable(Fun(NAT, NAT))

    def test_base_types_are_stable(self):
        assert is_stable(NAT) and is_stable(UNIT) and is_stable(FLOAT)

    def test_delays_and_signals(self):
        assert is_stable(DelayAny(Fun(NAT, NAT)))
        assert not is_stable(DelayExist(NAT))
        assert not is_stable(Sig(NAT))
        assert is_stable(Prod(NAT, Sum(UNIT, Box(Sig(NAT)))))
        assert not is_stable(Prod(NAT, DelayExist(NAT)))

    def test_stable_type_variables(self):
        assert not is_stable(TypeVar("A"))
        assert is_stable(TypeVar("A"), frozenset({"A"}))

    def test_value_types(self):
        assert is_value_type(Prod(NAT, Sum(UNIT, NAT)))
        assert not is_value_type(DelayExist(NAT))
        assert is_value_type(UNIT)
        assert is_value_type(FLOAT)
        assert not is_value_type(Box(NAT))
        assert not is_value_type(Fun(NAT, NAT))
        assert not is_value_type(Sig(NAT))

    def test_signal_unfolds_to_head_and_delayed_tail(self):
        assert unfold(Sig(NAT)) == Prod(NAT, DelayExist(Sig(NAT)))
        assert sig_element(Sig(BOOL)) == BOOL
        assert sig_element(NAT) is None

    def test_alpha_equivalent_recursive_types(self):
        a = FixRec("s", Prod(NAT, TypeVar("s")))
        assert type_alpha_eq(a, Sig(NAT))
        assert not type_alpha_eq(a, Sig(UNIT))


class TestChannels:
    def test_classes(self):
        assert ChannelClass.PUSH_ONLY.is_push and not ChannelClass.PUSH_ONLY.is_buffered
        assert ChannelClass.BUFFERED_ONLY.is_buffered and not ChannelClass.BUFFERED_ONLY.is_push
        assert ChannelClass.BUFFERED_PUSH.is_push and ChannelClass.BUFFERED_PUSH.is_buffered

    def test_input_context(self):
        delta = InputContext(
            [
                ("up", ChannelDecl(ChannelClass.PUSH_ONLY, UNIT)),
                ("time", ChannelDecl(ChannelClass.BUFFERED_ONLY, FLOAT)),
                ("sample", ChannelDecl(ChannelClass.BUFFERED_PUSH, FLOAT)),
            ]
        )
        assert list(delta) == ["up", "time", "sample"]
        assert delta.push_channels() == {"up", "sample"}
        assert delta.buffered_channels() == {"time", "sample"}
        assert list(delta.restrict(["sample", "up"])) == ["up", "sample"]

    def test_input_context_rejects_non_value_types(self):
        import pytest

        with pytest.raises(ValueError):
            InputContext([("f", ChannelDecl(ChannelClass.PUSH_ONLY, Fun(NAT, NAT)))])


class TestTerms:
    def test_values(self):
        loc = Location(1, frozenset({"up"}))
        assert is_value(Into(Pair(Zero(), Loc(loc))))
        assert not is_value(Delay(ClockOf(Await("up")), Zero()))
        assert not is_value(App(Lam("x", Var("x")), UnitVal()))
        for v in (Var("x"), UnitVal(), Suc(Zero()), Lam("x", Var("y")), Await("k"), BoxT(App(Var("f"), Zero())), DFix("r", Var("r"))):
            assert is_value(v)

    def test_locations_compare_by_id(self):
        assert Location(3, frozenset({"a"})) == Location(3, frozenset())
        assert sorted([Location(2, frozenset()), Location(1, frozenset())])[0].id == 1
        assert str(Location(7, frozenset())) == "l7"

    def test_numerals(self):
        assert nat_value(nat(5)) == 5
        assert nat_value(Suc(Var("x"))) is None


class TestSubstitution:
    def test_variable_hit(self):
        assert subst(Var("x"), Zero(), "x") == Zero()

    def test_shadowing(self):
        assert subst(Lam("x", Var("x")), Zero(), "x") == Lam("x", Var("x"))

    def test_congruence(self):
        assert subst(Suc(Var("x")), Suc(Zero()), "x") == Suc(Suc(Zero()))

    def test_capture_avoidance(self):
        # (\y. x)[y/x] must not capture the substituted y
        out = subst(Lam("y", Var("x")), Var("y"), "x")
        assert isinstance(out, Lam) and out.binder != "y"
        assert out.body == Var("y")
        assert free_vars(out) == {"y"}

    def test_substitution_into_clocks(self):
        loc = Location(0, frozenset({"up"}))
        t = Delay(ClockOf(Var("xs")), Var("xs"))
        out = subst(t, Loc(loc), "xs")
        assert out == Delay(ClockOf(Loc(loc)), Loc(loc))

    def test_alpha_equivalence(self):
        assert alpha_eq(Lam("x", Var("x")), Lam("y", Var("y")))
        assert not alpha_eq(Lam("x", Var("z")), Lam("y", Var("y")))
        assert alpha_eq(Let("a", Zero(), Var("a")), Let("b", Zero(), Var("b")))


names = st.sampled_from(["x", "y", "z"])


@st.composite
def terms(draw, depth=4):
    if depth == 0 or draw(st.booleans()):
        return draw(st.one_of(names.map(Var), st.just(Zero()), st.just(UnitVal())))
    kind = draw(st.sampled_from(["lam", "app", "pair", "let", "suc"]))
    if kind == "lam":
        return Lam(draw(names), draw(terms(depth - 1)))
    if kind == "app":
        return App(draw(terms(depth - 1)), draw(terms(depth - 1)))
    if kind == "pair":
        return Pair(draw(terms(depth - 1)), draw(terms(depth - 1)))
    if kind == "let":
        return Let(draw(names), draw(terms(depth - 1)), draw(terms(depth - 1)))
    return Suc(draw(terms(depth - 1)))


closed_values = st.sampled_from([Zero(), nat(2), UnitVal(), Lam("y", Var("y")), Pair(Zero(), UnitVal())])


@given(terms(), closed_values, names)
def test_substituting_a_closed_value_removes_the_variable(t, v, x):
    out = subst(t, v, x)
    assert free_vars(out) == free_vars(t) - {x}


@given(terms(), closed_values, names)
def test_values_stay_values_under_substitution(t, v, x):
    if is_value(t):
        assert is_value(subst(t, v, x))


@given(terms(), names, names)
def test_renaming_a_free_variable_is_undone_by_renaming_back(t, x, y):
    if y in free_vars(t) or x == y:
        return
    assert alpha_eq(subst(subst(t, Var(y), x), Var(x), y), t)
