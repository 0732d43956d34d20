import pytest

from asyncratt.core import UnitVal
from asyncratt.pipeline import compile_example, compile_source
from asyncratt.reactive import InputEvent, Machine


def unit_events(*channels):
    return [InputEvent(ch, UnitVal()) for ch in channels]


def run_source(source, events, buffer=None, prelude=True):
    compiled = compile_source(source, prelude=prelude)
    machine = Machine(compiled.delta, compiled.output_names)
    return machine.run(compiled.term, buffer or {}, events)


@pytest.fixture(scope="session")
def field1():
    return compile_example("field1")
