from __future__ import annotations

import enum
from typing import Any, Optional

Pos = Optional[tuple[int, int]]


def _where(pos: Pos) -> str:
    return f"{pos[0]}:{pos[1]}: " if pos else ""


class RattError(Exception):
    """Base class of every diagnostic raised by the toolchain."""

    kind: str = "Error"
    pos: Pos = None
    message: str = ""

    def record(self) -> dict[str, Any]:
        """Machine-readable form: one record per diagnostic."""
        span = None if self.pos is None else {"line": self.pos[0], "col": self.pos[1]}
        return {"kind": self.kind, "span": span, "message": self.message}


class SyntaxError_(RattError):
    kind = "SyntaxError"

    def __init__(self, message: str, pos: Pos, expected: set[str]):
        self.message = message
        self.pos = pos
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{_where(pos)}syntax error: {message}{detail}")

    def record(self) -> dict[str, Any]:
        rec = super().record()
        rec["expected"] = sorted(self.expected)
        return rec


class ElaborationError(RattError):
    kind = "ElaborationError"

    def __init__(self, message: str, pos: Pos = None):
        self.message = message
        self.pos = pos
        super().__init__(f"{_where(pos)}{message}")


class TypeErrorKind(enum.Enum):
    UnboundVariable = "UnboundVariable"
    VariableCrossesTick = "VariableCrossesTick"
    TickInLambdaContext = "TickInLambdaContext"
    SecondTick = "SecondTick"
    ClockMismatch = "ClockMismatch"
    NotStable = "NotStable"
    NotValueType = "NotValueType"
    ChannelClassMismatch = "ChannelClassMismatch"
    Mismatch = "Mismatch"
    CannotInfer = "CannotInfer"


class RattTypeError(RattError):
    def __init__(self, kind: TypeErrorKind, message: str, pos: Pos = None):
        self.type_kind = kind
        self.kind = kind.value
        self.message = message
        self.pos = pos
        super().__init__(f"{_where(pos)}{kind.value}: {message}")


class StuckKind(enum.Enum):
    DanglingLocation = "DanglingLocation"
    AdvOutsideNowHeap = "AdvOutsideNowHeap"
    BadSelect = "BadSelect"
    UnboundChannelBuffer = "UnboundChannelBuffer"
    IllTypedRedex = "IllTypedRedex"


class StuckError(RattError):
    """The evaluator found no applicable rule. Unreachable for typechecked programs."""

    def __init__(self, kind: StuckKind, term: Any, store: Any = None, detail: str = ""):
        self.stuck_kind = kind
        self.kind = kind.value
        self.term = term
        self.store = store
        self.message = detail or f"stuck on {term}"
        super().__init__(f"{kind.value}: {self.message}")


class FuelExhausted(RattError):
    kind = "FuelExhausted"

    def __init__(self, budget: int):
        self.budget = budget
        self.message = f"evaluation exceeded its budget of {budget} rule applications"
        super().__init__(self.message)


class EventError(RattError):
    """An input event or initial buffer failed validation against the input context."""

    kind = "EventError"

    def __init__(self, message: str):
        self.message = message
        super().__init__(message)
