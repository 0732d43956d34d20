"""Executable metatheory: GC safety, determinism, signal independence and productivity checks."""

from .audit import AuditFailure, ShadowStore, StaleOutputMachine, audit_gc
from .common import Report, batch_key, random_buffer, random_script, state_hash
from .determinism import check_determinism, trace_run
from .fuzz import (
    FUZZ_INPUTS,
    INITIAL_BUFFER,
    GeneratedProgram,
    Generator,
    ddmin,
    drive,
    fuzz_cases,
    fuzz_productivity,
    random_events,
    shrink_program,
)
from .independence import check_independence, minimal_contexts, typechecks_under

__all__ = [
    "AuditFailure",
    "FUZZ_INPUTS",
    "GeneratedProgram",
    "Generator",
    "INITIAL_BUFFER",
    "Report",
    "ShadowStore",
    "StaleOutputMachine",
    "audit_gc",
    "batch_key",
    "check_determinism",
    "check_independence",
    "ddmin",
    "drive",
    "fuzz_cases",
    "fuzz_productivity",
    "minimal_contexts",
    "random_buffer",
    "random_events",
    "random_script",
    "shrink_program",
    "state_hash",
    "trace_run",
    "typechecks_under",
]
