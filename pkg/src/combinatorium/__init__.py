"""Reified actors, a nondeterministic combinator machine and a self-replication simulator."""

from .actors import (Actor, Behavior, Combinator, Composition, ObjectKind, compose_kinds,
                     decompose, type_equivalent, type_hash)
from .compiler import CompileError, compile_file, compile_source
from .machine import Outcome, kleisli, run_program
from .opcodes import OPCODES, Opcode
from .world import World

__version__ = "0.1.0"

__all__ = [
    "Actor", "Behavior", "Combinator", "Composition", "ObjectKind", "compose_kinds",
    "decompose", "type_equivalent", "type_hash", "CompileError", "compile_file",
    "compile_source", "Outcome", "kleisli", "run_program", "OPCODES", "Opcode", "World",
]
