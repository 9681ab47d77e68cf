from .corpus import Fixture, builtin_fixtures, get_fixture
from .engine import (ConcreteTrace, MemoryTrap, SinkHit, SinkNotReached, TaintOptions,
                     ToyRuntimeError, execute_concrete, run, symbolic_single_path,
                     taint_propagate)
from .ir import ToyProgram, ToySyntaxError, load_program, parse_program

__all__ = [
    "ConcreteTrace", "Fixture", "MemoryTrap", "SinkHit", "SinkNotReached", "TaintOptions",
    "ToyProgram", "ToyRuntimeError", "ToySyntaxError", "builtin_fixtures", "execute_concrete",
    "get_fixture", "load_program", "parse_program", "run", "symbolic_single_path",
    "taint_propagate",
]
