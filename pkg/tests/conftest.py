import shutil
from pathlib import Path

import pytest

from ctrldom import formula as F
from ctrldom.formula import SymbolicState, TargetSpec

DATA = Path(__file__).parent / "data"
HAVE_Z3 = shutil.which("z3") is not None

needs_z3 = pytest.mark.skipif(not HAVE_Z3, reason="z3 binary not on PATH")


def x8(*constraints, width: int = 8, name: str = "x"):
    """One unconstrained input plus constraints built from it."""
    x = F.var(name, width)
    cs = tuple(c(x) for c in constraints)
    return SymbolicState(((name, width),), cs), TargetSpec(x)


@pytest.fixture
def data_dir() -> Path:
    return DATA
