import random

import pytest
from hypothesis import strategies as st

from sahlkit.formula import random_formula, random_inequality
from sahlkit.signature import builtin

SIG_NAMES = ["intuitionistic", "co-intuitionistic", "bi-intuitionistic", "fischer-servi", "positive-modal", "dml"]


@pytest.fixture(scope="session")
def sigs():
    return {name: builtin(name) for name in SIG_NAMES}


def formulas(sig_name: str, depth: int = 3, names=("p", "q", "r")):
    """Hypothesis strategy driving the package's own random generator from a drawn seed."""
    sig = builtin(sig_name)
    return st.integers(0, 2**32 - 1).map(lambda s: random_formula(random.Random(s), sig, list(names), depth))


def inequalities(sig_name: str, depth: int = 3, names=("p", "q", "r")):
    sig = builtin(sig_name)
    return st.integers(0, 2**32 - 1).map(lambda s: random_inequality(random.Random(s), sig, list(names), depth))
