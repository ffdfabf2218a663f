import os

os.environ["DATABASE_URL"] = "sqlite://"
os.environ.setdefault("MARKOV_ARITHMETIC", "exact")

from fractions import Fraction
from pathlib import Path

import pytest

from app.markov.chain import validate_chain
from app.markov.scalar import Arithmetic

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"


def make_chain(states, edges, mode=Arithmetic.EXACT):
    """edges: {(source, target): "1/2", ...}"""
    return validate_chain(states, edges, mode)


@pytest.fixture
def models_dir():
    return MODELS_DIR


@pytest.fixture
def coin_chain():
    # a -1/2-> b (absorbing), a -1/2-> c (absorbing)
    return make_chain(
        ["a", "b", "c"],
        {("a", "b"): Fraction(1, 2), ("a", "c"): Fraction(1, 2), ("b", "b"): 1, ("c", "c"): 1},
    )


@pytest.fixture
def geometric_chain():
    # t loops with 3/4 and leaves to the absorbing goal with 1/4
    return make_chain(
        ["t", "goal"],
        {("t", "t"): Fraction(3, 4), ("t", "goal"): Fraction(1, 4), ("goal", "goal"): 1},
    )
