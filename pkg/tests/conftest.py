import os
import random
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from src.config import settings
from src.models.geometry import MetricSpec
from src.models.symmetry import Generator
from src.services.catalog import get_case

DEFAULT_SEED = 20240101
_MONOMIALS = ("1", "s", "t", "x", "y", "z", "s*t", "t*x", "x^2", "y*z", "z^2")


@pytest.fixture
def rng():
    return random.Random(settings.seed if settings.seed is not None else DEFAULT_SEED)


def random_polynomial(rng: random.Random, terms: int = 2) -> str:
    picked = rng.sample(_MONOMIALS, terms)
    return " + ".join(f"({rng.randint(-3, 3)})*{m}" for m in picked)


def random_generator(rng: random.Random) -> Generator:
    components = {
        name: random_polynomial(rng, rng.randint(0, 2)) or "0"
        for name in ("mu", "tau", "xi", "eta", "phi", "f")
    }
    return Generator(name="random", **components)


@pytest.fixture
def generic_spec():
    return MetricSpec()


@pytest.fixture
def case_one():
    return get_case("I")


@pytest.fixture
def case_two():
    return get_case("II")


@pytest.fixture
def sample_ics():
    return "0,0,0,0,1,0.3,0.2,0.1"
