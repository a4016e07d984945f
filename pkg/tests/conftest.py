import random
from fractions import Fraction

import pytest

from villadsen.families import GoodearlFamily, OddSquaresFamily, SquaresFamily
from villadsen.system import Point, VilladsenSystem, cube, stage


@pytest.fixture
def s2():
    return VilladsenSystem(seed=cube(2), n0=1, family=SquaresFamily(2), name="S2")


@pytest.fixture
def s2_other_evals():
    return VilladsenSystem(seed=cube(2), n0=1, family=SquaresFamily(2), eval_seed=99, name="S2F")


@pytest.fixture
def s4():
    return VilladsenSystem(seed=cube(4), n0=1, family=SquaresFamily(4), name="S4")


@pytest.fixture
def odd_squares():
    return VilladsenSystem(seed=cube(2), n0=1, family=OddSquaresFamily(3), name="odd")


@pytest.fixture
def goodearl():
    return VilladsenSystem(seed=cube(1), n0=1, family=GoodearlFamily(2), name="goodearl")


def random_point(rng: random.Random, width: int) -> Point:
    return Point(tuple(Fraction(rng.randrange(0, 9), 8) for _ in range(width)))


def random_system(rng: random.Random, max_stages: int = 4, max_param: int = 6) -> VilladsenSystem:
    """A small explicit system on the interval with random stage data."""
    stages = []
    d = 1
    for _ in range(rng.randint(2, max_stages)):
        c = rng.randint(1, 3)
        s = tuple(rng.randint(1, max_param // 2) for _ in range(c))
        k = rng.randint(1, 3)
        pts = [random_point(rng, d) for _ in range(k)]
        stages.append(stage(c, s, k, pts))
        d *= c
    return VilladsenSystem(seed=cube(1), n0=rng.randint(1, 3), prefix=tuple(stages))
