import random
from fractions import Fraction

import pytest

from kleinprym.projline import MarkedConfig, Mobius, ProjPoint


@pytest.fixture
def rng():
    return random.Random("kleinprym-tests")


def make_points(rng, count, bound=50):
    taken = set()
    out = []
    while len(out) < count:
        p = ProjPoint(Fraction(rng.randint(-bound, bound), rng.randint(1, 7)))
        if p not in taken:
            taken.add(p)
            out.append(p)
    return out


def make_mobius(rng, bound=9):
    while True:
        a, b, c, d = (rng.randint(-bound, bound) for _ in range(4))
        if a * d - b * c != 0:
            return Mobius.of(a, b, c, d)


def config_of(values_roles):
    return MarkedConfig.make(values_roles)
