from fractions import Fraction

import pytest

from thinprimes import arith
from thinprimes.presets import canonical_thin, make_pair


@pytest.fixture(scope="session")
def tables():
    return arith.get_tables(10**6)


@pytest.fixture(scope="session")
def small_tables():
    return arith.get_tables(10**4)


@pytest.fixture(scope="session")
def thin_minus():
    return canonical_thin("minus")


@pytest.fixture(scope="session")
def thin_plus():
    return canonical_thin("plus")


@pytest.fixture(scope="session")
def pair32():
    return make_pair(Fraction(3, 2))
