from fractions import Fraction

import pytest

from utils.builder_utils import BuilderConfig, init, run
from utils.set_utils import (AllRationalsIn, DyadicsIn, FiniteList,
                             OddDenominatorIn)
from utils.sigma_utils import (OpenIntervalTarget, SigmaConfig,
                               chain_from_target, dyadic_split)

ZERO, ONE = Fraction(0), Fraction(1)


@pytest.fixture
def dyadics():
    return DyadicsIn(ZERO, ONE)


@pytest.fixture
def odd():
    return OddDenominatorIn(ZERO, ONE)


@pytest.fixture
def cfg_w(dyadics, odd):
    """F = dyadics in (0, 1), Q = odd-denominator rationals in (0, 1)."""
    return BuilderConfig(Q=odd, F=dyadics)


@pytest.fixture
def seeded(cfg_w):
    return init(cfg_w)


@pytest.fixture(scope="session")
def built_200():
    config = BuilderConfig(Q=OddDenominatorIn(ZERO, ONE), F=DyadicsIn(ZERO, ONE))
    return run(init(config), 200)


@pytest.fixture
def finite_f_config():
    """Four F-points, each with dyadic neighbours from Q."""
    F = FiniteList((Fraction(1, 3), Fraction(2, 3), Fraction(1, 5), Fraction(4, 5)))
    return BuilderConfig(Q=DyadicsIn(ZERO, ONE), F=F)


@pytest.fixture
def sigma_config():
    X = AllRationalsIn(ZERO, ONE)
    chain = chain_from_target(OpenIntervalTarget(Fraction(1, 4), Fraction(3, 4)), X)
    return SigmaConfig(X, dyadic_split, chain)


@pytest.fixture
def settings():
    """Settings without touching config/ on disk."""
    return {"defaults": {"steps": 2000, "samples": 200}}


@pytest.fixture(scope="session")
def built_600():
    config = BuilderConfig(Q=OddDenominatorIn(ZERO, ONE), F=DyadicsIn(ZERO, ONE))
    return run(init(config), 600)
