from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utils.error_utils import InvalidTarget, NotInX
from utils.set_utils import AllRationalsIn
from utils.sigma_utils import (INFINITE_LEVEL, FiniteTarget,
                               OpenIntervalTarget, SigmaConfig, UserLevel,
                               chain_from_target, dyadic_split, in_target,
                               is_dyadic, sigma_table, sigma_value)

F = Fraction
X = AllRationalsIn(0, 1)
CHAIN = chain_from_target(OpenIntervalTarget(F(1, 4), F(3, 4)), X)


def test_dyadic_split():
    assert is_dyadic(F(3, 8))
    assert is_dyadic(F(2))
    assert not is_dyadic(F(1, 6))
    assert dyadic_split.classify(F(1, 4)) == "A"
    assert dyadic_split.classify(F(1, 3)) == "B"
    near = list(dyadic_split.members_near("B", F(1, 4), F(1, 2), limit=3))
    assert near == [F(1, 3), F(2, 5), F(2, 7)]


def test_interval_recipe_levels():
    target = OpenIntervalTarget(F(1, 4), F(3, 4))
    assert target.removed_at(1) == []
    assert target.removed_at(2) == [(F(3, 8), F(5, 8))]
    assert target.level(F(1, 2)) == 1
    assert target.level(F(13, 50)) == 24
    assert target.level(F(7, 8)) == INFINITE_LEVEL
    assert target.level(F(1, 4)) == INFINITE_LEVEL


def test_finite_recipe_levels():
    target = FiniteTarget([F(1, 3)])
    assert target.level(F(1, 3)) == 1
    assert target.level(F(1, 2)) == INFINITE_LEVEL
    assert target.removed_at(2) == [(F(1, 3), F(1, 3))]


def test_invalid_targets():
    with pytest.raises(InvalidTarget):
        chain_from_target(OpenIntervalTarget(F(3, 4), F(1, 4)), X)
    with pytest.raises(InvalidTarget):
        chain_from_target(FiniteTarget([F(3, 2)]), X)


def test_sigma_values(sigma_config):
    assert sigma_value(sigma_config, F(7, 8)) == 0
    assert sigma_value(sigma_config, F(1, 2)) == 1
    assert sigma_value(sigma_config, F(13, 50)) == F(-1, 24)
    assert sigma_value(sigma_config, F(1, 3)) == F(-1, 2)
    with pytest.raises(NotInX):
        sigma_value(sigma_config, F(3, 2))


def test_in_target(sigma_config):
    assert in_target(sigma_config, F(1, 2))
    assert not in_target(sigma_config, F(1, 4))


def test_chain_radius(sigma_config):
    assert sigma_config.chain.radius(F(7, 8), 20) == F(11, 80)
    assert sigma_config.chain.radius(F(1, 2), 20) == 0
    assert sigma_config.chain.radius(F(7, 8), 1) is None
    assert set(sigma_config.chain.renderings()) == set(range(2, 33))


@settings(max_examples=200, deadline=None)
@given(i=st.integers(min_value=0, max_value=3000), n=st.integers(min_value=2, max_value=32))
def test_rendered_chain_matches_level(i, n):
    x = X.enumerate(i)
    assert CHAIN.in_rendered(x, n) == (CHAIN.level(x) >= n)


def test_user_level_carries_caveat():
    chain = chain_from_target(UserLevel(lambda x: 3, "constant"), X)
    assert not chain.rendered
    assert chain.caveats == ("UserLevel(constant) is not validated",)
    assert chain.removed_at(5) is None
    assert sigma_value(SigmaConfig(X, dyadic_split, chain), F(1, 2)) == F(1, 3)


def test_sigma_table_rows(sigma_config):
    rows = sigma_table(sigma_config, 5)
    assert [r.x for r in rows] == X.prefix(5)
    assert rows[0].to_row() == {"x": "1/2", "class": "A", "level": "1", "value": "1/1"}
    assert rows[3].to_row() == {"x": "1/4", "class": "A", "level": "inf", "value": "0/1"}
