from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utils.error_utils import InfiniteQueryPoint, LadderMember, LevelNotComputed
from utils.exact_utils import (NEG_INF, POS_INF, EndpointLadder, LadderHistory,
                               OpenInterval, Ordering, Separator, ceil_point,
                               compare, floor_point, format_point,
                               gap_lower_bound, parse_point, parse_rational,
                               sign_with_sqrt2, to_decimal)

F = Fraction
G = Separator(-1, 1)  # sqrt2 - 1

rationals = st.fractions(min_value=-1000, max_value=1000, max_denominator=10 ** 6)
nonzero = rationals.filter(lambda r: r != 0)


def _mp(p):
    with mpmath.workdps(200):
        if isinstance(p, Separator):
            return mpmath.mpf(p.a.numerator) / p.a.denominator + \
                mpmath.mpf(p.b.numerator) / p.b.denominator * mpmath.sqrt(2)
        return mpmath.mpf(p.numerator) / p.denominator


def test_sign_with_sqrt2():
    assert sign_with_sqrt2(F(1), F(-1)) == -1
    assert sign_with_sqrt2(F(3), F(-2)) == 1
    assert sign_with_sqrt2(F(-3), F(2)) == -1
    assert sign_with_sqrt2(F(0), F(0)) == 0
    assert sign_with_sqrt2(F(5), F(0)) == 1


def test_separator_orders_against_rationals():
    assert F(2, 5) < G < F(5, 12)
    assert G < F(1, 2)
    assert compare(G, F(1, 3)) is Ordering.GREATER
    assert G != F(1, 2)
    assert sorted([F(1, 2), G, POS_INF, F(1, 3), NEG_INF]) == [NEG_INF, F(1, 3), G, F(1, 2), POS_INF]


def test_infinities():
    assert NEG_INF < F(-10 ** 9) < POS_INF
    assert NEG_INF < G < POS_INF
    assert -NEG_INF == POS_INF
    assert compare(POS_INF, POS_INF) is Ordering.EQUAL


@settings(max_examples=300, deadline=None)
@given(p=rationals, a=rationals, b=nonzero)
def test_compare_matches_high_precision(p, a, b):
    sep = Separator(a, b)
    with mpmath.workdps(200):
        expected = mpmath.sign(_mp(p) - _mp(sep))
    assert int(compare(p, sep)) == int(expected)
    assert int(compare(sep, p)) == -int(expected)


@given(x=rationals, y=rationals, z=rationals)
def test_order_is_transitive(x, y, z):
    points = sorted([x, Separator(y, 1), Separator(z, -1)])
    for left, right in zip(points, points[1:]):
        assert compare(left, right) is Ordering.LESS


def test_floor_and_ceil_of_separators():
    assert floor_point(G) == 0
    assert ceil_point(G) == 1
    assert floor_point(Separator(0, 1000)) == 1414
    assert floor_point(Separator(0, -1)) == -2
    assert floor_point(F(7, 2)) == 3
    with pytest.raises(InfiniteQueryPoint):
        floor_point(POS_INF)


def test_enclosure_brackets_value():
    lo, hi = G.enclosure(80)
    assert lo < G < hi
    assert hi - lo < F(1, 2 ** 79)


def test_canonical_text():
    assert format_point(G) == "-1/1+1/1*sqrt2"
    assert format_point(F(3, 4)) == "3/4"
    assert format_point(NEG_INF) == "-inf"
    assert parse_point("-1/1+1/1*sqrt2") == G
    assert parse_point("+inf") == POS_INF
    assert parse_rational("3") == F(3)
    assert parse_rational("-6/8") == F(-3, 4)
    for bad in ("0.5", "1e3", "1/0", "abc"):
        with pytest.raises(ValueError):
            parse_rational(bad)


def test_to_decimal():
    assert to_decimal(G, 10).startswith("0.41421356")
    assert to_decimal(F(1, 4), 5) == "0.25"


def test_open_interval_membership():
    interval = OpenInterval(F(1, 3), G)
    assert F(2, 5) in interval
    assert F(1, 3) not in interval
    assert interval.in_closure(F(1, 3))
    assert interval.has_endpoint(G)
    with pytest.raises(InfiniteQueryPoint):
        interval.contains(POS_INF)
    with pytest.raises(ValueError):
        OpenInterval(F(1, 2), F(1, 2))


def test_gap_lower_bound_to_separator():
    bound = gap_lower_bound(F(1, 2), OpenInterval(NEG_INF, G))
    assert bound > 0
    with mpmath.workdps(50):
        assert _mp(bound) <= _mp(F(1, 2)) - _mp(G)
    assert gap_lower_bound(F(1, 2), OpenInterval(F(0), F(1))) == 0
    assert gap_lower_bound(F(2), OpenInterval(F(0), F(1))) == 1


def test_endpoint_ladder_intervals():
    ladder = EndpointLadder([NEG_INF, POS_INF, G, F(1, 2), F(3, 4), F(1, 3)], 0)
    assert ladder.enclosing_interval(F(1, 4)) == OpenInterval(NEG_INF, F(1, 3))
    assert ladder.enclosing_interval(F(5, 8)) == OpenInterval(F(1, 2), F(3, 4))
    with pytest.raises(LadderMember):
        ladder.enclosing_interval(F(1, 2))
    assert len(list(ladder.intervals())) == 5


def test_ladder_history_replays_levels():
    history = LadderHistory([NEG_INF, POS_INF, G, F(1, 2), F(3, 4), F(1, 3)])
    history.extend([F(1, 4), F(1, 8), F(2, 3)])
    assert history.level == 1
    assert history.size_at(0) == 6
    assert history.size_at(1) == 9
    assert history.entry_level(F(1, 8)) == 1
    assert history.enclosing_at(F(3, 16), 0) == OpenInterval(NEG_INF, F(1, 3))
    assert history.enclosing_at(F(3, 16), 1) == OpenInterval(F(1, 8), F(1, 4))
    assert history.neighbors_at(F(1, 3), 0) == (NEG_INF, G)
    assert history.neighbors_at(F(1, 3), 1) == (F(1, 4), G)
    assert history.ladder_at(0).points == (NEG_INF, F(1, 3), G, F(1, 2), F(3, 4), POS_INF)
    # a later point is not a ladder member at an earlier level
    assert history.enclosing_at(F(1, 4), 0) == OpenInterval(NEG_INF, F(1, 3))
    with pytest.raises(LadderMember):
        history.enclosing_at(F(1, 4), 1)
    with pytest.raises(LevelNotComputed):
        history.ladder_at(2)


def test_ladder_history_copy_is_independent():
    history = LadderHistory([NEG_INF, POS_INF, G])
    clone = history.copy()
    clone.extend([F(1, 2)])
    assert F(1, 2) in clone
    assert F(1, 2) not in history
    assert history.level == 0
