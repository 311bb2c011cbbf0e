from fractions import Fraction
from itertools import islice

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utils.error_utils import BudgetExceeded, IndexOutOfRange
from utils.exact_utils import NEG_INF, POS_INF, OpenInterval, Separator
from utils.set_utils import (EMPTY, INFINITE, AllRationalsIn,
                             ArithmeticProgression, Census, DyadicsIn,
                             ExternalList, FiniteList, IsolationFinding,
                             OddDenominatorIn, Union, validate_inputs)

F = Fraction
G = Separator(-1, 1)

GRIDS = [DyadicsIn(0, 1), OddDenominatorIn(0, 1), AllRationalsIn(-1, 2)]


def test_grid_enumeration_order():
    assert DyadicsIn(0, 1).prefix(4) == [F(1, 2), F(1, 4), F(3, 4), F(1, 8)]
    assert OddDenominatorIn(0, 1).prefix(4) == [F(1, 3), F(2, 3), F(1, 5), F(2, 5)]
    assert AllRationalsIn(0, 1).prefix(5) == [F(1, 2), F(1, 3), F(2, 3), F(1, 4), F(3, 4)]
    assert AllRationalsIn(-1, 1).prefix(3) == [F(0), F(-1, 2), F(1, 2)]


def test_dyadic_grid_includes_integers():
    wide = DyadicsIn(0, 4)
    assert wide.prefix(8) == [F(1), F(2), F(3), F(1, 2), F(3, 2), F(5, 2), F(7, 2), F(1, 4)]
    assert wide.index_of(F(3)) == 2
    assert wide.index_of(F(5, 2)) == 5
    assert wide.first_available(OpenInterval(F(3, 2), F(4))) == (F(2), 1)


def test_grid_index_of():
    assert DyadicsIn(0, 1).index_of(F(3, 8)) == 4
    assert DyadicsIn(0, 1).index_of(F(1, 3)) is None
    assert DyadicsIn(0, 1).index_of(F(1)) is None
    assert OddDenominatorIn(0, 1).index_of(F(2, 5)) == 3
    assert OddDenominatorIn(0, 1).index_of(F(1, 2)) is None


@settings(max_examples=100, deadline=None)
@given(grid=st.sampled_from(GRIDS), i=st.integers(min_value=0, max_value=5000))
def test_grid_index_inverts_enumeration(grid, i):
    assert grid.index_of(grid.enumerate(i)) == i


def test_grid_iteration_matches_enumeration():
    for grid in GRIDS:
        assert list(islice(iter(grid), 300)) == [grid.enumerate(i) for i in range(300)]


def test_census_examples():
    dyadics = DyadicsIn(0, 1)
    assert dyadics.census(OpenInterval(F(1, 3), G)) == INFINITE
    assert dyadics.census(OpenInterval(F(2), F(3))) == EMPTY
    assert FiniteList([F(1, 7), F(1, 9)]).census(OpenInterval(F(0), F(1, 8))) == Census.of_count(1)
    assert Census.of_count(0) == EMPTY
    assert str(Census.of_count(3)) == "finite(3)"
    assert str(INFINITE) == "infinite"


def test_first_available_examples():
    dyadics = DyadicsIn(0, 1)
    side = OpenInterval(G, POS_INF)
    assert dyadics.first_available(side, {F(1, 2)}) == (F(3, 4), 2)
    assert dyadics.first_available(side, {F(1, 2), F(3, 4)}) == (F(5, 8), 5)
    assert dyadics.first_available(OpenInterval(F(2), F(3))) is None


@settings(max_examples=60, deadline=None)
@given(a=st.integers(min_value=-8, max_value=20), width=st.integers(min_value=1, max_value=8),
       skip=st.integers(min_value=0, max_value=6))
def test_first_available_is_least_index(a, width, skip):
    dyadics = DyadicsIn(0, 1)
    interval = OpenInterval(F(a, 16), F(a + width, 16))
    inside = [v for v in islice(iter(dyadics), 4095) if interval.contains(v)]
    excluded = set(inside[:skip])
    expected = next(((v, dyadics.index_of(v)) for v in inside if v not in excluded), None)
    assert dyadics.first_available(interval, excluded) == expected


@settings(max_examples=60, deadline=None)
@given(a=st.integers(min_value=-8, max_value=20), width=st.integers(min_value=1, max_value=8))
def test_grid_census_agrees_with_prefix(a, width):
    dyadics = DyadicsIn(0, 1)
    interval = OpenInterval(F(a, 16), F(a + width, 16))
    found = [v for v in islice(iter(dyadics), 4095) if interval.contains(v)]
    census = dyadics.census(interval)
    if census.is_empty:
        assert found == []
    else:
        assert census.is_infinite
        assert len(found) > 64


def test_arithmetic_progression_census():
    naturals = ArithmeticProgression(1, 1)
    assert naturals.census(OpenInterval(NEG_INF, Separator(2, -1))) == EMPTY
    assert naturals.census(OpenInterval(Separator(2, -1), POS_INF)) == INFINITE
    assert naturals.census(OpenInterval(F(0), F(7))) == Census.of_count(6)
    falling = ArithmeticProgression(0, F(-1, 2), 10)
    assert falling.census(OpenInterval(F(-2), F(0))) == Census.of_count(3)
    assert falling.members(OpenInterval(F(-2), F(0))) == [F(-1, 2), F(-1), F(-3, 2)]
    assert falling.index_of(F(-3, 2)) == 3
    assert falling.index_of(F(-5)) is None


@settings(max_examples=100, deadline=None)
@given(start=st.integers(-5, 5), step=st.sampled_from([F(1, 3), F(1), F(-2, 5)]),
       lo=st.fractions(min_value=-10, max_value=10, max_denominator=7),
       width=st.fractions(min_value=F(1, 7), max_value=10, max_denominator=7))
def test_finite_census_agrees_with_brute_force(start, step, lo, width):
    ap = ArithmeticProgression(start, step, 40)
    interval = OpenInterval(lo, lo + width)
    expected = [v for v in ap if interval.contains(v)]
    assert ap.census(interval) == Census.of_count(len(expected))
    listed = FiniteList(list(ap))
    assert listed.census(interval) == Census.of_count(len(expected))
    assert listed.members(interval) == expected


def test_finite_list_bounds():
    listed = FiniteList([F(1, 3), F(2, 5)])
    assert listed.enumerate(1) == F(2, 5)
    with pytest.raises(IndexOutOfRange):
        listed.enumerate(2)
    assert listed.cardinality == 2
    assert not listed.is_infinite


def test_union_round_robin():
    union = Union([FiniteList([F(2)]), DyadicsIn(0, 1)])
    assert union.prefix(3) == [F(2), F(1, 2), F(1, 4)]
    assert union.index_of(F(1, 4)) == 2
    assert union.is_infinite


def test_union_skips_values_of_earlier_components():
    union = Union([DyadicsIn(0, 1), FiniteList([F(1, 2), F(5, 3)])])
    assert union.prefix(4) == [F(1, 2), F(1, 4), F(5, 3), F(3, 4)]
    assert union.first_available(OpenInterval(F(1), F(2))) == (F(5, 3), 2)
    assert union.first_available(OpenInterval(F(0), F(1)), {F(1, 2)}) == (F(1, 4), 1)


def test_external_list(tmp_path):
    path = tmp_path / "points.txt"
    path.write_text("1/3\n# comment\n\n2/5\n7/9\n", encoding="utf-8")
    external = ExternalList.from_file(path)
    assert external.values == (F(1, 3), F(2, 5), F(7, 9))
    assert external.opaque
    assert external.first_available(OpenInterval(F(0), F(1)), budget=1) == (F(1, 3), 0)
    with pytest.raises(BudgetExceeded):
        external.first_available(OpenInterval(F(1, 2), F(1)), budget=1)
    assert external.first_available(OpenInterval(F(1, 2), F(1)), budget=10) == (F(7, 9), 2)


def test_external_list_rejects_decimals(tmp_path):
    path = tmp_path / "points.txt"
    path.write_text("1/3\n0.5\n", encoding="utf-8")
    with pytest.raises(ValueError, match=":2:"):
        ExternalList.from_file(path)


def test_validate_disjoint_grids():
    report = validate_inputs(OddDenominatorIn(0, 1), DyadicsIn(0, 1), F(1, 1024))
    assert report.ok
    assert report.disjointness_method == "analytic"
    assert report.f_infinite_declared


def test_validate_detects_overlap():
    report = validate_inputs(DyadicsIn(0, 1), DyadicsIn(0, 1), F(1, 1024))
    assert not report.disjoint
    assert not report.ok


def test_validate_detects_duplicates():
    report = validate_inputs(FiniteList([F(1, 3), F(1, 3)]), DyadicsIn(0, 1), F(1, 1024))
    assert not report.duplicate_free


def test_validate_reports_isolated_point():
    F_set = Union([FiniteList([F(2)]), DyadicsIn(0, 1)])
    report = validate_inputs(OddDenominatorIn(0, 1), F_set, F(1, 2))
    assert report.disjoint
    assert report.isolated_point_findings == [IsolationFinding(F(2), F(1))]
    assert report.to_dict()["isolated_point_findings"] == [{"point": "2/1", "distance_at_least": "1/1"}]
