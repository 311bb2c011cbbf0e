"""Deterministic construction of a fixed-point-free involution on F that is
discontinuous exactly at F and the identity on Q.

The builder is a state machine: ``init`` chooses the separator and pairs the
seed point, every ``step`` pairs the least-index unpaired F-point inside the
deepest ladder interval that still has a free F-point, and the ladder grows
by that pair plus the next Q-point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import ClassVar, Dict, List, Optional, Set, Tuple, Union

from utils.error_utils import (ConfigValidationError, DisjointnessError,
                               DuplicateEnumerationError, FExhausted,
                               InvolutorError, IsolatedPointError,
                               NotInDomain, SeedPartnerMissing,
                               SeparatorUnverifiable, WorkCapExceeded)
from utils.exact_utils import (NEG_INF, POS_INF, LadderHistory, OpenInterval,
                               Separator, format_point, format_rational)
from utils.set_utils import (DEFAULT_ISOLATION_DEPTH, Census, SetSpec,
                             validate_inputs)

SEPARATOR_POLICIES = ("affine", "below", "above")
HULL_SAMPLE = 16
DEFAULT_EXTERNAL_BUDGET = 10000


@dataclass
class BuilderConfig:
    Q: SetSpec
    F: SetSpec
    separator_policy: str = "affine"
    validation_resolution: Fraction = Fraction(1, 1024)
    external_budget: int = DEFAULT_EXTERNAL_BUDGET
    isolation_depth: int = DEFAULT_ISOLATION_DEPTH
    validated: bool = field(default=False, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.validation_resolution = Fraction(self.validation_resolution)
        if self.separator_policy not in SEPARATOR_POLICIES:
            raise ConfigValidationError(
                f"separator_policy must be one of {', '.join(SEPARATOR_POLICIES)}, "
                f"got {self.separator_policy!r}"
            )
        if self.validation_resolution <= 0:
            raise ConfigValidationError("validation_resolution must be positive")
        if self.external_budget < 1:
            raise ConfigValidationError("external_budget must be at least 1")


# ! --- Maximality evidence ---


@dataclass(frozen=True)
class TopLevel:
    tag: ClassVar[str] = "TopLevel"

    def detail(self) -> str:
        return ""


@dataclass(frozen=True)
class NextLevelEmpty:
    census: Census
    tag: ClassVar[str] = "NextLevelEmpty"

    def detail(self) -> str:
        return str(self.census)


@dataclass(frozen=True)
class NextLevelExhausted:
    members: Tuple[Fraction, ...]
    tag: ClassVar[str] = "NextLevelExhausted"

    def detail(self) -> str:
        return ";".join(format_rational(m) for m in self.members)


@dataclass(frozen=True)
class BudgetCaveat:
    budget: int
    tag: ClassVar[str] = "BudgetCaveat"

    def detail(self) -> str:
        return f"budget={self.budget}"


Evidence = Union[TopLevel, NextLevelEmpty, NextLevelExhausted, BudgetCaveat]


@dataclass(frozen=True)
class PairRecord:
    step: int
    primary: Fraction
    primary_index: int
    partner: Fraction
    partner_index: int
    level: int
    interval: OpenInterval
    evidence: Evidence

    def to_row(self) -> Dict[str, str]:
        """Canonical text fields in export column order."""
        lo, hi = self.interval.to_text()
        return {
            "step": str(self.step),
            "primary": format_rational(self.primary),
            "primary_index": str(self.primary_index),
            "partner": format_rational(self.partner),
            "partner_index": str(self.partner_index),
            "level": str(self.level),
            "lo": lo,
            "hi": hi,
            "evidence": self.evidence.tag,
        }


# ! --- State ---


class _Taken:
    """Ladder points plus the point being paired."""

    __slots__ = ("history", "primary")

    def __init__(self, history: LadderHistory, primary: Fraction) -> None:
        self.history = history
        self.primary = primary

    def __contains__(self, p) -> bool:
        return p == self.primary or p in self.history


class BuilderState:
    def __init__(self, config: BuilderConfig, separator: Separator, history: LadderHistory):
        self.config = config
        self.separator = separator
        self.history = history
        self.pairs: Dict[Fraction, Fraction] = {}
        self.paired_indices: Set[int] = set()
        self.next_unpaired = 0
        self.q_processed = 0
        self.step_count = 0
        self.records: List[PairRecord] = []
        self.caveats: List[str] = []

    def copy(self) -> "BuilderState":
        clone = BuilderState(self.config, self.separator, self.history.copy())
        clone.pairs = dict(self.pairs)
        clone.paired_indices = set(self.paired_indices)
        clone.next_unpaired = self.next_unpaired
        clone.q_processed = self.q_processed
        clone.step_count = self.step_count
        clone.records = list(self.records)
        clone.caveats = list(self.caveats)
        return clone

    def side_of(self, x) -> OpenInterval:
        """The G_0 half-line containing ``x``."""
        if x < self.separator:
            return OpenInterval(NEG_INF, self.separator)
        return OpenInterval(self.separator, POS_INF)

    def image(self, p) -> Optional[Fraction]:
        """f(p) as far as the construction has decided it."""
        p = Fraction(p)
        if self.config.Q.member(p):
            return p
        return self.pairs.get(p)

    def _pair(self, x: Fraction, x_index: int, partner: Fraction, partner_index: int) -> None:
        self.pairs[x] = partner
        self.pairs[partner] = x
        self.paired_indices.update((x_index, partner_index))
        while self.next_unpaired in self.paired_indices:
            self.next_unpaired += 1

    def __repr__(self) -> str:
        return (f"BuilderState(step_count={self.step_count}, pairs={len(self.pairs) // 2}, "
                f"ladder={len(self.history)}, g={self.separator})")


# ! --- Separator ---


def _hull(F: SetSpec) -> Tuple[Fraction, Fraction, Fraction, Fraction]:
    """(u, v) widened hull plus the tight (min, max) used by one-sided policies."""
    support = F.declared_support
    if support is not None:
        return support.lo, support.hi, support.lo, support.hi
    points = F.prefix(HULL_SAMPLE)
    if not points:
        return Fraction(0), Fraction(1), Fraction(0), Fraction(1)
    m, M = min(points), max(points)
    return m - 1, M + 1, m, M


def _candidates(F: SetSpec, policy: str) -> List[Tuple[str, Separator]]:
    u, v, m, M = _hull(F)
    affine = ("affine", Separator(u - (v - u), v - u))
    below = ("below", Separator(m + 1, -1))
    above = ("above", Separator(M - 1, 1))
    if policy == "below":
        return [below]
    if policy == "above":
        return [above]
    return [affine, below, above]


def _certified(F: SetSpec, g: Separator) -> bool:
    left = F.census(OpenInterval(NEG_INF, g))
    right = F.census(OpenInterval(g, POS_INF))
    logging.debug(f"Separator {g}: left {left}, right {right}")
    return not left.is_finite and not right.is_finite


def _choose_separator(F: SetSpec, policy: str) -> Tuple[Separator, Optional[str]]:
    candidates = _candidates(F, policy)
    for name, g in candidates:
        if _certified(F, g):
            logging.info(f"Separator g = {g} ({name} policy)")
            return g, None
    if F.opaque:
        logging.error(f"No separator candidate certified for opaque {F.describe()}")
        raise SeparatorUnverifiable(
            f"census cannot certify a separator for {F.describe()} under policy {policy!r}"
        )
    g = _candidates(F, "below")[0][1]
    caveat = f"separator {g} leaves a finite side of {F.describe()}"
    logging.warning(f"Using uncertified separator: {caveat}")
    return g, caveat


def choose_separator(F: SetSpec, policy: str = "affine") -> Separator:
    """An irrational g with F empty or infinite on each side."""
    return _choose_separator(F, policy)[0]


# ! --- Construction ---


def _validate(config: BuilderConfig) -> None:
    """Raise on a failed validation report; a config that passed once is not rechecked."""
    if config.validated:
        return
    report = validate_inputs(config.Q, config.F, config.validation_resolution,
                             isolation_depth=config.isolation_depth)
    if not report.disjoint:
        logging.error("Q and F intersect")
        raise DisjointnessError("Q and F must be disjoint", report)
    if not report.duplicate_free:
        logging.error("Enumeration repeats a value")
        raise DuplicateEnumerationError("enumerations must be duplicate-free", report)
    if report.isolated_point_findings:
        first = report.isolated_point_findings[0]
        logging.error(f"{len(report.isolated_point_findings)} isolated F-point(s)")
        raise IsolatedPointError(
            f"F-point {format_rational(first.point)} has no other point of Q∪F within "
            f"{format_rational(first.distance_at_least)}",
            report,
        )
    config.validated = True


def init(config: BuilderConfig) -> BuilderState:
    Q, F = config.Q, config.F
    _validate(config)
    if not F.has_index(0):
        raise FExhausted(f"{F.describe()} is empty")
    if not F.is_infinite:
        logging.warning(f"{F.describe()} is finite; the construction will stop with FExhausted")

    g, caveat = _choose_separator(F, config.separator_policy)
    x0 = F.enumerate(0)
    side = OpenInterval(NEG_INF, g) if x0 < g else OpenInterval(g, POS_INF)
    found = F.first_available(side, {x0}, config.external_budget)
    if found is None:
        raise SeedPartnerMissing(f"no F-point other than {format_rational(x0)} in {side}")
    partner, partner_index = found

    base = [NEG_INF, POS_INF, g, x0, partner]
    if Q.has_index(0):
        base.append(Q.enumerate(0))
    state = BuilderState(config, g, LadderHistory(base))
    if caveat:
        state.caveats.append(caveat)
    state.q_processed = 1 if Q.has_index(0) else 0
    state._pair(x0, 0, partner, partner_index)
    state.records.append(PairRecord(0, x0, 0, partner, partner_index, 0, side, TopLevel()))
    logging.info(f"Seed pair f({format_rational(x0)}) = {format_rational(partner)}")
    return state


def _feasibility(F: SetSpec, interval: OpenInterval, taken: _Taken) -> Optional[Evidence]:
    """``None`` when ``interval`` holds a free F-point, else why not."""
    census = F.census(interval)
    if census.is_infinite:
        return None
    if census.is_empty:
        return NextLevelEmpty(census)
    members = F.members(interval)
    if any(m not in taken for m in members):
        return None
    return NextLevelExhausted(tuple(members))


def greatest_feasible_level(state: BuilderState, x: Fraction) -> Tuple[int, OpenInterval, Evidence]:
    n = state.step_count
    F = state.config.F
    taken = _Taken(state.history, x)
    evidence: Evidence = TopLevel()
    for j in range(n + 1, -1, -1):
        interval = state.history.enclosing_at(x, j - 1) if j >= 1 else state.side_of(x)
        failure = _feasibility(F, interval, taken)
        if failure is None:
            if F.opaque and j <= n:
                evidence = BudgetCaveat(state.config.external_budget)
            return j, interval, evidence
        evidence = failure
    raise InvolutorError(f"no feasible level for {format_rational(x)}; separator unsound")


def advance(state: BuilderState) -> None:
    """One inductive step applied to ``state`` in place."""
    config = state.config
    F, Q = config.F, config.Q
    n = state.step_count
    i = state.next_unpaired
    if not F.has_index(i):
        logging.error(f"F exhausted at step {n + 1}")
        raise FExhausted(f"every point of {F.describe()} is already paired")
    x = F.enumerate(i)

    level, interval, evidence = greatest_feasible_level(state, x)
    found = F.first_available(interval, _Taken(state.history, x), config.external_budget)
    if found is None:
        raise InvolutorError(f"census reported a free F-point in {interval} but none was found")
    partner, partner_index = found

    delta = [x, partner]
    if Q.has_index(n + 1):
        delta.append(Q.enumerate(n + 1))
        state.q_processed += 1
    state.history.extend(delta)
    state._pair(x, i, partner, partner_index)
    state.step_count = n + 1
    state.records.append(
        PairRecord(n + 1, x, i, partner, partner_index, level, interval, evidence)
    )
    logging.debug(
        f"Step {n + 1}: f({format_rational(x)}) = {format_rational(partner)} "
        f"at level {level} in {interval} [{evidence.tag}]"
    )


def step(state: BuilderState) -> BuilderState:
    """One inductive step on a copy; ``state`` is left untouched."""
    new = state.copy()
    advance(new)
    return new


def run(state: BuilderState, n: int) -> BuilderState:
    if state.step_count >= n:
        return state
    new = state.copy()
    while new.step_count < n:
        advance(new)
    logging.info(f"Built {n} steps: {len(new.pairs) // 2} pairs, ladder of {len(new.history)} points")
    return new


def evaluate(config: BuilderConfig, p, max_steps: Optional[int] = None) -> Fraction:
    """f(p) for any point of Q ∪ F."""
    p = Fraction(p)
    _validate(config)
    if config.Q.member(p):
        return p
    i = config.F.index_of(p)
    if i is None:
        raise NotInDomain(f"{format_rational(p)} is in neither Q nor F")
    cap = i + 1 if max_steps is None else max_steps
    state = init(config)
    while p not in state.pairs:
        if state.step_count >= cap:
            raise WorkCapExceeded(
                f"{format_rational(p)} (index {i}) still unpaired after {cap} steps"
            )
        advance(state)
    return state.pairs[p]


def describe_state(state: BuilderState) -> str:
    return (f"g = {format_point(state.separator)}, {state.step_count} steps, "
            f"{state.q_processed} Q-points absorbed")
