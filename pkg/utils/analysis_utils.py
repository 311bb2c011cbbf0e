"""Witnesses and property suites for built involutions and sigma baselines.

Everything here is read-only over builder states: whenever an image beyond
the current state is needed, a private working copy is advanced instead.
All verification is over finite prefixes and the reports say so.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice
from typing import Any, Dict, List, Optional, Sequence, Tuple

from utils import builder_utils
from utils.builder_utils import (DEFAULT_EXTERNAL_BUDGET, BuilderConfig,
                                 BuilderState, NextLevelEmpty,
                                 NextLevelExhausted, PairRecord, TopLevel,
                                 choose_separator, evaluate, init, run)
from utils.csv_utils import export
from utils.error_utils import (CapExceeded, FExhausted, IsolatedTarget,
                               NotContinuityPoint, NotDiscontinuityPoint,
                               NotYetPaired, OpaqueSetError, SeedPartnerMissing,
                               UnsupportedChain)
from utils.exact_utils import (NEG_INF, POS_INF, OpenInterval, format_point,
                               format_rational, gap_lower_bound, to_decimal)
from utils.set_utils import Census, SetSpec
from utils.sigma_utils import (INFINITE_LEVEL, SigmaConfig, UserLevel,
                               in_target, sigma_value)

BELOW = "below"
ABOVE = "above"
SIDES = (BELOW, ABOVE)

DEFAULT_NS = (5, 10, 15)
DEFAULT_WINDOW = 20
DEFAULT_ENVELOPE_CAP = 400
DEFAULT_CERTIFICATE_SAMPLES = 20
DEFAULT_EVALUATION_STEPS = 4096
EXTENSION_BATCH = 64

SCOPE_NOTE = "checked over finite prefixes of the construction; not a proof over the infinite sets"


# ! --- Witness sequences ---


@dataclass(frozen=True)
class WitnessSequence:
    target: Fraction
    side: str
    terms: Tuple[Fraction, ...]
    sources: Tuple[Tuple[str, int], ...]

    def __len__(self) -> int:
        return len(self.terms)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "target": format_rational(self.target),
            "side": self.side,
            "terms": [format_rational(t) for t in self.terms],
            "sources": [f"{name}[{index}]" for name, index in self.sources],
        }


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")


def approach_sequence(Q: SetSpec, F: SetSpec, target, side: str, count: int,
                      budget: int = DEFAULT_EXTERNAL_BUDGET) -> WitnessSequence:
    """Term i is the least-index point of Q ∪ F within 2^(-i-2) of ``target``
    on ``side``, strictly closer than term i-1. F is searched first."""
    _check_side(side)
    if count < 1:
        raise ValueError("count must be at least 1")
    target = Fraction(target)
    terms, sources = [], []
    previous = None
    for i in range(count):
        reach = Fraction(1, 2 ** (i + 2))
        if side == BELOW:
            lo = target - reach if previous is None else max(previous, target - reach)
            window = OpenInterval(lo, target)
        else:
            hi = target + reach if previous is None else min(previous, target + reach)
            window = OpenInterval(target, hi)
        found, name = F.first_available(window, (), budget), "F"
        if found is None:
            found, name = Q.first_available(window, (), budget), "Q"
        if found is None:
            raise IsolatedTarget(f"no point of Q∪F in {window} near {format_rational(target)}")
        value, index = found
        terms.append(value)
        sources.append((name, index))
        previous = value
    return WitnessSequence(target, side, tuple(terms), tuple(sources))


def _source_of(state: BuilderState, point: Fraction) -> Tuple[str, int]:
    index = state.config.F.index_of(point)
    if index is not None:
        return "F", index
    return "Q", state.config.Q.index_of(point)


def _ladder_terms(state: BuilderState, target: Fraction, side: str, radius: Fraction) -> List[Fraction]:
    history = state.history
    window = (OpenInterval(target - radius, target) if side == BELOW
              else OpenInterval(target, target + radius))
    # points paired once target is a ladder point never straddle it
    start = history.entry_level(target)
    terms = [p for p in history.points_inside(window)
             if isinstance(p, Fraction) and (start is None or history.entry_level(p) > start)]
    if side == ABOVE:
        terms.reverse()
    return terms


def ladder_sequence(state: BuilderState, target, side: str,
                    radius: Fraction = Fraction(1, 4), min_terms: Optional[int] = None,
                    max_steps: Optional[int] = None) -> WitnessSequence:
    """Processed ladder points on ``side`` within ``radius`` of ``target``,
    farthest first, so every term is strictly closer than the one before and
    has a known image.

    With ``min_terms``, a private copy of ``state`` is advanced until the
    window holds that many points, up to ``max_steps``.
    """
    _check_side(side)
    target = Fraction(target)
    radius = Fraction(radius)
    working = state
    terms = _ladder_terms(working, target, side, radius)
    if min_terms is not None and len(terms) < min_terms:
        limit = max_steps or state.step_count + DEFAULT_EVALUATION_STEPS
        while len(terms) < min_terms:
            if working.step_count >= limit:
                raise CapExceeded(f"{len(terms)} of {min_terms} witness terms near "
                                  f"{format_rational(target)} after {limit} steps")
            if working is state:
                working = state.copy()
            for _ in range(min(EXTENSION_BATCH, limit - working.step_count)):
                builder_utils.advance(working)
            terms = _ladder_terms(working, target, side, radius)
        logging.debug(f"Witness window at {format_rational(target)} extended to step {working.step_count}")
    if not terms:
        raise IsolatedTarget(f"no processed point within {format_rational(radius)} "
                             f"{side} {format_rational(target)}")
    return WitnessSequence(target, side, tuple(terms), tuple(_source_of(working, t) for t in terms))


def witness_sequence(state: BuilderState, y, min_terms: int,
                     max_steps: Optional[int] = None) -> Optional[WitnessSequence]:
    """The ladder sequence on the side with more processed points, extended to
    ``min_terms``; ``None`` when Q ∪ F has no point near ``y`` on either side."""
    y = Fraction(y)
    lengths = {}
    for side in SIDES:
        try:
            lengths[side] = len(ladder_sequence(state, y, side))
        except IsolatedTarget:
            lengths[side] = 0
    sides = [side for side in SIDES if lengths[side] or _approachable(state, y, side)]
    if not sides:
        return None
    best = max(sides, key=lambda side: lengths[side])
    return ladder_sequence(state, y, best, min_terms=min_terms, max_steps=max_steps)


def _approachable(state: BuilderState, y: Fraction, side: str) -> bool:
    config = state.config
    try:
        approach_sequence(config.Q, config.F, y, side, 1, config.external_budget)
    except IsolatedTarget:
        return False
    return True


# ! --- Images ---


class _Images:
    """Image lookup that advances a private builder copy when needed."""

    def __init__(self, state: BuilderState, max_steps: int) -> None:
        self.state = state
        self.working = None
        self.max_steps = max_steps

    def __call__(self, p: Fraction) -> Fraction:
        image = self.state.image(p)
        if image is not None:
            return image
        if self.working is None:
            self.working = self.state.copy()
        while p not in self.working.pairs:
            if self.working.step_count >= self.max_steps:
                raise CapExceeded(f"{format_rational(p)} unpaired after {self.max_steps} steps")
            builder_utils.advance(self.working)
        return self.working.pairs[p]


class _Drawn:
    """Ladder points plus the samples drawn so far."""

    __slots__ = ("history", "drawn")

    def __init__(self, history, drawn) -> None:
        self.history = history
        self.drawn = drawn

    def __contains__(self, p) -> bool:
        return p in self.drawn or p in self.history


def _next_unprocessed(state: BuilderState, interval: OpenInterval, excluded: _Drawn) -> Optional[Fraction]:
    """Least-index point of Q ∪ F in ``interval`` not yet excluded; F wins ties."""
    budget = state.config.external_budget
    in_f = state.config.F.first_available(interval, excluded, budget)
    in_q = state.config.Q.first_available(interval, excluded, budget)
    if in_f is None:
        return None if in_q is None else in_q[0]
    if in_q is None or in_f[1] <= in_q[1]:
        return in_f[0]
    return in_q[0]


# ! --- Discontinuity certificates ---


@dataclass(frozen=True)
class DiscontinuityCertificate:
    x: Fraction
    fx: Fraction
    level: int
    interval: OpenInterval
    gap: Fraction
    samples: Tuple[Tuple[Fraction, Fraction, bool], ...]
    requested: int = DEFAULT_CERTIFICATE_SAMPLES
    exhausted: bool = False

    @property
    def samples_inside(self) -> int:
        return sum(1 for _, _, ok in self.samples if ok)

    @property
    def valid(self) -> bool:
        """A short sample list only passes when (Q ∪ F) ∩ I has nothing left to draw."""
        return (self.interval.has_endpoint(self.x)
                and not self.interval.in_closure(self.fx)
                and self.gap > 0
                and (len(self.samples) == self.requested or self.exhausted)
                and self.samples_inside == len(self.samples))

    def to_dict(self) -> Dict[str, Any]:
        lo, hi = self.interval.to_text()
        return {
            "x": format_rational(self.x),
            "fx": format_rational(self.fx),
            "level": self.level,
            "interval": [lo, hi],
            "gap": format_rational(self.gap),
            "samples_requested": self.requested,
            "samples": [
                {"point": format_rational(p), "image": format_rational(q), "inside": ok}
                for p, q, ok in self.samples
            ],
            "valid": self.valid,
        }

    def render(self) -> str:
        lines = [
            f"Discontinuity at x = {format_rational(self.x)}",
            f"  f(x)      = {format_rational(self.fx)}",
            f"  level k   = {self.level}",
            f"  interval  = {self.interval}",
            f"  gap       = {format_rational(self.gap)} (~{to_decimal(self.gap, 12)})",
            f"  samples   = {self.samples_inside}/{self.requested} images inside the interval",
        ]
        return "\n".join(lines)


def discontinuity_certificate(state: BuilderState, x,
                              max_samples: int = DEFAULT_CERTIFICATE_SAMPLES,
                              max_steps: Optional[int] = None) -> DiscontinuityCertificate:
    """Interval I with endpoint x, f(x) outside its closure, and later points mapped into I.

    Samples are the ladder points that entered I after x, then the
    unprocessed points of Q ∪ F in I in enumeration order, whose images come
    from a private copy of the builder.
    """
    x = Fraction(x)
    if state.config.Q.member(x):
        raise NotDiscontinuityPoint(f"{format_rational(x)} is in Q, where f is continuous")
    if x not in state.pairs:
        raise NotYetPaired(f"{format_rational(x)} has not been paired after {state.step_count} steps")
    fx = state.pairs[x]
    history = state.history
    k = history.entry_level(x)
    before, after = history.neighbors_at(x, k)
    # the side facing away from f(x) never has f(x) in its closure
    interval = OpenInterval(before, x) if fx > x else OpenInterval(x, after)
    gap = gap_lower_bound(fx, interval)

    points = [p for p in history.points_inside(interval)
              if isinstance(p, Fraction) and history.entry_level(p) > k]
    points.sort(key=lambda p: (history.entry_level(p), p))
    points = points[:max_samples]
    exhausted = False
    drawn = set(points)
    excluded = _Drawn(history, drawn)
    while len(points) < max_samples:
        p = _next_unprocessed(state, interval, excluded)
        if p is None:
            exhausted = True
            break
        points.append(p)
        drawn.add(p)

    images = _Images(state, max_steps or state.step_count + DEFAULT_EVALUATION_STEPS)
    samples = []
    for p in points:
        image = images(p)
        samples.append((p, image, interval.contains(image)))

    certificate = DiscontinuityCertificate(x, fx, k, interval, gap, tuple(samples), max_samples, exhausted)
    logging.debug(f"Certificate for {format_rational(x)}: I = {interval}, gap {format_rational(gap)}, "
                  f"{certificate.samples_inside}/{max_samples} samples inside")
    return certificate


# ! --- Continuity reports ---


@dataclass(frozen=True)
class EnvelopeTriple:
    N: int
    M: int
    bound: Fraction
    checked: Tuple[Tuple[int, Fraction, Fraction], ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "M": self.M,
            "bound": format_rational(self.bound),
            "checked": [
                {"i": i, "term": format_rational(a), "image": format_rational(fa)}
                for i, a, fa in self.checked
            ],
        }


@dataclass
class ContinuityReport:
    y: Fraction
    sequence: Optional[WitnessSequence]
    envelope: List[EnvelopeTriple] = field(default_factory=list)
    verdict: str = "Continuous"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "y": format_rational(self.y),
            "verdict": self.verdict,
            "sequence": None if self.sequence is None else self.sequence.to_dict(),
            "envelope": [t.to_dict() for t in self.envelope],
        }


def required_terms(Ns: Sequence[int] = DEFAULT_NS, window: int = DEFAULT_WINDOW) -> int:
    """Sequence length needed for every N to get one full window after it."""
    return max(Ns) + window + 2


def continuity_report(state: BuilderState, y, seq: Optional[WitnessSequence],
                      Ns: Sequence[int] = DEFAULT_NS, window: int = DEFAULT_WINDOW,
                      cap: int = DEFAULT_ENVELOPE_CAP,
                      max_steps: Optional[int] = None) -> ContinuityReport:
    """Envelope triples (N, M, bound): every term a_i, i in [M, M + window],
    has |f(a_i) - y| <= |a_N - y| = bound, with N < M <= cap.

    ``seq`` of ``None`` means the sequence generator found ``y`` isolated.
    A sequence too short for a full window, or no M up to ``cap``, raises
    ``CapExceeded`` carrying the partial report.
    """
    y = Fraction(y)
    if state.config.F.member(y):
        raise NotContinuityPoint(f"{format_rational(y)} is in F, where f is discontinuous")
    report = ContinuityReport(y, seq)
    if seq is None:
        report.verdict = "VacuouslyContinuous"
        return report

    images = _Images(state, max_steps or state.step_count + DEFAULT_EVALUATION_STEPS)
    terms = seq.terms
    for N in Ns:
        last_start = min(cap, len(terms) - 1 - window)
        if N + 1 > last_start:
            report.verdict = "CapExceeded"
            raise CapExceeded(f"{len(terms)} terms leave no window of {window} after N = {N} "
                              f"at {format_rational(y)}", partial=report)
        bound = abs(terms[N] - y)
        triple = None
        M = N + 1
        while triple is None and M <= last_start:
            checked = []
            for i in range(M, M + window + 1):
                try:
                    image = images(terms[i])
                except CapExceeded as e:
                    report.verdict = "CapExceeded"
                    raise CapExceeded(str(e), partial=report) from e
                checked.append((i, terms[i], image))
                if abs(image - y) > bound:
                    # every window holding term i fails too
                    M = i + 1
                    break
            else:
                triple = EnvelopeTriple(N, M, bound, tuple(checked))
        if triple is None:
            report.verdict = "CapExceeded"
            raise CapExceeded(f"no envelope start M <= {last_start} for N = {N} at {format_rational(y)}",
                              partial=report)
        report.envelope.append(triple)
    logging.debug(f"Continuity at {format_rational(y)}: {len(report.envelope)} envelope triples "
                  f"over {len(terms)} terms")
    return report


# ! --- Suite reports ---


@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: int
    counterexample: Optional[Dict[str, Any]] = None
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        data = {"name": self.name, "passed": self.passed, "checked": self.checked}
        if self.counterexample is not None:
            data["counterexample"] = self.counterexample
        if self.note:
            data["note"] = self.note
        return data


@dataclass
class SuiteReport:
    name: str
    checks: List[CheckResult] = field(default_factory=list)
    runtime: float = 0.0
    scope: str = SCOPE_NOTE

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self, include_runtime: bool = True) -> Dict[str, Any]:
        data = {
            "suite": self.name,
            "passed": self.passed,
            "scope": self.scope,
            "checks": [c.to_dict() for c in self.checks],
        }
        if include_runtime:
            data["runtime_seconds"] = round(self.runtime, 3)
        return data

    def to_json(self, include_runtime: bool = True) -> str:
        return json.dumps(self.to_dict(include_runtime), indent=2)


def _text(p) -> str:
    return format_point(p)


# ! --- Builder property suite ---


def _check_involution(state: BuilderState) -> CheckResult:
    for x, fx in state.pairs.items():
        ffx = state.pairs.get(fx)
        if fx == x or ffx != x:
            return CheckResult("involution", False, len(state.pairs), {
                "x": _text(x), "fx": _text(fx), "ffx": None if ffx is None else _text(ffx),
            })
    return CheckResult("involution", True, len(state.pairs))


def _check_domain(state: BuilderState) -> CheckResult:
    Q, F = state.config.Q, state.config.F
    for x in state.pairs:
        if Q.member(x) or not F.member(x) or x not in state.history:
            return CheckResult("domain", False, len(state.pairs), {"x": _text(x)})
    return CheckResult("domain", True, len(state.pairs))


def _check_identity_on_q(state: BuilderState, depth: int) -> CheckResult:
    points = state.config.Q.prefix(depth)
    for q in points:
        value = evaluate(state.config, q)
        if value != q or state.image(q) != q:
            return CheckResult("identity_on_q", False, len(points), {"q": _text(q), "f(q)": _text(value)})
    return CheckResult("identity_on_q", True, len(points))


def _check_scheduling(records: List[PairRecord]) -> CheckResult:
    paired = set()
    previous = -1
    least = 0
    for r in records:
        while least in paired:
            least += 1
        if r.primary_index <= previous or r.primary_index != least:
            return CheckResult("scheduling", False, len(records), {
                "step": r.step, "primary_index": r.primary_index,
                "expected": least, "previous": previous,
            })
        paired.update((r.primary_index, r.partner_index))
        previous = r.primary_index
    return CheckResult("scheduling", True, len(records))


def _recorded_interval(state: BuilderState, r: PairRecord) -> OpenInterval:
    if r.level == 0:
        return state.side_of(r.primary)
    return state.history.enclosing_at(r.primary, r.level - 1)


def _check_locality(state: BuilderState, records: List[PairRecord]) -> CheckResult:
    for r in records:
        interval = _recorded_interval(state, r)
        if interval != r.interval or not (interval.contains(r.primary) and interval.contains(r.partner)):
            return CheckResult("locality", False, len(records), {
                "step": r.step, "recorded": str(r.interval), "replayed": str(interval),
                "primary": _text(r.primary), "partner": _text(r.partner),
            })
    return CheckResult("locality", True, len(records))


def _check_maximality(state: BuilderState, records: List[PairRecord]) -> CheckResult:
    F = state.config.F
    history = state.history
    caveats = 0
    checked = 0
    for r in records:
        n = r.step - 1
        if r.step == 0 or r.level > n:
            continue
        checked += 1
        if F.opaque:
            caveats += 1
            continue
        interval = history.enclosing_at(r.primary, r.level)
        census = F.census(interval)
        taken = [m for m in F.members(interval)
                 if m == r.primary or (m in history and history.entry_level(m) <= n)]
        if census.is_infinite or (census.is_finite and len(taken) != census.count):
            return CheckResult("maximality", False, len(records), {
                "step": r.step, "level": r.level, "next_interval": str(interval), "census": str(census),
            })
    note = f"{caveats} record(s) on an opaque set accepted with a budget caveat" if caveats else ""
    return CheckResult("maximality", True, checked, note=note)


def _check_ladder_growth(state: BuilderState) -> CheckResult:
    history = state.history
    Q = state.config.Q
    for level in range(1, history.level + 1):
        grown = history.size_at(level) - history.size_at(level - 1)
        expected = 3 if Q.has_index(level) else 2
        if grown != expected:
            return CheckResult("ladder_growth", False, history.level, {
                "level": level, "grown": grown, "expected": expected,
            })
    return CheckResult("ladder_growth", True, history.level)


def _check_determinism(state: BuilderState) -> CheckResult:
    replay = run(init(state.config), state.step_count)
    original, replayed = export(state), export(replay)
    if original != replayed:
        first = next(i for i, (a, b) in enumerate(zip(original.splitlines(), replayed.splitlines())) if a != b)
        return CheckResult("determinism", False, 1, {"first_differing_record": first})
    return CheckResult("determinism", True, 1)


def property_suite(state: BuilderState, depth: int) -> SuiteReport:
    """Every construction invariant over the records with step <= depth."""
    started = time.perf_counter()
    records = [r for r in state.records if r.step <= depth]
    report = SuiteReport("builder")
    report.checks = [
        _check_involution(state),
        _check_domain(state),
        _check_identity_on_q(state, depth),
        _check_scheduling(records),
        _check_locality(state, records),
        _check_maximality(state, records),
        _check_ladder_growth(state),
        _check_determinism(state),
    ]
    report.runtime = time.perf_counter() - started
    failed = [c.name for c in report.checks if not c.passed]
    if failed:
        logging.error(f"Property suite failed: {', '.join(failed)}")
    else:
        logging.info(f"Property suite passed on {len(records)} records in {report.runtime:.2f}s")
    return report


# ! --- Naive reference ---


class _Prefix:
    """Growing enumeration prefix scanned linearly."""

    def __init__(self, S: SetSpec) -> None:
        self.S = S
        self.values: List[Fraction] = []
        self.source = iter(S)
        self.done = False

    def scan(self, interval: OpenInterval, taken, census: Census):
        """(value, index, members_seen) of the least-index free point in ``interval``."""
        if census.is_empty:
            return None, []
        seen = []
        i = 0
        while True:
            if i == len(self.values):
                if self.done:
                    return None, seen
                try:
                    self.values.append(next(self.source))
                except StopIteration:
                    self.done = True
                    return None, seen
            value = self.values[i]
            if interval.lo < value < interval.hi:
                seen.append(value)
                if value not in taken:
                    return (value, i), seen
                if census.is_finite and len(seen) == census.count:
                    return None, seen
            i += 1


def _naive_enclosing(ladder: List[Tuple[Any, int]], x: Fraction, level: int) -> OpenInterval:
    lo, hi = NEG_INF, POS_INF
    for p, entered in ladder:
        if entered > level:
            continue
        if p < x and p > lo:
            lo = p
        elif p > x and p < hi:
            hi = p
    return OpenInterval(lo, hi)


def naive_reference(config: BuilderConfig, n: int) -> List[PairRecord]:
    """The construction transcribed directly: a flat ladder list and linear
    scans of the enumeration, with census used only to stop a scan."""
    Q, F = config.Q, config.F
    if Q.opaque or F.opaque:
        raise OpaqueSetError("the naive reference needs sets with an analytic census")
    g = choose_separator(F, config.separator_policy)
    prefix = _Prefix(F)
    x0 = F.enumerate(0)

    def side(x):
        return OpenInterval(NEG_INF, g) if x < g else OpenInterval(g, POS_INF)

    seed_side = side(x0)
    found, _ = prefix.scan(seed_side, {x0}, F.census(seed_side))
    if found is None:
        raise SeedPartnerMissing(f"no partner for {format_rational(x0)}")
    partner, partner_index = found
    ladder = [(NEG_INF, 0), (POS_INF, 0), (g, 0), (x0, 0), (partner, 0)]
    if Q.has_index(0):
        ladder.append((Q.enumerate(0), 0))
    paired = {0, partner_index}
    records = [PairRecord(0, x0, 0, partner, partner_index, 0, seed_side, TopLevel())]

    for step_index in range(n):
        i = 0
        while i in paired:
            i += 1
        if not F.has_index(i):
            raise FExhausted(f"every point of {F.describe()} is already paired")
        x = F.enumerate(i)
        taken = {p for p, _ in ladder} | {x}
        evidence = TopLevel()
        choice = None
        for j in range(step_index + 1, -1, -1):
            interval = _naive_enclosing(ladder, x, j - 1) if j >= 1 else side(x)
            census = F.census(interval)
            found, seen = prefix.scan(interval, taken, census)
            if found is not None:
                choice = (j, interval, found)
                break
            evidence = NextLevelEmpty(census) if census.is_empty else NextLevelExhausted(tuple(seen))
        j, interval, (partner, partner_index) = choice
        delta = [x, partner]
        if Q.has_index(step_index + 1):
            delta.append(Q.enumerate(step_index + 1))
        ladder.extend((p, step_index + 1) for p in delta)
        paired.update((i, partner_index))
        records.append(PairRecord(step_index + 1, x, i, partner, partner_index, j, interval, evidence))
    return records


def compare_with_reference(state: BuilderState, depth: int) -> CheckResult:
    depth = min(depth, state.step_count)
    reference = naive_reference(state.config, depth)
    built = [r for r in state.records if r.step <= depth]
    for ours, theirs in zip(built, reference):
        if ours != theirs:
            return CheckResult("naive_reference", False, len(reference), {
                "step": ours.step, "builder": ours.to_row(), "reference": theirs.to_row(),
            })
    return CheckResult("naive_reference", len(built) == len(reference), len(reference))


# ! --- Sigma suite ---


def _sign(v: Fraction) -> int:
    return (v > 0) - (v < 0)


def _sigma_values(config: SigmaConfig, xs: List[Fraction]) -> CheckResult:
    for x in xs:
        value = sigma_value(config, x)
        level = config.chain.level(x)
        if level == INFINITE_LEVEL:
            ok = value == 0
        else:
            expected = 1 if config.split.classify(x) == "A" else -1
            ok = value != 0 and abs(value) * level == 1 and _sign(value) == expected
        if not ok:
            return CheckResult("sigma_values", False, len(xs), {
                "x": _text(x), "level": str(level), "value": _text(value),
            })
    return CheckResult("sigma_values", True, len(xs))


def _chain_monotone(config: SigmaConfig, xs: List[Fraction]) -> CheckResult:
    chain = config.chain
    for x in xs:
        for n in range(1, chain.depth):
            if chain.in_rendered(x, n + 1) and not chain.in_rendered(x, n):
                return CheckResult("chain_monotone", False, len(xs), {"x": _text(x), "n": n})
    return CheckResult("chain_monotone", True, len(xs))


def _level_agreement(config: SigmaConfig, xs: List[Fraction]) -> CheckResult:
    chain = config.chain
    for x in xs:
        level = chain.level(x)
        rendered = max(k for k in range(1, chain.depth + 1) if chain.in_rendered(x, k))
        ok = rendered == chain.depth if level >= chain.depth else rendered == level
        if not ok:
            return CheckResult("level_agreement", False, len(xs), {
                "x": _text(x), "level": str(level), "rendered": rendered,
            })
    return CheckResult("level_agreement", True, len(xs))


def _recipe_soundness(config: SigmaConfig, xs: List[Fraction]) -> CheckResult:
    for x in xs:
        finite = config.chain.level(x) != INFINITE_LEVEL
        if finite != in_target(config, x):
            return CheckResult("recipe_soundness", False, len(xs), {"x": _text(x), "level_finite": finite})
    return CheckResult("recipe_soundness", True, len(xs))


def _split_density(config: SigmaConfig, xs: List[Fraction], scan_cap: int = 50000) -> CheckResult:
    radius = Fraction(1, 64)
    points = xs[:16]
    for x in points:
        window = OpenInterval(x - radius, x + radius)
        classes = set()
        members = 0
        for value in islice(iter(config.X), scan_cap):
            if window.contains(value):
                classes.add(config.split.classify(value))
                members += 1
                if members == 64:
                    break
        if classes != {"A", "B"}:
            return CheckResult("split_density", False, len(points), {
                "window": str(window), "classes": sorted(classes),
            })
    return CheckResult("split_density", True, len(points))


def _class_witness(config: SigmaConfig, cls: str, window: OpenInterval) -> Optional[Fraction]:
    for value in config.split.members_near(cls, window.lo, window.hi):
        if config.X.member(value):
            return value
    return None


def _discontinuities(config: SigmaConfig, xs: List[Fraction], limit: int = 20, terms: int = 8) -> CheckResult:
    targets = [x for x in xs if in_target(config, x)][:limit]
    for c in targets:
        value = sigma_value(config, c)
        opposite = "B" if config.split.classify(c) == "A" else "A"
        gap = None
        for i in range(terms):
            reach = Fraction(1, 2 ** (i + 2))
            witness = _class_witness(config, opposite, OpenInterval(c - reach, c))
            if witness is None:
                witness = _class_witness(config, opposite, OpenInterval(c, c + reach))
            if witness is None:
                return CheckResult("discontinuity", False, len(targets), {"c": _text(c), "term": i})
            distance = abs(sigma_value(config, witness) - value)
            gap = distance if gap is None else min(gap, distance)
        if value == 0 or gap < abs(value):
            return CheckResult("discontinuity", False, len(targets), {
                "c": _text(c), "value": _text(value), "gap": _text(gap),
            })
    return CheckResult("discontinuity", True, len(targets))


def _continuities(config: SigmaConfig, xs: List[Fraction], limit: int = 20,
                  max_n: int = 20, per_radius: int = 8) -> CheckResult:
    chain = config.chain
    points = [x for x in xs if not in_target(config, x)][:limit]
    for x in points:
        for n in range(2, max_n + 1):
            r = chain.radius(x, n)
            if r is None:
                continue
            window = OpenInterval(x - r, x + r)
            near = set()
            for _ in range(per_radius):
                found = config.X.first_available(window, near)
                if found is None:
                    break
                z = found[0]
                near.add(z)
                if abs(sigma_value(config, z)) > Fraction(1, n):
                    return CheckResult("continuity", False, len(points), {
                        "x": _text(x), "n": n, "radius": _text(r), "z": _text(z),
                    })
    return CheckResult("continuity", True, len(points))


def sigma_suite(config: SigmaConfig, samples: int = 200) -> SuiteReport:
    if isinstance(config.chain.recipe, UserLevel):
        raise UnsupportedChain(f"{config.chain.describe()} has no rendering to verify against")
    started = time.perf_counter()
    xs = config.X.prefix(samples)
    report = SuiteReport("sigma")
    report.checks = [
        _sigma_values(config, xs),
        _chain_monotone(config, xs),
        _level_agreement(config, xs),
        _recipe_soundness(config, xs),
        _split_density(config, xs),
        _discontinuities(config, xs),
        _continuities(config, xs),
    ]
    report.runtime = time.perf_counter() - started
    logging.info(f"Sigma suite on {len(xs)} samples: {'passed' if report.passed else 'FAILED'}")
    return report
