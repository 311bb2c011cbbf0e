"""Machine descriptions of countable rational sets.

Every set has a fixed enumeration order, an exact ``index_of`` inverse and a
census oracle that classifies ``set ∩ interval`` as empty, finite or
infinite. The grid kinds (dyadics, odd denominators, all rationals) answer
census and partner queries analytically; the finite kinds scan.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import count, islice
from math import gcd
from pathlib import Path
from typing import Container, Iterator, List, Optional, Tuple

from utils.error_utils import BudgetExceeded, IndexOutOfRange
from utils.exact_utils import (Infinity, OpenInterval, ceil_point, floor_point,
                               format_rational, parse_rational, scale, shift)

DEFAULT_ISOLATION_DEPTH = 256
DEFAULT_PREFIX_CHECK = 2048


class CensusKind(Enum):
    EMPTY = "empty"
    FINITE = "finite"
    INFINITE = "infinite"


@dataclass(frozen=True)
class Census:
    kind: CensusKind
    count: Optional[int] = None

    @classmethod
    def of_count(cls, k: int) -> "Census":
        return EMPTY if k == 0 else cls(CensusKind.FINITE, k)

    @property
    def is_empty(self) -> bool:
        return self.kind is CensusKind.EMPTY

    @property
    def is_infinite(self) -> bool:
        return self.kind is CensusKind.INFINITE

    @property
    def is_finite(self) -> bool:
        return self.kind is CensusKind.FINITE

    def __str__(self) -> str:
        if self.is_finite:
            return f"finite({self.count})"
        return self.kind.value


EMPTY = Census(CensusKind.EMPTY)
INFINITE = Census(CensusKind.INFINITE)


class _Either:
    """Membership in either of two containers."""

    __slots__ = ("first", "second")

    def __init__(self, first: Container, second: Container) -> None:
        self.first = first
        self.second = second

    def __contains__(self, p) -> bool:
        return p in self.first or p in self.second


def _as_fraction(q) -> Optional[Fraction]:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, int):
        return Fraction(q)
    return None


class SetSpec(ABC):
    """A countable set of rationals with a canonical enumeration."""

    opaque = False

    @abstractmethod
    def enumerate(self, i: int) -> Fraction:
        """The i-th element in canonical order."""

    @abstractmethod
    def index_of(self, q) -> Optional[int]:
        """Exact inverse of :meth:`enumerate`; ``None`` for non-members."""

    @abstractmethod
    def census(self, interval: OpenInterval) -> Census:
        ...

    @abstractmethod
    def first_available(self, interval: OpenInterval, excluded: Container = (),
                        budget: int = 1) -> Optional[Tuple[Fraction, int]]:
        """Least-index element inside ``interval`` and outside ``excluded``."""

    @abstractmethod
    def __iter__(self) -> Iterator[Fraction]:
        ...

    @property
    def cardinality(self) -> Optional[int]:
        """Number of elements, ``None`` when infinite."""
        return None

    @property
    def is_infinite(self) -> bool:
        return self.cardinality is None

    @property
    def declared_support(self) -> Optional[OpenInterval]:
        return None

    @property
    def analytic_duplicate_free(self) -> bool:
        return False

    def has_index(self, i: int) -> bool:
        size = self.cardinality
        return i >= 0 and (size is None or i < size)

    def member(self, q) -> bool:
        return self.index_of(q) is not None

    def members(self, interval: OpenInterval) -> List[Fraction]:
        """All elements inside ``interval`` in enumeration order (finite census only)."""
        if not self.census(interval).is_finite:
            return []
        return [v for v in self if interval.contains(v)]

    def prefix(self, n: int) -> List[Fraction]:
        return list(islice(iter(self), n))

    def describe(self) -> str:
        return type(self).__name__


# ! --- Grid kinds ---


@lru_cache(maxsize=4096)
def _squarefree_divisors(d: int) -> Tuple[Tuple[int, int], ...]:
    """(e, mobius(e)) for every squarefree divisor e of d."""
    primes = []
    n, p = d, 2
    while p * p <= n:
        if n % p == 0:
            primes.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        primes.append(n)
    divisors = [(1, 1)]
    for prime in primes:
        divisors += [(e * prime, -mu) for e, mu in divisors]
    return tuple(divisors)


def _coprime_count(d: int, a: int, b: int) -> int:
    """Integers in [a, b] coprime to d."""
    if b < a:
        return 0
    return sum(mu * (b // e - (a - 1) // e) for e, mu in _squarefree_divisors(d))


@dataclass(frozen=True)
class _GridSet(SetSpec):
    """Reduced fractions p/d in (lo, hi), ordered by denominator then numerator."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"{type(self).__name__} needs lo < hi, got ({self.lo}, {self.hi})")

    # Hooks for the three grids.
    def _denominators(self) -> Iterator[int]:
        raise NotImplementedError

    def _denominator_ok(self, d: int) -> bool:
        raise NotImplementedError

    def _count(self, d: int, a: int, b: int) -> int:
        return _coprime_count(d, a, b)

    def _next_admissible(self, d: int, p: int) -> int:
        while gcd(p, d) != 1:
            p += 1
        return p

    def _kth(self, d: int, a: int, b: int, k: int) -> int:
        lo, hi = a, b
        while lo < hi:
            mid = (lo + hi) // 2
            if self._count(d, a, mid) >= k + 1:
                hi = mid
            else:
                lo = mid + 1
        return lo

    @staticmethod
    def _numerator_range(d: int, lower, upper) -> Tuple[int, int]:
        return floor_point(scale(lower, d)) + 1, ceil_point(scale(upper, d)) - 1

    @cached_property
    def _blocks(self) -> dict:
        return {"dens": [], "starts": [], "total": 0, "source": self._denominators()}

    def _grow(self) -> None:
        memo = self._blocks
        d = next(memo["source"])
        a, b = self._numerator_range(d, self.lo, self.hi)
        memo["dens"].append(d)
        memo["starts"].append(memo["total"])
        memo["total"] += self._count(d, a, b)

    @property
    def declared_support(self) -> OpenInterval:
        return OpenInterval(self.lo, self.hi)

    @property
    def analytic_duplicate_free(self) -> bool:
        return True

    def describe(self) -> str:
        return f"{type(self).__name__}({format_rational(self.lo)}, {format_rational(self.hi)})"

    def enumerate(self, i: int) -> Fraction:
        if i < 0:
            raise IndexOutOfRange(f"negative index {i}")
        memo = self._blocks
        while memo["total"] <= i:
            self._grow()
        k = bisect_right(memo["starts"], i) - 1
        d = memo["dens"][k]
        a, b = self._numerator_range(d, self.lo, self.hi)
        return Fraction(self._kth(d, a, b, i - memo["starts"][k]), d)

    def index_of(self, q) -> Optional[int]:
        q = _as_fraction(q)
        if q is None or not (self.lo < q < self.hi) or not self._denominator_ok(q.denominator):
            return None
        d = q.denominator
        memo = self._blocks
        while not memo["dens"] or memo["dens"][-1] < d:
            self._grow()
        k = bisect_left(memo["dens"], d)
        a, _ = self._numerator_range(d, self.lo, self.hi)
        return memo["starts"][k] + self._count(d, a, q.numerator - 1)

    def _clip(self, interval: OpenInterval):
        return max(self.lo, interval.lo), min(self.hi, interval.hi)

    def census(self, interval: OpenInterval) -> Census:
        lower, upper = self._clip(interval)
        # each grid is dense in its support
        return INFINITE if lower < upper else EMPTY

    def first_available(self, interval, excluded=(), budget=1):
        lower, upper = self._clip(interval)
        if not lower < upper:
            return None
        for d in self._denominators():
            a, b = self._numerator_range(d, lower, upper)
            p = a
            while p <= b:
                p = self._next_admissible(d, p)
                if p > b:
                    break
                value = Fraction(p, d)
                if value not in excluded:
                    return value, self.index_of(value)
                p += 1
        return None

    def __iter__(self) -> Iterator[Fraction]:
        for d in self._denominators():
            a, b = self._numerator_range(d, self.lo, self.hi)
            p = a
            while p <= b:
                p = self._next_admissible(d, p)
                if p > b:
                    break
                yield Fraction(p, d)
                p += 1


@dataclass(frozen=True)
class DyadicsIn(_GridSet):
    def _denominators(self):
        d = 1
        while True:
            yield d
            d *= 2

    def _denominator_ok(self, d):
        return d & (d - 1) == 0

    def _count(self, d, a, b):
        if b < a:
            return 0
        if d == 1:
            return b - a + 1
        return (b + 1) // 2 - a // 2

    def _next_admissible(self, d, p):
        return p if d == 1 or p % 2 else p + 1

    def _kth(self, d, a, b, k):
        if d == 1:
            return a + k
        return (a if a % 2 else a + 1) + 2 * k


@dataclass(frozen=True)
class OddDenominatorIn(_GridSet):
    def _denominators(self):
        return count(3, 2)

    def _denominator_ok(self, d):
        return d % 2 == 1 and d > 1


@dataclass(frozen=True)
class AllRationalsIn(_GridSet):
    def _denominators(self):
        return count(1)

    def _denominator_ok(self, d):
        return True


# ! --- Progressions and lists ---


@dataclass(frozen=True)
class ArithmeticProgression(SetSpec):
    start: Fraction
    step: Fraction
    count: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "start", Fraction(self.start))
        object.__setattr__(self, "step", Fraction(self.step))
        if self.step == 0:
            raise ValueError("ArithmeticProgression needs a nonzero step")
        if self.count is not None and self.count < 0:
            raise ValueError("ArithmeticProgression count must be non-negative")

    @property
    def cardinality(self):
        return self.count

    @property
    def analytic_duplicate_free(self) -> bool:
        return True

    def describe(self) -> str:
        size = "unbounded" if self.count is None else self.count
        return (f"ArithmeticProgression({format_rational(self.start)}, "
                f"{format_rational(self.step)}, {size})")

    def enumerate(self, i):
        if not self.has_index(i):
            raise IndexOutOfRange(f"index {i} outside {self.describe()}")
        return self.start + i * self.step

    def index_of(self, q):
        q = _as_fraction(q)
        if q is None:
            return None
        t = (q - self.start) / self.step
        if t.denominator != 1 or not self.has_index(t.numerator):
            return None
        return t.numerator

    def _index_range(self, interval: OpenInterval) -> Optional[Tuple[int, Optional[int]]]:
        inverse = 1 / self.step
        t1 = scale(shift(interval.lo, -self.start), inverse)
        t2 = scale(shift(interval.hi, -self.start), inverse)
        lower, upper = (t1, t2) if self.step > 0 else (t2, t1)
        i_min = 0 if isinstance(lower, Infinity) else max(0, floor_point(lower) + 1)
        if isinstance(upper, Infinity):
            i_max = None if self.count is None else self.count - 1
        else:
            i_max = ceil_point(upper) - 1
            if self.count is not None:
                i_max = min(i_max, self.count - 1)
        if i_max is not None and i_max < i_min:
            return None
        return i_min, i_max

    def census(self, interval):
        span = self._index_range(interval)
        if span is None:
            return EMPTY
        i_min, i_max = span
        return INFINITE if i_max is None else Census.of_count(i_max - i_min + 1)

    def members(self, interval):
        span = self._index_range(interval)
        if span is None or span[1] is None:
            return []
        return [self.start + i * self.step for i in range(span[0], span[1] + 1)]

    def first_available(self, interval, excluded=(), budget=1):
        span = self._index_range(interval)
        if span is None:
            return None
        i_min, i_max = span
        for i in count(i_min):
            if i_max is not None and i > i_max:
                return None
            value = self.start + i * self.step
            if value not in excluded:
                return value, i

    def __iter__(self):
        indices = count() if self.count is None else range(self.count)
        for i in indices:
            yield self.start + i * self.step


@dataclass(frozen=True)
class FiniteList(SetSpec):
    values: Tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))

    @cached_property
    def _positions(self) -> dict:
        positions = {}
        for i, v in enumerate(self.values):
            positions.setdefault(v, i)
        return positions

    @property
    def cardinality(self):
        return len(self.values)

    def describe(self) -> str:
        return f"FiniteList[{len(self.values)}]"

    def enumerate(self, i):
        if not self.has_index(i):
            raise IndexOutOfRange(f"index {i} outside {self.describe()}")
        return self.values[i]

    def index_of(self, q):
        q = _as_fraction(q)
        return None if q is None else self._positions.get(q)

    def census(self, interval):
        return Census.of_count(sum(1 for v in self.values if interval.contains(v)))

    def members(self, interval):
        return [v for v in self.values if interval.contains(v)]

    def first_available(self, interval, excluded=(), budget=1):
        for i, v in enumerate(self.values):
            if interval.contains(v) and v not in excluded:
                return v, i
        return None

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class ExternalList(FiniteList):
    """A newline-delimited file of "p/q" strings, treated as opaque."""

    path: str = ""
    opaque = True

    @classmethod
    def from_file(cls, path) -> "ExternalList":
        values = []
        with open(path, "r", encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                try:
                    values.append(parse_rational(text))
                except ValueError as e:
                    raise ValueError(f"{path}:{line_number}: {e}") from e
        logging.info(f"Loaded {len(values)} points from external list {path}")
        return cls(values=tuple(values), path=str(Path(path)))

    def describe(self) -> str:
        return f"ExternalList({self.path}, {len(self.values)} points)"

    def first_available(self, interval, excluded=(), budget=1):
        for i, v in enumerate(self.values[:budget]):
            if interval.contains(v) and v not in excluded:
                return v, i
        if len(self.values) > budget:
            logging.warning(f"Budget {budget} exhausted scanning {self.describe()}")
            raise BudgetExceeded(budget)
        return None


@dataclass(frozen=True)
class Union(SetSpec):
    """Round-robin over components; values already in an earlier component are skipped."""

    specs: Tuple[SetSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))

    @property
    def opaque(self):
        return any(s.opaque for s in self.specs)

    @cached_property
    def _memo(self) -> dict:
        return {"values": [], "positions": {}, "source": self._generate()}

    def _generate(self) -> Iterator[Fraction]:
        sources = [iter(s) for s in self.specs]
        alive = [True] * len(sources)
        while any(alive):
            for c, source in enumerate(sources):
                if not alive[c]:
                    continue
                try:
                    value = next(source)
                except StopIteration:
                    alive[c] = False
                    continue
                if not any(s.member(value) for s in self.specs[:c]):
                    yield value

    def _extend(self) -> bool:
        memo = self._memo
        try:
            value = next(memo["source"])
        except StopIteration:
            return False
        memo["positions"][value] = len(memo["values"])
        memo["values"].append(value)
        return True

    @property
    def cardinality(self):
        if any(s.is_infinite for s in self.specs):
            return None
        while self._extend():
            pass
        return len(self._memo["values"])

    @property
    def declared_support(self):
        supports = [s.declared_support for s in self.specs]
        if not supports or any(s is None for s in supports):
            return None
        return OpenInterval(min(s.lo for s in supports), max(s.hi for s in supports))

    def describe(self) -> str:
        return f"Union({', '.join(s.describe() for s in self.specs)})"

    def enumerate(self, i):
        if i < 0:
            raise IndexOutOfRange(f"negative index {i}")
        values = self._memo["values"]
        while len(values) <= i:
            if not self._extend():
                raise IndexOutOfRange(f"index {i} outside {self.describe()}")
        return values[i]

    def index_of(self, q):
        q = _as_fraction(q)
        if q is None or not any(s.member(q) for s in self.specs):
            return None
        positions = self._memo["positions"]
        while q not in positions:
            self._extend()
        return positions[q]

    def census(self, interval):
        counts = [s.census(interval) for s in self.specs]
        if any(c.is_infinite for c in counts):
            return INFINITE
        return Census.of_count(len(self.members(interval)))

    def members(self, interval):
        found = set()
        for spec in self.specs:
            if spec.census(interval).is_infinite:
                return []
            found.update(spec.members(interval))
        return sorted(found, key=self.index_of)

    def first_available(self, interval, excluded=(), budget=1):
        best = None
        for c, spec in enumerate(self.specs):
            duplicates = set()
            while True:
                found = spec.first_available(interval, _Either(excluded, duplicates), budget)
                if found is None:
                    break
                value, k = found
                if best is not None and k >= best[0]:
                    break
                if any(s.member(value) for s in self.specs[:c]):
                    duplicates.add(value)
                    continue
                best = (k, c, value)
                break
        if best is None:
            return None
        return best[2], self.index_of(best[2])

    def __iter__(self):
        i = 0
        while True:
            values = self._memo["values"]
            if i >= len(values) and not self._extend():
                return
            yield self._memo["values"][i]
            i += 1


# ! --- Input validation ---


@dataclass(frozen=True)
class IsolationFinding:
    point: Fraction
    distance_at_least: Fraction


@dataclass
class ValidationReport:
    disjoint: bool
    duplicate_free: bool
    f_infinite_declared: bool
    isolated_point_findings: List[IsolationFinding]
    resolution: Fraction
    disjointness_method: str = "analytic"
    notes: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.disjoint and self.duplicate_free and not self.isolated_point_findings

    def to_dict(self) -> dict:
        return {
            "disjoint": self.disjoint,
            "disjointness_method": self.disjointness_method,
            "duplicate_free": self.duplicate_free,
            "f_infinite_declared": self.f_infinite_declared,
            "isolated_point_findings": [
                {"point": format_rational(f.point),
                 "distance_at_least": format_rational(f.distance_at_least)}
                for f in self.isolated_point_findings
            ],
            "resolution": format_rational(self.resolution),
            "notes": list(self.notes),
        }


def _analytic_disjoint(Q: SetSpec, F: SetSpec) -> Optional[bool]:
    if {type(Q), type(F)} == {DyadicsIn, OddDenominatorIn}:
        return True
    if isinstance(Q, _GridSet) and isinstance(F, _GridSet):
        if not max(Q.lo, F.lo) < min(Q.hi, F.hi):
            return True
        if type(Q) is type(F) or AllRationalsIn in (type(Q), type(F)):
            return False
    return None


def _prefix_disjoint(Q: SetSpec, F: SetSpec, depth: int) -> bool:
    for left, right in ((Q, F), (F, Q)):
        for value in islice(iter(left), depth):
            if right.member(value):
                logging.error(f"{format_rational(value)} lies in both Q and F")
                return False
    return True


def _prefix_duplicate_free(S: SetSpec, depth: int) -> bool:
    if S.analytic_duplicate_free:
        return True
    seen = set()
    for value in islice(iter(S), depth):
        if value in seen:
            logging.error(f"{S.describe()} enumerates {format_rational(value)} twice")
            return False
        seen.add(value)
    return True


def _has_neighbor(Q: SetSpec, F: SetSpec, x: Fraction, radius: Fraction) -> bool:
    windows = (OpenInterval(x - radius, x), OpenInterval(x, x + radius))
    return any(not S.census(w).is_empty for S in (Q, F) for w in windows)


def validate_inputs(Q: SetSpec, F: SetSpec, resolution: Fraction,
                    isolation_depth: int = DEFAULT_ISOLATION_DEPTH,
                    prefix_depth: int = DEFAULT_PREFIX_CHECK) -> ValidationReport:
    """Check the construction's hypotheses as far as they are decidable.

    Verdicts are reported, never raised; callers treat a failed report as
    fatal.
    """
    resolution = Fraction(resolution)
    if resolution <= 0:
        raise ValueError("resolution must be positive")

    notes = []
    disjoint = _analytic_disjoint(Q, F)
    method = "analytic"
    if disjoint is None:
        method = "prefix"
        disjoint = _prefix_disjoint(Q, F, prefix_depth)
        if Q.is_infinite and F.is_infinite:
            notes.append(f"disjointness checked on the first {prefix_depth} points of each set")

    duplicate_free = _prefix_duplicate_free(Q, prefix_depth) and _prefix_duplicate_free(F, prefix_depth)

    findings = []
    for x in islice(iter(F), isolation_depth):
        if _has_neighbor(Q, F, x, resolution):
            continue
        radius = resolution
        for _ in range(20):
            if _has_neighbor(Q, F, x, radius * 2):
                break
            radius *= 2
        findings.append(IsolationFinding(x, radius))
        logging.warning(f"F-point {format_rational(x)} has no neighbour within {format_rational(radius)}")

    report = ValidationReport(
        disjoint=disjoint,
        duplicate_free=duplicate_free,
        f_infinite_declared=F.is_infinite,
        isolated_point_findings=findings,
        resolution=resolution,
        disjointness_method=method,
        notes=notes,
    )
    logging.info(
        f"Validated Q={Q.describe()} F={F.describe()}: disjoint={disjoint} ({method}), "
        f"duplicate_free={duplicate_free}, isolated={len(findings)}"
    )
    return report
