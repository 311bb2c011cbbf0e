"""Exact ordered arithmetic: rationals, the sqrt(2) separator, ±infinity,
open intervals and endpoint ladders.

Rationals are plain ``fractions.Fraction`` values. ``Separator`` and
``Infinity`` implement rich comparisons against fractions, so mixed
collections of ladder points sort natively inside a ``SortedList``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from math import floor, isqrt
from typing import Iterable, Iterator, Optional, Tuple, Union

import mpmath
from sortedcontainers import SortedList

from utils.error_utils import (InfiniteQueryPoint, LadderMember,
                               LevelNotComputed)

Rational = Fraction

_ZERO = Fraction(0)

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)(?:/(\d+))?\s*$")
_SEPARATOR_RE = re.compile(r"^(-?\d+/\d+)\+(-?\d+/\d+)\*sqrt2$")


class Ordering(IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def sign_with_sqrt2(p: Fraction, q: Fraction) -> int:
    """Sign of ``p + q*sqrt(2)`` in integer arithmetic."""
    sp = (p > 0) - (p < 0)
    sq = (q > 0) - (q < 0)
    if sq == 0:
        return sp
    if sp == 0 or sp == sq:
        return sq
    # p^2 == 2q^2 has no rational solution with q != 0
    return sp if p * p > 2 * q * q else sq


class _ExactOrder:
    """Rich comparisons routed through :func:`compare`."""

    __slots__ = ()

    def __lt__(self, other):
        try:
            return compare(self, other) < 0
        except TypeError:
            return NotImplemented

    def __le__(self, other):
        try:
            return compare(self, other) <= 0
        except TypeError:
            return NotImplemented

    def __gt__(self, other):
        try:
            return compare(self, other) > 0
        except TypeError:
            return NotImplemented

    def __ge__(self, other):
        try:
            return compare(self, other) >= 0
        except TypeError:
            return NotImplemented


class Infinity(_ExactOrder):
    __slots__ = ("sign",)

    def __init__(self, sign: int) -> None:
        if sign not in (-1, 1):
            raise ValueError(f"Infinity sign must be ±1, got {sign}")
        self.sign = sign

    def __eq__(self, other):
        return isinstance(other, Infinity) and other.sign == self.sign

    def __hash__(self):
        return hash(("inf", self.sign))

    def __neg__(self) -> "Infinity":
        return NEG_INF if self.sign > 0 else POS_INF

    def __repr__(self) -> str:
        return "NEG_INF" if self.sign < 0 else "POS_INF"

    def __str__(self) -> str:
        return "-inf" if self.sign < 0 else "+inf"


NEG_INF = Infinity(-1)
POS_INF = Infinity(1)


@dataclass(frozen=True, eq=True)
class Separator(_ExactOrder):
    """The irrational ``a + b*sqrt(2)`` with ``b != 0``."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.b == 0:
            raise ValueError("Separator needs a nonzero sqrt2 coefficient")

    def enclosure(self, bits: int = 64) -> Tuple[Fraction, Fraction]:
        """Rational bounds ``lo < value < hi`` of width ``|b| / 2**bits``."""
        s = isqrt(2 << (2 * bits))
        root_lo = Fraction(s, 1 << bits)
        root_hi = Fraction(s + 1, 1 << bits)
        if self.b > 0:
            return self.a + self.b * root_lo, self.a + self.b * root_hi
        return self.a + self.b * root_hi, self.a + self.b * root_lo

    def __str__(self) -> str:
        return format_point(self)

    def __repr__(self) -> str:
        return f"Separator({format_rational(self.a)}, {format_rational(self.b)})"


ExtendedPoint = Union[Fraction, Separator, Infinity]


def _coords(p) -> Tuple[Fraction, Fraction]:
    if isinstance(p, Fraction):
        return p, _ZERO
    if isinstance(p, Separator):
        return p.a, p.b
    if isinstance(p, int):
        return Fraction(p), _ZERO
    raise TypeError(f"not an extended point: {p!r}")


def compare(x: ExtendedPoint, y: ExtendedPoint) -> Ordering:
    """Total order on extended points; Fraction vs Separator is never EQUAL."""
    if type(x) is Fraction and type(y) is Fraction:
        return Ordering((x > y) - (x < y))
    xi = x.sign if isinstance(x, Infinity) else 0
    yi = y.sign if isinstance(y, Infinity) else 0
    if xi or yi:
        diff = xi - yi
        return Ordering((diff > 0) - (diff < 0))
    px, qx = _coords(x)
    py, qy = _coords(y)
    return Ordering(sign_with_sqrt2(px - py, qx - qy))


def is_finite(p: ExtendedPoint) -> bool:
    return not isinstance(p, Infinity)


def scale(p: ExtendedPoint, k) -> ExtendedPoint:
    """``p * k`` for a nonzero rational ``k``."""
    k = Fraction(k)
    if k == 0:
        raise ValueError("scale factor must be nonzero")
    if isinstance(p, Infinity):
        return p if k > 0 else -p
    if isinstance(p, Separator):
        return Separator(p.a * k, p.b * k)
    return Fraction(p) * k


def shift(p: ExtendedPoint, t) -> ExtendedPoint:
    """``p + t`` for a rational ``t``."""
    if isinstance(p, Infinity):
        return p
    if isinstance(p, Separator):
        return Separator(p.a + t, p.b)
    return Fraction(p) + t


def floor_point(p: ExtendedPoint) -> int:
    """Exact floor of a finite extended point."""
    if isinstance(p, Infinity):
        raise InfiniteQueryPoint(f"floor of {p} is undefined")
    if not isinstance(p, Separator):
        return floor(Fraction(p))
    lo, _ = p.enclosure(64 + p.b.numerator.bit_length())
    k = floor(lo)
    while Fraction(k + 1) <= p:
        k += 1
    while Fraction(k) > p:
        k -= 1
    return k


def ceil_point(p: ExtendedPoint) -> int:
    return -floor_point(scale(p, -1))


def to_decimal(p: ExtendedPoint, digits: int = 30) -> str:
    """Decimal rendering for reports only."""
    if isinstance(p, Infinity):
        return str(p)
    with mpmath.workdps(digits + 10):
        if isinstance(p, Separator):
            value = (mpmath.mpf(p.a.numerator) / p.a.denominator
                     + mpmath.mpf(p.b.numerator) / p.b.denominator * mpmath.sqrt(2))
        else:
            p = Fraction(p)
            value = mpmath.mpf(p.numerator) / p.denominator
        return mpmath.nstr(value, digits)


# ! --- Canonical text ---


def format_rational(r: Fraction) -> str:
    r = Fraction(r)
    return f"{r.numerator}/{r.denominator}"


def format_point(p: ExtendedPoint) -> str:
    if isinstance(p, Infinity):
        return str(p)
    if isinstance(p, Separator):
        return f"{format_rational(p.a)}+{format_rational(p.b)}*sqrt2"
    return format_rational(p)


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"`` or ``"p"``; decimals and exponents are rejected."""
    match = _RATIONAL_RE.match(str(text))
    if not match:
        raise ValueError(f"not a rational literal: {text!r}")
    numerator, denominator = match.group(1), match.group(2)
    if denominator is not None and int(denominator) == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(int(numerator), int(denominator or 1))


def parse_point(text: str) -> ExtendedPoint:
    text = text.strip()
    if text == "-inf":
        return NEG_INF
    if text == "+inf":
        return POS_INF
    match = _SEPARATOR_RE.match(text)
    if match:
        return Separator(parse_rational(match.group(1)), parse_rational(match.group(2)))
    return parse_rational(text)


# ! --- Intervals ---


@dataclass(frozen=True)
class OpenInterval:
    lo: ExtendedPoint
    hi: ExtendedPoint

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")

    def contains(self, p: ExtendedPoint) -> bool:
        """Strict membership; the query point must be finite."""
        if isinstance(p, Infinity):
            raise InfiniteQueryPoint(f"cannot test membership of {p}")
        return self.lo < p < self.hi

    __contains__ = contains

    def in_closure(self, p: ExtendedPoint) -> bool:
        return self.lo <= p <= self.hi

    def has_endpoint(self, p: ExtendedPoint) -> bool:
        return p == self.lo or p == self.hi

    def to_text(self) -> Tuple[str, str]:
        return format_point(self.lo), format_point(self.hi)

    def __str__(self) -> str:
        return f"({format_point(self.lo)}, {format_point(self.hi)})"


def contains(interval: OpenInterval, p: ExtendedPoint) -> bool:
    return interval.contains(p)


def _distance_lower_bound(p: Fraction, endpoint: ExtendedPoint) -> Fraction:
    if not isinstance(endpoint, Separator):
        return abs(p - Fraction(endpoint))
    bits = 64
    while True:
        lo, hi = endpoint.enclosure(bits)
        bound = p - hi if p > endpoint else lo - p
        if bound > 0:
            return bound
        bits *= 2


def gap_lower_bound(p: Fraction, interval: OpenInterval) -> Fraction:
    """Rational lower bound on the distance from ``p`` to the closure of
    ``interval``; exact unless the nearest endpoint is a separator."""
    if interval.in_closure(p):
        return _ZERO
    endpoint = interval.hi if p > interval.hi else interval.lo
    return _distance_lower_bound(p, endpoint)


# ! --- Ladders ---


class EndpointLadder:
    """Immutable snapshot of a ladder F_n."""

    __slots__ = ("_points", "level")

    def __init__(self, points: Iterable[ExtendedPoint], level: int) -> None:
        self._points = SortedList(points)
        self.level = level

    @property
    def points(self) -> Tuple[ExtendedPoint, ...]:
        return tuple(self._points)

    def __contains__(self, p) -> bool:
        return p in self._points

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self) -> Iterator[ExtendedPoint]:
        return iter(self._points)

    def enclosing_interval(self, p: ExtendedPoint) -> OpenInterval:
        """The interval of consecutive ladder points around ``p``."""
        if isinstance(p, Infinity) or p in self._points:
            raise LadderMember(f"{format_point(p)} is a ladder point at level {self.level}")
        i = self._points.bisect_left(p)
        return OpenInterval(self._points[i - 1], self._points[i])

    def intervals(self) -> Iterator[OpenInterval]:
        for lo, hi in zip(self._points, self._points[1:]):
            yield OpenInterval(lo, hi)


def enclosing_interval(ladder: EndpointLadder, p: ExtendedPoint) -> OpenInterval:
    return ladder.enclosing_interval(p)


class LadderHistory:
    """F_0 plus per-step deltas, with every past level reconstructible.

    All points ever added sit in one ``SortedList`` together with the level
    at which each entered, so queries against an earlier level walk outward
    over later points instead of rebuilding the ladder.
    """

    def __init__(self, base: Iterable[ExtendedPoint]) -> None:
        self._base = tuple(base)
        self._deltas = []
        self._points = SortedList(self._base)
        self._entry = {p: 0 for p in self._base}
        if len(self._entry) != len(self._base):
            raise ValueError("duplicate points in ladder seed")

    @property
    def base(self) -> Tuple[ExtendedPoint, ...]:
        return self._base

    @property
    def deltas(self) -> Tuple[Tuple[ExtendedPoint, ...], ...]:
        return tuple(self._deltas)

    @property
    def level(self) -> int:
        return len(self._deltas)

    def copy(self) -> "LadderHistory":
        clone = LadderHistory.__new__(LadderHistory)
        clone._base = self._base
        clone._deltas = list(self._deltas)
        clone._points = self._points.copy()
        clone._entry = dict(self._entry)
        return clone

    def extend(self, points: Iterable[ExtendedPoint]) -> None:
        delta = tuple(points)
        level = len(self._deltas) + 1
        for p in delta:
            if p in self._entry:
                raise ValueError(f"{format_point(p)} already entered the ladder")
            self._entry[p] = level
            self._points.add(p)
        self._deltas.append(delta)
        logging.debug(f"Ladder level {level}: +{[format_point(p) for p in delta]}")

    def __contains__(self, p) -> bool:
        return p in self._entry

    def __len__(self) -> int:
        return len(self._points)

    def entry_level(self, p: ExtendedPoint) -> Optional[int]:
        return self._entry.get(p)

    def size_at(self, n: int) -> int:
        self._check_level(n)
        return len(self._base) + sum(len(d) for d in self._deltas[:n])

    def _check_level(self, n: int) -> None:
        if n < 0 or n > len(self._deltas):
            raise LevelNotComputed(f"level {n} requested, {len(self._deltas)} recorded")

    def ladder_at(self, n: int) -> EndpointLadder:
        """Replay the base and deltas 1..n."""
        self._check_level(n)
        points = list(self._base)
        for delta in self._deltas[:n]:
            points.extend(delta)
        return EndpointLadder(points, n)

    def current(self) -> EndpointLadder:
        return EndpointLadder(self._points, self.level)

    def _walk(self, left: int, right: int, n: int) -> Tuple[ExtendedPoint, ExtendedPoint]:
        points, entry = self._points, self._entry
        while entry[points[left]] > n:
            left -= 1
        while entry[points[right]] > n:
            right += 1
        return points[left], points[right]

    def enclosing_at(self, p: ExtendedPoint, n: int) -> OpenInterval:
        """The G_{n+1} interval containing ``p``; ``p`` must not be in F_n."""
        self._check_level(n)
        if isinstance(p, Infinity) or self._entry.get(p, n + 1) <= n:
            raise LadderMember(f"{format_point(p)} is a ladder point at level {n}")
        i = self._points.bisect_left(p)
        right = i + 1 if i < len(self._points) and self._points[i] == p else i
        return OpenInterval(*self._walk(i - 1, right, n))

    def neighbors_at(self, p: ExtendedPoint, n: int) -> Tuple[ExtendedPoint, ExtendedPoint]:
        """Predecessor and successor of a level-n ladder point within F_n."""
        self._check_level(n)
        level = self._entry.get(p)
        if level is None or level > n:
            raise LevelNotComputed(f"{format_point(p)} is not in the level-{n} ladder")
        i = self._points.index(p)
        return self._walk(i - 1, i + 1, n)

    def points_inside(self, interval: OpenInterval) -> Iterator[ExtendedPoint]:
        return self._points.irange(interval.lo, interval.hi, inclusive=(False, False))

    def __iter__(self) -> Iterator[ExtendedPoint]:
        return iter(self._points)


def ladder_at(history: LadderHistory, n: int) -> EndpointLadder:
    return history.ladder_at(n)
