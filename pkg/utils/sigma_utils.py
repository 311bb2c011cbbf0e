"""Baseline functions with a prescribed F-sigma discontinuity set.

X is split into two dense classes A and B, and X minus the target set C is
the intersection of a decreasing chain of open sets F_1 = X ⊇ F_2 ⊇ ...
A point of class A leaving the chain after level n gets value 1/n, a point
of class B gets -1/n, and points that never leave get 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice
from typing import Callable, Dict, Iterator, List, Optional, Tuple, Union

from utils.error_utils import InvalidTarget, NotInX
from utils.exact_utils import OpenInterval, format_rational
from utils.set_utils import DyadicsIn, OddDenominatorIn, SetSpec

DEFAULT_DEPTH = 32

Level = Union[int, float]
INFINITE_LEVEL = math.inf


# ! --- Dense splits ---


def is_dyadic(x: Fraction) -> bool:
    d = Fraction(x).denominator
    return d & (d - 1) == 0


@dataclass(frozen=True)
class DenseSplit:
    """Two dense, disjoint classes "A" and "B".

    ``grids`` maps each class to a grid set kind contained in it, used to
    draw class members near a point without scanning all of X.
    """

    classifier: Callable[[Fraction], str]
    description: str
    grids: Dict[str, type] = field(default_factory=dict)

    def classify(self, x) -> str:
        return self.classifier(Fraction(x))

    def members_near(self, cls: str, lo: Fraction, hi: Fraction, limit: int = 64) -> Iterator[Fraction]:
        """Points of class ``cls`` in (lo, hi), least denominator first."""
        return islice(iter(self.grids[cls](lo, hi)), limit)


dyadic_split = DenseSplit(
    lambda x: "A" if is_dyadic(x) else "B",
    "dyadic",
    {"A": DyadicsIn, "B": OddDenominatorIn},
)

SPLITS: Dict[str, DenseSplit] = {"dyadic": dyadic_split}


# ! --- Chain recipes ---


@dataclass(frozen=True)
class FiniteTarget:
    """C is a finite set of points; F_n = X minus those points for n >= 2."""

    points: Tuple[Fraction, ...]
    tag = "finite"

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(sorted(Fraction(p) for p in self.points)))

    def level(self, x: Fraction) -> Level:
        return 1 if x in self.points else INFINITE_LEVEL

    def removed_at(self, n: int) -> List[Tuple[Fraction, Fraction]]:
        return [] if n < 2 else [(p, p) for p in self.points]

    def describe(self) -> str:
        return f"FiniteTarget({', '.join(format_rational(p) for p in self.points)})"


@dataclass(frozen=True)
class OpenIntervalTarget:
    """C = X ∩ (u, w); F_n removes [u + d/(2n), w - d/(2n)] with d = w - u."""

    u: Fraction
    w: Fraction
    tag = "interval"

    def __post_init__(self):
        object.__setattr__(self, "u", Fraction(self.u))
        object.__setattr__(self, "w", Fraction(self.w))

    def level(self, x: Fraction) -> Level:
        if not self.u < x < self.w:
            return INFINITE_LEVEL
        d = self.w - self.u
        e = min(x - self.u, self.w - x)
        # x stays in F_n exactly while e < d / (2n)
        return max(1, math.ceil(d / (2 * e)) - 1)

    def removed_at(self, n: int) -> List[Tuple[Fraction, Fraction]]:
        if n < 2:
            return []
        half = (self.w - self.u) / (2 * n)
        return [(self.u + half, self.w - half)]

    def describe(self) -> str:
        return f"OpenIntervalTarget({format_rational(self.u)}, {format_rational(self.w)})"


@dataclass(frozen=True)
class UserLevel:
    """A caller-supplied level function; nothing about it can be checked."""

    fn: Callable[[Fraction], Level]
    description: str = "user"
    tag = "user"

    def level(self, x: Fraction) -> Level:
        return self.fn(x)

    def removed_at(self, n: int) -> Optional[List[Tuple[Fraction, Fraction]]]:
        return None

    def describe(self) -> str:
        return f"UserLevel({self.description})"


Recipe = Union[FiniteTarget, OpenIntervalTarget, UserLevel]


@dataclass(frozen=True)
class OpenChain:
    recipe: Recipe
    X: SetSpec
    depth: int = DEFAULT_DEPTH
    caveats: Tuple[str, ...] = field(default=())

    @property
    def rendered(self) -> bool:
        return not isinstance(self.recipe, UserLevel)

    def level(self, x) -> Level:
        x = Fraction(x)
        if not self.X.member(x):
            raise NotInX(f"{format_rational(x)} is not a member of {self.X.describe()}")
        return self.recipe.level(x)

    def removed_at(self, n: int):
        """Closed intervals making up X minus F_n."""
        return self.recipe.removed_at(n)

    def renderings(self) -> Dict[int, List[Tuple[Fraction, Fraction]]]:
        return {n: self.removed_at(n) for n in range(2, self.depth + 1)}

    def in_rendered(self, x, n: int) -> bool:
        """x ∈ F_n according to the rendered removed set."""
        x = Fraction(x)
        return not any(lo <= x <= hi for lo, hi in self.removed_at(n))

    def radius(self, x, n: int) -> Optional[Fraction]:
        """Distance from x to the level-n removed set; ``None`` when nothing is removed."""
        x = Fraction(x)
        distances = []
        for lo, hi in self.removed_at(n):
            if lo <= x <= hi:
                return Fraction(0)
            distances.append(lo - x if x < lo else x - hi)
        return min(distances) if distances else None

    def describe(self) -> str:
        return self.recipe.describe()


def chain_from_target(recipe: Recipe, X: SetSpec, depth: int = DEFAULT_DEPTH) -> OpenChain:
    if isinstance(recipe, OpenIntervalTarget) and not recipe.u < recipe.w:
        raise InvalidTarget(
            f"interval target needs u < w, got ({format_rational(recipe.u)}, {format_rational(recipe.w)})"
        )
    if isinstance(recipe, FiniteTarget):
        outside = [p for p in recipe.points if not X.member(p)]
        if outside:
            raise InvalidTarget(f"target point {format_rational(outside[0])} is not in {X.describe()}")
    caveats = ()
    if isinstance(recipe, UserLevel):
        caveats = (f"{recipe.describe()} is not validated",)
        logging.warning(f"Chain from {recipe.describe()} cannot be validated")
    if depth < 2:
        raise InvalidTarget("rendered depth must be at least 2")
    return OpenChain(recipe, X, depth, caveats)


# ! --- Values ---


@dataclass(frozen=True)
class SigmaConfig:
    X: SetSpec
    split: DenseSplit
    chain: OpenChain


def sigma_value(config: SigmaConfig, x) -> Fraction:
    x = Fraction(x)
    level = config.chain.level(x)
    if level == INFINITE_LEVEL:
        return Fraction(0)
    magnitude = Fraction(1, level)
    return magnitude if config.split.classify(x) == "A" else -magnitude


@dataclass(frozen=True)
class SigmaRow:
    x: Fraction
    cls: str
    level: Level
    value: Fraction

    def to_row(self) -> Dict[str, str]:
        return {
            "x": format_rational(self.x),
            "class": self.cls,
            "level": "inf" if self.level == INFINITE_LEVEL else str(self.level),
            "value": format_rational(self.value),
        }


def sigma_table(config: SigmaConfig, count: int) -> List[SigmaRow]:
    rows = []
    for x in config.X.prefix(count):
        rows.append(SigmaRow(x, config.split.classify(x), config.chain.level(x), sigma_value(config, x)))
    logging.info(f"Computed {len(rows)} sigma values for {config.chain.describe()}")
    return rows


def in_target(config: SigmaConfig, x) -> bool:
    """x ∈ C by direct membership, independent of the level function."""
    recipe = config.chain.recipe
    x = Fraction(x)
    if isinstance(recipe, OpenIntervalTarget):
        return OpenInterval(recipe.u, recipe.w).contains(x)
    if isinstance(recipe, FiniteTarget):
        return x in recipe.points
    return config.chain.level(x) != INFINITE_LEVEL
