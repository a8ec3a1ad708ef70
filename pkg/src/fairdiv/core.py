"""Exact arithmetic, item multisets, valuations, and problem instances.

Items come in ``t`` interchangeable types.  A bundle (multiset of items) is a
vector of nonnegative multiplicities, one per type, so bundles and points of
the integer lattice correspond one-to-one.  Agents value bundles additively:
agent ``i`` assigns ``sum(v_i[a] * x[a] for a)`` to a bundle ``x``.

All values are exact rationals (`fractions.Fraction`); there is no floating
point anywhere in the package, so value ties are detected exactly.  Agents
and types are 0-indexed, both in memory and in the JSON formats.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterator

from .errors import (
    DimensionMismatchError,
    ItemUnderflowError,
    SchemaError,
)

#: All exact values in the package are `fractions.Fraction` instances, which
#: already guarantee a canonical reduced form with a positive denominator.
Rational = Fraction

_RATIONAL_RE = re.compile(r"^(-?\d+)/([1-9]\d*)$")


def parse_rational(value: int | str | Fraction) -> Fraction:
    """Parse a JSON-level rational: an int, or a string ``"p/q"`` with q > 0.

    Floats are rejected; they have no place in an exact-arithmetic format.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise SchemaError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        match = _RATIONAL_RE.match(value)
        if match is None:
            raise SchemaError(f"malformed rational string: {value!r}")
        return Fraction(int(match.group(1)), int(match.group(2)))
    raise SchemaError(f"not a rational: {value!r}")


def format_rational(value: Fraction) -> int | str:
    """Inverse of :func:`parse_rational`; round-trips bit-exactly."""
    if value.denominator == 1:
        return int(value)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class ItemVector:
    """A multiset of typed items, stored as per-type multiplicities.

    ``counts[a]`` is the number of items of type ``a``.  Instances are
    immutable; every operation returns a new vector.
    """

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(self.counts)
        for c in counts:
            if not isinstance(c, int) or isinstance(c, bool):
                raise SchemaError(f"item count must be an int, got {c!r}")
            if c < 0:
                raise SchemaError(f"item count must be nonnegative, got {c}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def zero(cls, t: int) -> "ItemVector":
        return cls((0,) * t)

    def __len__(self) -> int:
        return len(self.counts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.counts)

    def __getitem__(self, a: int) -> int:
        return self.counts[a]

    @property
    def size(self) -> int:
        """Total number of items in the multiset."""
        return sum(self.counts)

    def contains_type(self, a: int) -> bool:
        """True iff an item of type ``a`` is present."""
        return self.counts[a] > 0

    def add_item(self, a: int) -> "ItemVector":
        """Return this multiset with one extra item of type ``a``."""
        if not 0 <= a < len(self.counts):
            raise DimensionMismatchError(f"type index {a} out of range")
        c = list(self.counts)
        c[a] += 1
        return ItemVector(tuple(c))

    def remove_item(self, a: int) -> "ItemVector":
        """Return this multiset with one item of type ``a`` removed."""
        if not 0 <= a < len(self.counts):
            raise DimensionMismatchError(f"type index {a} out of range")
        if self.counts[a] == 0:
            raise ItemUnderflowError(f"no item of type {a} to remove")
        c = list(self.counts)
        c[a] -= 1
        return ItemVector(tuple(c))

    def issubset(self, other: "ItemVector") -> bool:
        """Componentwise <= (multiset inclusion)."""
        _check_same_length(self, other)
        return all(x <= y for x, y in zip(self.counts, other.counts))

    def is_strict_subset(self, other: "ItemVector") -> bool:
        """Multiset inclusion with at least one strictly smaller count."""
        return self.issubset(other) and self.counts != other.counts

    def __add__(self, other: "ItemVector") -> "ItemVector":
        """Multiset sum: componentwise addition of multiplicities."""
        _check_same_length(self, other)
        return ItemVector(tuple(x + y for x, y in zip(self.counts, other.counts)))

    def difference(self, other: "ItemVector") -> "ItemVector":
        """Multiset difference: componentwise ``max(x - y, 0)``."""
        _check_same_length(self, other)
        return ItemVector(tuple(max(x - y, 0) for x, y in zip(self.counts, other.counts)))

    def strict_subsets(self) -> Iterator["ItemVector"]:
        """Yield every strict sub-multiset, in ascending lexicographic order.

        The number of vectors yielded is ``prod(c + 1 for c in counts) - 1``.
        """
        for counts in product(*(range(c + 1) for c in self.counts)):
            if counts != self.counts:
                yield ItemVector(counts)


def _check_same_length(x: ItemVector, y: ItemVector) -> None:
    if len(x) != len(y):
        raise DimensionMismatchError(f"vector lengths differ: {len(x)} vs {len(y)}")


@dataclass(frozen=True)
class AdditiveValuation:
    """An agent's per-type values, inducing an additive bundle valuation.

    Every per-type value is a nonnegative rational and at least one is
    positive (an agent indifferent to everything would never envy and only
    degenerates the algorithms).
    """

    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        values = tuple(Fraction(v) for v in self.values)
        if not values:
            raise SchemaError("valuation must cover at least one item type")
        if any(v < 0 for v in values):
            raise SchemaError("per-type values must be nonnegative")
        if all(v == 0 for v in values):
            raise SchemaError("at least one per-type value must be positive")
        object.__setattr__(self, "values", values)

    @property
    def t(self) -> int:
        return len(self.values)

    def __getitem__(self, a: int) -> Fraction:
        return self.values[a]

    def value(self, x: ItemVector) -> Fraction:
        """Exact value of a bundle: ``sum(values[a] * x[a])``."""
        if len(x) != len(self.values):
            raise DimensionMismatchError(
                f"valuation has {len(self.values)} types, bundle has {len(x)}"
            )
        return sum((v * c for v, c in zip(self.values, x.counts)), Fraction(0))

    @cached_property
    def scaled(self) -> tuple[int, ...]:
        """The values scaled by the lcm of their denominators.

        Scaling a single agent's valuation by a positive constant changes no
        comparison that agent ever makes, so envy tests may use these integer
        values instead of Fractions.  This is only a fast path: reported
        values always come from :meth:`value`.
        """
        lcm = math.lcm(*(v.denominator for v in self.values))
        return tuple(int(v * lcm) for v in self.values)


def value(valuation: AdditiveValuation, x: ItemVector) -> Fraction:
    """Module-level alias for :meth:`AdditiveValuation.value`."""
    return valuation.value(x)


@dataclass(frozen=True)
class Instance:
    """A fair-division problem: ``n`` agents, ``t`` item types, supply ``m``."""

    n: int
    t: int
    m: ItemVector
    valuations: tuple[AdditiveValuation, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise SchemaError(f"n must be a positive int, got {self.n!r}")
        if not isinstance(self.t, int) or self.t < 1:
            raise SchemaError(f"t must be a positive int, got {self.t!r}")
        object.__setattr__(self, "valuations", tuple(self.valuations))
        if len(self.m) != self.t:
            raise DimensionMismatchError(
                f"supply vector has {len(self.m)} types, expected {self.t}"
            )
        if len(self.valuations) != self.n:
            raise DimensionMismatchError(
                f"got {len(self.valuations)} valuations, expected {self.n}"
            )
        for v in self.valuations:
            if v.t != self.t:
                raise DimensionMismatchError(
                    f"valuation has {v.t} types, expected {self.t}"
                )


@dataclass(frozen=True)
class Allocation:
    """Bundles for each agent; possibly partial (items may stay unallocated).

    The componentwise sum of the bundles never exceeds the instance supply;
    the allocation is complete when it equals the supply for every type.
    """

    instance: Instance
    bundles: tuple[ItemVector, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bundles", tuple(self.bundles))
        inst = self.instance
        if len(self.bundles) != inst.n:
            raise DimensionMismatchError(
                f"got {len(self.bundles)} bundles, expected {inst.n}"
            )
        for b in self.bundles:
            if len(b) != inst.t:
                raise DimensionMismatchError(
                    f"bundle has {len(b)} types, expected {inst.t}"
                )
        for a in range(inst.t):
            total = sum(b[a] for b in self.bundles)
            if total > inst.m[a]:
                raise SchemaError(
                    f"type {a} over-allocated: {total} bundled, supply {inst.m[a]}"
                )

    @classmethod
    def empty(cls, instance: Instance) -> "Allocation":
        return cls(instance, (ItemVector.zero(instance.t),) * instance.n)

    @cached_property
    def allocated(self) -> ItemVector:
        return ItemVector(
            tuple(sum(b[a] for b in self.bundles) for a in range(self.instance.t))
        )

    @property
    def unallocated(self) -> ItemVector:
        allocated = self.allocated
        return ItemVector(
            tuple(m - x for m, x in zip(self.instance.m.counts, allocated.counts))
        )

    @property
    def is_complete(self) -> bool:
        return self.allocated.counts == self.instance.m.counts

    def replace_bundle(self, i: int, bundle: ItemVector) -> "Allocation":
        new = list(self.bundles)
        new[i] = bundle
        return Allocation(self.instance, tuple(new))

    def give(self, i: int, a: int) -> "Allocation":
        """Give one unallocated item of type ``a`` to agent ``i``."""
        if self.unallocated[a] == 0:
            raise ItemUnderflowError(f"no unallocated item of type {a}")
        return self.replace_bundle(i, self.bundles[i].add_item(a))

    def value_of(self, observer: int, bundle_owner: int) -> Fraction:
        """``V_observer(bundle of bundle_owner)``, exactly."""
        return self.instance.valuations[observer].value(self.bundles[bundle_owner])


# --- JSON wire formats ------------------------------------------------------
#
# Instance:   {"n": int, "t": int, "m": [int], "valuations": [[int|"p/q"]]}
# Allocation: {"bundles": [[int]]}
#
# Parsing is strict: unknown keys, missing keys, and wrong shapes are all
# rejected with SchemaError.


def _require_keys(data: dict, keys: set[str], what: str) -> None:
    if not isinstance(data, dict):
        raise SchemaError(f"{what} must be a JSON object, got {type(data).__name__}")
    actual = set(data)
    if actual != keys:
        unknown = sorted(actual - keys)
        missing = sorted(keys - actual)
        parts = []
        if unknown:
            parts.append(f"unknown keys {unknown}")
        if missing:
            parts.append(f"missing keys {missing}")
        raise SchemaError(f"{what}: " + ", ".join(parts))


def _int_list(values: object, what: str) -> tuple[int, ...]:
    if not isinstance(values, list):
        raise SchemaError(f"{what} must be a list")
    for v in values:
        if not isinstance(v, int) or isinstance(v, bool):
            raise SchemaError(f"{what} entries must be ints, got {v!r}")
    return tuple(values)


def instance_from_json(data: dict) -> Instance:
    """Parse the instance wire format, strictly."""
    _require_keys(data, {"n", "t", "m", "valuations"}, "instance")
    n, t = data["n"], data["t"]
    if not isinstance(n, int) or not isinstance(t, int):
        raise SchemaError("n and t must be ints")
    m = ItemVector(_int_list(data["m"], "m"))
    raw = data["valuations"]
    if not isinstance(raw, list):
        raise SchemaError("valuations must be a list of lists")
    valuations = []
    for row in raw:
        if not isinstance(row, list):
            raise SchemaError("each valuation must be a list")
        valuations.append(AdditiveValuation(tuple(parse_rational(v) for v in row)))
    return Instance(n=n, t=t, m=m, valuations=tuple(valuations))


def instance_to_json(instance: Instance) -> dict:
    return {
        "n": instance.n,
        "t": instance.t,
        "m": list(instance.m.counts),
        "valuations": [
            [format_rational(v) for v in val.values] for val in instance.valuations
        ],
    }


def allocation_from_json(instance: Instance, data: dict) -> Allocation:
    """Parse the allocation wire format against a known instance, strictly."""
    _require_keys(data, {"bundles"}, "allocation")
    raw = data["bundles"]
    if not isinstance(raw, list):
        raise SchemaError("bundles must be a list of lists")
    bundles = tuple(ItemVector(_int_list(row, "bundle")) for row in raw)
    return Allocation(instance, bundles)


def allocation_to_json(alloc: Allocation) -> dict:
    return {"bundles": [list(b.counts) for b in alloc.bundles]}
