"""Brute-force ground truth for small instances.

Enumerates every complete allocation of an instance (per item type, the
ways to split ``m_a`` items among ``n`` agents are the compositions of
``m_a`` into ``n`` ordered nonnegative parts, ``C(m_a + n - 1, n - 1)`` of
them, and types are independent) and decides EF/EF1/EFX existence by
exhaustion.  Everything here is desk-scale by design: a hard cap refuses
oversized enumerations outright, because a silently truncated oracle would
lie.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator

from .core import Allocation, Instance, ItemVector
from .errors import EnumerationCapError, PreconditionError
from .fairness import CRITERIA, first_violation

DEFAULT_CAP = 10_000_000


@dataclass(frozen=True)
class EnumerationPlan:
    """Size accounting for an enumeration, checked before any work runs."""

    instance: Instance
    per_type_counts: tuple[int, ...]
    total: int
    cap: int

    @classmethod
    def for_instance(cls, instance: Instance, cap: int = DEFAULT_CAP) -> "EnumerationPlan":
        counts = tuple(
            math.comb(m_a + instance.n - 1, instance.n - 1) for m_a in instance.m
        )
        return cls(instance, counts, math.prod(counts), cap)

    def require_within_cap(self) -> None:
        if self.total > self.cap:
            raise EnumerationCapError(
                f"enumeration would visit {self.total} complete allocations, "
                f"cap is {self.cap}"
            )


def _complete_count_matrices(instance: Instance) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All complete allocations as raw count matrices, flattened-lex ascending."""

    def rec(agent: int, remaining: tuple[int, ...], acc: tuple) -> Iterator:
        if agent == instance.n - 1:
            yield (*acc, remaining)
            return
        for counts in product(*(range(r + 1) for r in remaining)):
            left = tuple(r - c for r, c in zip(remaining, counts))
            yield from rec(agent + 1, left, (*acc, counts))

    return rec(0, instance.m.counts, ())


def enumerate_complete(
    instance: Instance, cap: int = DEFAULT_CAP
) -> Iterator[Allocation]:
    """Yield every complete allocation exactly once.

    Order is ascending lexicographic on the flattened bundle matrix
    ``(x_{0,0}, ..., x_{0,t-1}, x_{1,0}, ...)``, so "the first allocation
    satisfying P" is well defined.  Refuses (before yielding anything) when
    the closed-form count exceeds ``cap``.
    """
    EnumerationPlan.for_instance(instance, cap).require_within_cap()
    return (
        Allocation(instance, tuple(ItemVector(row) for row in matrix))
        for matrix in _complete_count_matrices(instance)
    )


def exists_fair(
    instance: Instance, criterion: str, cap: int = DEFAULT_CAP
) -> Allocation | None:
    """First complete allocation (in enumeration order) meeting the criterion.

    Returns None when exhaustive search proves no complete allocation is
    EF/EF1/EFX (per ``criterion``) for this instance.
    """
    if criterion not in CRITERIA:
        raise PreconditionError(f"unknown criterion {criterion!r}")
    EnumerationPlan.for_instance(instance, cap).require_within_cap()
    for matrix in _complete_count_matrices(instance):
        if first_violation(instance, matrix, criterion) is None:
            return Allocation(instance, tuple(ItemVector(row) for row in matrix))
    return None
