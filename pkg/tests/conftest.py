"""Shared fixtures and instance builders for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from fairdiv import AdditiveValuation, Allocation, Instance, ItemVector


def mk_instance(values, m) -> Instance:
    """Build an instance from per-agent value rows and a supply tuple."""
    valuations = tuple(AdditiveValuation(tuple(Fraction(v) for v in row)) for row in values)
    return Instance(
        n=len(valuations), t=len(m), m=ItemVector(tuple(m)), valuations=valuations
    )


def mk_alloc(instance: Instance, bundles) -> Allocation:
    return Allocation(instance, tuple(ItemVector(tuple(b)) for b in bundles))


@pytest.fixture
def intro_instance() -> Instance:
    """Two agents valuing the three item kinds at 10, 4, 5; one of each."""
    return mk_instance([(10, 4, 5), (10, 4, 5)], (1, 1, 1))


EPS = Fraction(7, 100)


@pytest.fixture
def table1_instance() -> Instance:
    """The three-agent, three-type fixture with the 7/100 value gaps."""
    return mk_instance(
        [
            (1, 2 - EPS, 0),
            (1 + 2 * EPS, 1 + EPS, 1),
            (0, 2 - EPS, 1),
        ],
        (9, 9, 11),
    )


@pytest.fixture
def table1_stuck(table1_instance) -> Allocation:
    """The EFX allocation of the fixture that cannot absorb its last item."""
    return mk_alloc(table1_instance, [(3, 5, 0), (6, 3, 0), (0, 0, 11)])


def random_valuation(rng: random.Random, t: int, max_value: int = 8) -> AdditiveValuation:
    while True:
        row = tuple(rng.randint(0, max_value) for _ in range(t))
        if any(row):
            return AdditiveValuation(tuple(Fraction(v) for v in row))


def random_rational_valuation(
    rng: random.Random, t: int, max_numerator: int = 100, max_denominator: int = 10
) -> AdditiveValuation:
    while True:
        row = tuple(
            Fraction(rng.randint(0, max_numerator), rng.randint(1, max_denominator))
            for _ in range(t)
        )
        if any(row):
            return AdditiveValuation(row)


def random_instance(
    rng: random.Random, n: int, t: int, m_max: int, max_value: int = 8
) -> Instance:
    return Instance(
        n=n,
        t=t,
        m=ItemVector(tuple(rng.randint(0, m_max) for _ in range(t))),
        valuations=tuple(random_valuation(rng, t, max_value) for _ in range(n)),
    )


def random_partial_allocation(rng: random.Random, instance: Instance) -> Allocation:
    """Assign each item to a random agent or leave it unallocated."""
    bundles = [[0] * instance.t for _ in range(instance.n)]
    for a in range(instance.t):
        for _ in range(instance.m[a]):
            who = rng.randrange(instance.n + 1)
            if who < instance.n:
                bundles[who][a] += 1
    return mk_alloc(instance, bundles)


def random_complete_allocation(rng: random.Random, instance: Instance) -> Allocation:
    bundles = [[0] * instance.t for _ in range(instance.n)]
    for a in range(instance.t):
        for _ in range(instance.m[a]):
            bundles[rng.randrange(instance.n)][a] += 1
    return mk_alloc(instance, bundles)


def shared_order_instance(
    rng: random.Random, n: int, t: int, m_max: int, max_numerator: int = 100
) -> Instance:
    """Instance whose agents all respect one hidden preference order on types.

    Per agent: draw t rational values, sort them, and lay them out along the
    hidden order (larger value to more preferred type).  Ties are allowed,
    so agents may admit more orders than the hidden one.
    """
    hidden = list(range(t))
    rng.shuffle(hidden)
    valuations = []
    for _ in range(n):
        while True:
            draws = sorted(
                (
                    Fraction(rng.randint(0, max_numerator), rng.randint(1, 10))
                    for _ in range(t)
                ),
                reverse=True,
            )
            if draws[0] > 0:
                break
        row = [Fraction(0)] * t
        for position, a in enumerate(hidden):
            row[a] = draws[position]
        valuations.append(AdditiveValuation(tuple(row)))
    return Instance(
        n=n,
        t=t,
        m=ItemVector(tuple(rng.randint(0, m_max) for _ in range(t))),
        valuations=tuple(valuations),
    )
