"""Constructive EFX allocators and the instance dispatcher.

Three allocation procedures, each guaranteed to return a complete EFX
allocation on its instance class:

* ``allocate_single_type``: one item type, equal shares, remainder spread
  one item each over the lowest-index agents.
* ``allocate_identical_prefs``: all agents share a valid preference order
  on types: repeatedly de-cycle the envy graph and hand the most preferred
  unallocated item to a source.  EFX is an invariant of every placement.
* ``allocate_two_types``: two item types, arbitrary additive valuations;
  the four-step procedure (round-robin of favorites; top-up of the agents
  keenest on the scarce type; round-robin of the abundant type to everyone
  else until one of the topped-up agents envies; final round-robin to all).

``allocate`` routes an instance to the first applicable procedure and
refuses instances outside all three classes (three or more types with
conflicting preferences).

Tie conventions, fixed for reproducibility: agents who value both of two
types equally count as preferring the later type; ratio sorting breaks ties
by ascending agent index; sources are chosen by lowest index.  Step-by-step
EFX assertions run under ``assert`` and vanish with ``python -O``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import Allocation, Instance, ItemVector
from .errors import PreconditionError, UnsupportedInstanceError
from .fairness import check_ef, check_efx, decycle, envy_graph, find_source

ROUTE_SINGLE_TYPE = "t1"
ROUTE_IDENTICAL_PREFS = "alg1"
ROUTE_TWO_TYPES = "alg2"

STEP3_ENVY = "envy"
STEP3_EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class PreferenceOrder:
    """A ranking of item types: ``rank[a] > rank[b]`` means ``a`` is preferred.

    ``rank`` is a permutation of ``0..t-1``.  The order is *valid* for an
    agent when every strict value comparison is respected; value ties leave
    the relative order free, so an agent can admit many valid orders.
    """

    rank: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.rank) != list(range(len(self.rank))):
            raise PreconditionError(f"rank must be a permutation, got {self.rank}")

    def is_valid_for(self, valuation) -> bool:
        t = len(self.rank)
        return all(
            self.rank[a] > self.rank[b]
            for a in range(t)
            for b in range(t)
            if valuation[a] > valuation[b]
        )

    def most_preferred_available(self, unallocated) -> int:
        """Type of the most preferred item still unallocated."""
        available = [a for a in range(len(self.rank)) if unallocated[a] > 0]
        if not available:
            raise PreconditionError("no unallocated items")
        return max(available, key=lambda a: self.rank[a])


def common_preference_order(instance: Instance) -> PreferenceOrder | None:
    """A preference order valid for every agent, or None if there is none.

    Build a digraph on types with an edge ``a -> b`` whenever some agent
    strictly prefers ``a`` to ``b``; a shared order exists iff this digraph
    is acyclic, and any topological order is then valid for everyone.  Ties
    are broken toward ascending type index, most preferred first.
    """
    t = instance.t
    succ: list[set[int]] = [set() for _ in range(t)]
    for valuation in instance.valuations:
        for a in range(t):
            for b in range(t):
                if valuation[a] > valuation[b]:
                    succ[a].add(b)
    indeg = [0] * t
    for a in range(t):
        for b in succ[a]:
            indeg[b] += 1
    topo: list[int] = []
    remaining = set(range(t))
    while remaining:
        ready = [a for a in sorted(remaining) if indeg[a] == 0]
        if not ready:
            return None  # preference cycle: no shared order
        a = ready[0]
        remaining.remove(a)
        topo.append(a)
        for b in succ[a]:
            indeg[b] -= 1
    rank = [0] * t
    for position, a in enumerate(topo):
        rank[a] = t - 1 - position
    return PreferenceOrder(tuple(rank))


def allocate_single_type(instance: Instance) -> Allocation:
    """Complete EFX allocation for t = 1: equal shares plus spread remainder."""
    if instance.t != 1:
        raise PreconditionError(f"allocate_single_type requires t = 1, got t = {instance.t}")
    m = instance.m[0]
    base, extra = divmod(m, instance.n)
    bundles = tuple(
        ItemVector((base + 1,)) if i < extra else ItemVector((base,))
        for i in range(instance.n)
    )
    alloc = Allocation(instance, bundles)
    assert alloc.is_complete and check_efx(alloc).satisfied
    return alloc


def allocate_identical_prefs(instance: Instance) -> Allocation:
    """Complete EFX allocation when all agents share a preference order.

    Items are handed out from most preferred type to least: each step
    de-cycles the envy graph and gives the next item to a source.  Because
    the new item is weakly the least preferred item allocated so far, any
    fresh envy toward the source vanishes on removing it, keeping the
    allocation EFX after every single placement.
    """
    order = common_preference_order(instance)
    if order is None:
        raise PreconditionError("agents do not share a valid preference order")
    alloc = Allocation.empty(instance)
    unallocated = list(instance.m.counts)
    while any(unallocated):
        alloc = decycle(alloc)
        source = find_source(envy_graph(alloc))
        a = order.most_preferred_available(unallocated)
        alloc = alloc.give(source, a)
        unallocated[a] -= 1
        assert check_efx(alloc).satisfied, "EFX placement invariant broken"
    return alloc


@dataclass(frozen=True)
class Alg2Trace:
    """Execution record of the two-type allocator (types 0-indexed).

    ``p``/``q``/``r`` count rounds in steps 1, 3 and 4 (0 when a step never
    ran).  ``a`` is the type that ran short after step 1, ``b`` the other;
    ``n_a_plus`` is the top-up group; ``step3_case`` records how step 3
    ended.  Fields from steps never reached stay None.
    """

    p: int
    a: int | None
    b: int | None
    n_a_plus: tuple[int, ...] | None
    q: int
    step3_case: str | None
    r: int

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "a": self.a,
            "b": self.b,
            "n_a_plus": list(self.n_a_plus) if self.n_a_plus is not None else None,
            "q": self.q,
            "step3_case": self.step3_case,
            "r": self.r,
        }


def allocate_two_types(instance: Instance) -> tuple[Allocation, Alg2Trace]:
    """Complete EFX allocation for t = 2 plus its execution trace.

    Step 1: while a full round is possible, give every agent one item of
    their preferred type (value ties count as preferring the second type).
    Step 2: the type ``a`` that can no longer serve its whole group goes,
    one item each, to the ``u_a`` agents with the largest ratio
    ``v_i(a)/v_i(b)`` (exact comparison; zero denominators sort as equal
    infinities; residual ties by ascending index), the group ``N_a^+``.
    Step 3: remaining items (all of type ``b``) go round-robin to everyone
    outside ``N_a^+``, stopping after a round if some member of ``N_a^+``
    envies anyone, or mid-round when items run out.
    Step 4: remaining items go round-robin to all agents, ``N_a^+`` first
    within each round, until items run out.

    The allocation at the end of every step is EFX (asserted), and when
    step 3 stops on envy, no agent outside ``N_a^+`` envies any member of
    ``N_a^+`` (asserted).
    """
    if instance.t != 2:
        raise PreconditionError(f"allocate_two_types requires t = 2, got t = {instance.t}")
    n = instance.n
    vals = instance.valuations
    prefers_0 = {i for i in range(n) if vals[i][0] > vals[i][1]}
    groups = (
        sorted(prefers_0),
        [i for i in range(n) if i not in prefers_0],
    )
    bundles = [[0, 0] for _ in range(n)]
    u = list(instance.m.counts)

    def snap() -> Allocation:
        return Allocation(instance, tuple(ItemVector(tuple(row)) for row in bundles))

    # Step 1: full rounds of everyone's preferred type.
    p = 0
    while u[0] >= len(groups[0]) and u[1] >= len(groups[1]):
        p += 1
        for i in range(n):
            favorite = 0 if i in prefers_0 else 1
            bundles[i][favorite] += 1
            u[favorite] -= 1
    assert p == min(instance.m[k] // len(groups[k]) for k in (0, 1) if groups[k])
    assert check_ef(snap()).satisfied, "step 1 must end envy-free"

    if u == [0, 0]:
        return snap(), Alg2Trace(p, None, None, None, 0, None, 0)

    # Step 2: hand the scarce type to those who want it most.
    if u[0] < len(groups[0]):
        a, b = 0, 1
    else:
        a, b = 1, 0

    def ratio(i: int) -> Fraction | float:
        return Fraction(vals[i][a], vals[i][b]) if vals[i][b] else math.inf

    ranked = sorted(range(n), key=ratio, reverse=True)
    n_a_plus = tuple(sorted(ranked[: u[a]]))
    assert set(n_a_plus) <= set(groups[a]), "top-up group must prefer its type"
    for i in n_a_plus:
        bundles[i][a] += 1
        u[a] -= 1
    assert u[a] == 0
    assert check_efx(snap()).satisfied, "step 2 must end EFX"

    if u[b] == 0:
        return snap(), Alg2Trace(p, a, b, n_a_plus, 0, None, 0)

    # Step 3: round-robin type b to the outsiders until an insider envies.
    insiders = list(n_a_plus)
    outsiders = [i for i in range(n) if i not in set(n_a_plus)]
    q = 0
    step3_case = None
    while step3_case is None:
        graph = envy_graph(snap())
        if any(graph.out_degree(j) > 0 for j in insiders):
            step3_case = STEP3_ENVY
            break
        q += 1
        for i in outsiders:
            bundles[i][b] += 1
            u[b] -= 1
            if u[b] == 0:
                step3_case = STEP3_EXHAUSTED
                break
    assert q >= 1, "step 3 always completes at least one round"
    assert check_efx(snap()).satisfied, "step 3 must end EFX"
    if step3_case == STEP3_EXHAUSTED:
        alloc = snap()
        assert alloc.is_complete
        return alloc, Alg2Trace(p, a, b, n_a_plus, q, step3_case, 0)

    # Step 3 ended on envy: the insiders' lead is spent, nobody envies them.
    assert not any(
        (i, j) in graph.edges for i in outsiders for j in insiders
    ), "an agent outside the top-up group envies a member of it"

    # Step 4: round-robin type b to everyone, insiders first.
    r = 0
    while u[b] > 0:
        r += 1
        for i in insiders + outsiders:
            bundles[i][b] += 1
            u[b] -= 1
            if u[b] == 0:
                break
    alloc = snap()
    assert alloc.is_complete
    assert check_efx(alloc).satisfied, "step 4 must end EFX"
    return alloc, Alg2Trace(p, a, b, n_a_plus, q, step3_case, r)


def route_for(instance: Instance) -> str:
    """Which allocator ``allocate`` would use for this instance."""
    if instance.t == 1:
        return ROUTE_SINGLE_TYPE
    if common_preference_order(instance) is not None:
        return ROUTE_IDENTICAL_PREFS
    if instance.t == 2:
        return ROUTE_TWO_TYPES
    raise UnsupportedInstanceError(
        f"no allocator covers t = {instance.t} item types with conflicting "
        "preference orders; supported classes: t = 1, a shared preference "
        "order, or t = 2"
    )


def allocate(instance: Instance) -> Allocation:
    """Dispatch to the first applicable allocator; complete EFX output."""
    route = route_for(instance)
    if route == ROUTE_SINGLE_TYPE:
        return allocate_single_type(instance)
    if route == ROUTE_IDENTICAL_PREFS:
        return allocate_identical_prefs(instance)
    return allocate_two_types(instance)[0]
