"""Envy checking (EF, EF1, EFX) with witnesses, envy graphs, and de-cycling.

Agent ``i`` envies agent ``j`` when ``V_i(X_i) < V_i(X_j)``.  The three
criteria differ in what must remove the envy:

* EF:  nothing may need removing; no envy at all.
* EF1: removing *some* item from the envied bundle removes the envy.
* EFX: removing *any* item from the envied bundle removes the envy.  For
  additive valuations it is enough to test the observer's least-valued item
  type present in the envied bundle.

The envy graph has an edge ``i -> j`` per envious pair.  Rotating bundles
along a directed cycle (each agent takes the bundle it envies) strictly
improves every agent on the cycle and preserves EFX, so repeated rotation
("de-cycling") yields an acyclic graph, which always has a source: an agent
nobody envies.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .core import Allocation, format_rational
from .errors import PreconditionError

EF = "ef"
EF1 = "ef1"
EFX = "efx"
CRITERIA = (EF, EF1, EFX)


@dataclass(frozen=True)
class FairnessWitness:
    """One concrete violation: re-evaluating it reproduces the failure.

    ``bundle_value`` is the observer's value for the offending bundle: the
    envied bundle itself for EF, or the envied bundle minus one item of
    ``removed_type`` for EF1/EFX.
    """

    observer: int
    envied: int
    removed_type: int | None
    observer_value: Fraction
    bundle_value: Fraction

    def to_json(self) -> dict:
        return {
            "observer": self.observer,
            "envied": self.envied,
            "removed_type": self.removed_type,
            "observer_value": format_rational(self.observer_value),
            "bundle_value": format_rational(self.bundle_value),
        }


@dataclass(frozen=True)
class FairnessReport:
    criterion: str
    satisfied: bool
    witness: FairnessWitness | None

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "satisfied": self.satisfied,
            "witness": self.witness.to_json() if self.witness else None,
        }


def _dot(weights: tuple[int, ...], counts: tuple[int, ...]) -> int:
    return sum(w * c for w, c in zip(weights, counts))


def envies(i: int, j: int, alloc: Allocation) -> bool:
    """True iff agent ``i`` strictly prefers agent ``j``'s bundle to their own."""
    if i == j:
        raise PreconditionError("an agent cannot envy itself")
    si = alloc.instance.valuations[i].scaled
    return _dot(si, alloc.bundles[i].counts) < _dot(si, alloc.bundles[j].counts)


def check_ef(alloc: Allocation) -> FairnessReport:
    return _check(alloc, EF)


def check_ef1(alloc: Allocation) -> FairnessReport:
    return _check(alloc, EF1)


def check_efx(alloc: Allocation) -> FairnessReport:
    return _check(alloc, EFX)


def first_violation(
    instance, bundles, criterion: str
) -> tuple[int, int, int | None] | None:
    """First failing (observer, envied, removed-type) triple, or None.

    Works on raw count tuples so enumeration-heavy callers (the oracle) can
    skip Allocation construction.  Pairs and removal types are scanned in
    ascending lexicographic order, so the answer is deterministic.  For EF1
    the reported removal is the observer's highest-valued present type (ties
    to the lowest index): if even that removal leaves envy, none can help.
    """
    if criterion not in CRITERIA:
        raise PreconditionError(f"unknown criterion {criterion!r}")
    t = instance.t
    for i in range(instance.n):
        si = instance.valuations[i].scaled
        own = _dot(si, bundles[i])
        for j in range(instance.n):
            if i == j:
                continue
            bj = bundles[j]
            other = _dot(si, bj)
            if own >= other:
                continue
            # Envy implies other > own >= 0, so bundle j is nonempty.
            if criterion == EF:
                return (i, j, None)
            present = [a for a in range(t) if bj[a] > 0]
            if criterion == EFX:
                if own >= other - min(si[a] for a in present):
                    continue
                for a in present:
                    if own < other - si[a]:
                        return (i, j, a)
            else:  # EF1
                best = present[0]
                for a in present[1:]:
                    if si[a] > si[best]:
                        best = a
                if own < other - si[best]:
                    return (i, j, best)
    return None


def _check(alloc: Allocation, criterion: str) -> FairnessReport:
    bundles = [b.counts for b in alloc.bundles]
    violation = first_violation(alloc.instance, bundles, criterion)
    if violation is None:
        return FairnessReport(criterion, True, None)
    i, j, removed = violation
    return _failure(alloc, criterion, i, j, removed)


def _failure(
    alloc: Allocation, criterion: str, i: int, j: int, removed: int | None
) -> FairnessReport:
    valuation = alloc.instance.valuations[i]
    bundle_value = valuation.value(alloc.bundles[j])
    if removed is not None:
        bundle_value -= valuation[removed]
    witness = FairnessWitness(
        observer=i,
        envied=j,
        removed_type=removed,
        observer_value=valuation.value(alloc.bundles[i]),
        bundle_value=bundle_value,
    )
    return FairnessReport(criterion, False, witness)


@dataclass(frozen=True)
class EnvyGraph:
    """Directed graph with one vertex per agent and an edge per envious pair."""

    n: int
    edges: frozenset[tuple[int, int]]

    def successors(self, i: int) -> list[int]:
        return sorted(j for (u, j) in self.edges if u == i)

    def predecessors(self, j: int) -> list[int]:
        return sorted(i for (i, w) in self.edges if w == j)

    def out_degree(self, i: int) -> int:
        return sum(1 for (u, _) in self.edges if u == i)

    def in_degree(self, j: int) -> int:
        return sum(1 for (_, w) in self.edges if w == j)

    def sources(self) -> list[int]:
        """Vertices with in-degree zero, ascending."""
        envied = {j for (_, j) in self.edges}
        return [i for i in range(self.n) if i not in envied]

    def is_acyclic(self) -> bool:
        indeg = [0] * self.n
        for _, j in self.edges:
            indeg[j] += 1
        queue = deque(i for i in range(self.n) if indeg[i] == 0)
        seen = 0
        while queue:
            u = queue.popleft()
            seen += 1
            for w in self.successors(u):
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue.append(w)
        return seen == self.n


def envy_graph(alloc: Allocation) -> EnvyGraph:
    inst = alloc.instance
    bundles = [b.counts for b in alloc.bundles]
    edges = set()
    for i in range(inst.n):
        si = inst.valuations[i].scaled
        own = _dot(si, bundles[i])
        for j in range(inst.n):
            if i != j and own < _dot(si, bundles[j]):
                edges.add((i, j))
    return EnvyGraph(inst.n, frozenset(edges))


def _cycle_through(graph: EnvyGraph, v: int) -> list[int] | None:
    """Shortest directed cycle through ``v`` (BFS, ascending neighbors)."""
    dist = {v: 0}
    parent: dict[int, int] = {}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        for w in graph.successors(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                parent[w] = u
                queue.append(w)
    best: tuple[int, int] | None = None
    for u in dist:
        if u != v and (u, v) in graph.edges:
            if best is None or (dist[u], u) < best:
                best = (dist[u], u)
    if best is None:
        return None
    path = [best[1]]
    while path[-1] != v:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def decycle(alloc: Allocation) -> Allocation:
    """Rotate bundles along envy cycles until the envy graph is acyclic.

    Deterministic: each round eliminates the shortest cycle through the
    lowest-index vertex lying on any cycle.  Along an edge ``i -> j`` of the
    chosen cycle, agent ``i`` receives ``X_j``, so every agent on the cycle
    strictly improves; agents off the cycle keep their bundles.  Terminates
    because total value strictly increases over a finite set of allocations.
    """
    current = alloc
    while True:
        graph = envy_graph(current)
        cycle = None
        for v in range(graph.n):
            cycle = _cycle_through(graph, v)
            if cycle is not None:
                break
        if cycle is None:
            return current
        bundles = list(current.bundles)
        for idx, u in enumerate(cycle):
            w = cycle[(idx + 1) % len(cycle)]
            bundles[u] = current.bundles[w]
        current = Allocation(current.instance, tuple(bundles))


def find_source(graph: EnvyGraph) -> int:
    """Lowest-index vertex with in-degree zero; requires an acyclic graph."""
    if not graph.is_acyclic():
        raise PreconditionError("envy graph has a directed cycle")
    return graph.sources()[0]
