"""Plane geometry of bundles for two item types, and the three-type wall.

Each agent ``i`` owns a point (their bundle) and a line ``L_i`` through it
with nonnegative intercepts (their indifference line): bundles above the
line are envied, bundles on or below are not.  The intercept of ``L_i`` on
axis ``a`` is ``V_i(X_i) / v_i(a)`` (infinite when the agent ignores that
type).  For two types this picture yields a complete-EFX allocator that
never discards progress: whenever no single item can be placed directly,
some *most envious agent* (one envying a minimal sub-bundle ``Z`` of a
source's bundle plus the item, with no strict subset of ``Z`` envied by
anyone) is reachable from that source along envy edges, and rotating
bundles down that path while handing ``Z`` to the most envious agent
strictly Pareto-improves the allocation and stays EFX.

With three or more types the reachability claim fails:
:func:`counterexample_t3` replays a concrete 3-agent, 3-type configuration
that is EFX, cannot absorb its one leftover item, and has no reachable most
envious agent for any source, yet a complete EF allocation of the same
instance exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from .core import AdditiveValuation, Allocation, Instance, ItemVector
from .errors import (
    DimensionMismatchError,
    InvariantViolationError,
    PreconditionError,
)
from .fairness import check_ef, check_efx, decycle, envy_graph

Dominance = Literal["strict", "weak", "no"]


def pareto_dominates(y: Allocation, x: Allocation) -> Dominance:
    """Compare two allocations of the same instance agent-by-agent.

    "weak" means every agent values their new bundle at least as much;
    "strict" additionally requires some agent to value it strictly more.
    """
    if y.instance != x.instance:
        raise PreconditionError("allocations belong to different instances")
    strict = False
    for i, valuation in enumerate(y.instance.valuations):
        si = valuation.scaled
        new = sum(w * c for w, c in zip(si, y.bundles[i].counts))
        old = sum(w * c for w, c in zip(si, x.bundles[i].counts))
        if new < old:
            return "no"
        if new > old:
            strict = True
    return "strict" if strict else "weak"


def intercepts(alloc: Allocation) -> list[list[Fraction | float]]:
    """Per-agent axis intercepts of the indifference lines.

    ``intercepts(alloc)[i][a]`` is ``V_i(X_i) / v_i(a)``, or ``math.inf``
    when ``v_i(a) = 0`` (the line never crosses that axis).
    """
    result: list[list[Fraction | float]] = []
    for i, valuation in enumerate(alloc.instance.valuations):
        own = valuation.value(alloc.bundles[i])
        result.append(
            [own / valuation[a] if valuation[a] else math.inf
             for a in range(alloc.instance.t)]
        )
    return result


def _envies_bundle(alloc: Allocation, i: int, bundle: ItemVector) -> bool:
    si = alloc.instance.valuations[i].scaled
    own = sum(w * c for w, c in zip(si, alloc.bundles[i].counts))
    return own < sum(w * c for w, c in zip(si, bundle.counts))


@dataclass(frozen=True)
class MEAResult:
    """A most envious agent of some target bundle.

    ``agent`` envies ``bundle`` and nobody envies any strict subset of it.
    ``path`` (when present) runs source-first along envy edges down to
    ``agent``; a single-entry path means the agent is the source itself.
    """

    agent: int
    bundle: ItemVector
    path: tuple[int, ...] | None = None


def most_envious_agent(alloc: Allocation, bundle: ItemVector) -> MEAResult | None:
    """Search for a most envious agent of ``bundle`` under ``alloc``.

    Scans strict sub-multisets in ascending total-size order (ties broken
    lexicographically), so the first envied one automatically has no envied
    strict subset; agent ties break to the lowest index.  Returns None when
    no agent envies any strict subset of ``bundle``.
    """
    if len(bundle) != alloc.instance.t:
        raise DimensionMismatchError("bundle length does not match instance")
    for z in sorted(bundle.strict_subsets(), key=lambda z: (z.size, z.counts)):
        for r in range(alloc.instance.n):
            if _envies_bundle(alloc, r, z):
                return MEAResult(agent=r, bundle=z)
    return None


def reachable_mea_t2(alloc: Allocation, g_type: int) -> MEAResult:
    """Most envious agent reachable from a least-intercept source (t = 2).

    Preconditions (checked): two types, an unallocated item of ``g_type``,
    an acyclic envy graph.  The source ``s`` minimizes the intercept on the
    item's axis among sources (ties to the lowest index).  Writing
    ``level`` for ``x_s[g_type] + 1``:

    * If some line crosses the item axis below ``level``, the agent with
      the smallest such intercept is most envious of the bundle with
      ``level`` items of the item type and nothing else.
    * Otherwise each line meets the height-``level`` horizontal at some
      off-axis coordinate ``p_i``; the agent with the smallest ``p_i`` is
      most envious of the bundle at ``(floor(p_r) + 1)`` off-axis items and
      ``level`` item-axis items.

    Intercept ties prefer ``s`` itself (when eligible), then the lowest
    index.  The returned path follows envy edges from ``s`` to the agent,
    built by walking in-neighbors (lowest index first); the walk stays
    strictly below ``s``'s intercept and therefore terminates.

    The construction assumes callers already tried placing the item
    directly (the geometric allocator does).  On an allocation where the
    chosen source could in fact absorb the item, the second scenario
    degenerates: the result is then the plain give, bundle equal to the
    source's bundle plus the item, single-entry path.
    """
    inst = alloc.instance
    if inst.t != 2:
        raise PreconditionError(f"reachable_mea_t2 requires t = 2, got t = {inst.t}")
    if g_type not in (0, 1):
        raise PreconditionError(f"item type must be 0 or 1, got {g_type}")
    if alloc.unallocated[g_type] == 0:
        raise PreconditionError(f"no unallocated item of type {g_type}")
    graph = envy_graph(alloc)
    if not graph.is_acyclic():
        raise PreconditionError("envy graph must be acyclic (de-cycle first)")

    axis, other = g_type, 1 - g_type
    lines = intercepts(alloc)
    s = min(graph.sources(), key=lambda i: (lines[i][axis], i))
    level = alloc.bundles[s][axis] + 1
    below = {i for i in range(inst.n) if lines[i][axis] < level}

    if below:
        least = min(lines[i][axis] for i in range(inst.n))
        tied = [i for i in range(inst.n) if lines[i][axis] == least]
        r = s if (s in tied and s in below) else tied[0]
        z = [0, 0]
        z[axis] = level
    else:
        crossings: list[Fraction | float] = []
        for i in range(inst.n):
            valuation = inst.valuations[i]
            if valuation[other] == 0:
                crossings.append(math.inf)  # line parallel to the sweep
            else:
                crossings.append(
                    (valuation.value(alloc.bundles[i]) - valuation[axis] * level)
                    / valuation[other]
                )
        least = min(crossings)
        if least == math.inf:
            raise InvariantViolationError("no line crosses the sweep level")
        tied = [i for i in range(inst.n) if crossings[i] == least]
        r = s if s in tied else tied[0]
        if least >= alloc.bundles[s][other] - 1:
            # Every line clears the source bundle plus the item: the plain
            # give preserves EFX, no rotation needed.
            return MEAResult(
                agent=s, bundle=alloc.bundles[s].add_item(axis), path=(s,)
            )
        z = [0, 0]
        z[axis] = level
        z[other] = math.floor(least) + 1

    bundle = ItemVector(tuple(z))
    assert bundle.issubset(alloc.bundles[s].add_item(axis))
    assert _envies_bundle(alloc, r, bundle)

    if r == s:
        return MEAResult(agent=r, bundle=bundle, path=(s,))
    assert lines[r][axis] < lines[s][axis]
    chain = [r]
    for _ in range(inst.n + 1):
        head = chain[-1]
        if (s, head) in graph.edges:
            return MEAResult(agent=r, bundle=bundle, path=(s, *reversed(chain)))
        preds = graph.predecessors(head)
        if not preds:
            raise InvariantViolationError(
                f"agent {head} has no envier but is below the chosen source"
            )
        w = preds[0]
        assert w != s and w not in chain
        assert lines[w][axis] < lines[s][axis]
        chain.append(w)
    raise InvariantViolationError("envy walk failed to reach the source")


def apply_shift(alloc: Allocation, mea: MEAResult, g_type: int) -> Allocation:
    """Rotate bundles along the MEA path and hand the minimal bundle over.

    Along every path edge ``u -> w``, agent ``u`` takes ``X_w``; the most
    envious agent takes the envied bundle ``Z``.  Every path agent strictly
    improves, so the result strictly Pareto-dominates the input (except for
    the degenerate single-agent give of a worthless item, which dominates
    only weakly), and it stays EFX.  Items of the source's old bundle not
    covered by ``Z`` fall back to the unallocated pool (the pool never
    loses more than it gains: ``Z`` holds at most one item more than the
    source held).

    An MEAResult that does not fit the allocation (missing path, stale envy
    edges, bundle not inside source-plus-item) raises
    InvariantViolationError.
    """
    inst = alloc.instance
    if mea.path is None:
        raise InvariantViolationError("MEA result carries no path")
    if mea.path[-1] != mea.agent:
        raise InvariantViolationError("path does not end at the most envious agent")
    if alloc.unallocated[g_type] == 0:
        raise InvariantViolationError(f"no unallocated item of type {g_type}")
    graph = envy_graph(alloc)
    for u, w in zip(mea.path, mea.path[1:]):
        if (u, w) not in graph.edges:
            raise InvariantViolationError(f"stale MEA path: {u} no longer envies {w}")
    source = mea.path[0]
    target = alloc.bundles[source].add_item(g_type)
    if not mea.bundle.issubset(target):
        raise InvariantViolationError(
            "bundle is not contained in the source bundle plus the item"
        )
    proper = mea.bundle.counts != target.counts
    if proper and not _envies_bundle(alloc, mea.agent, mea.bundle):
        raise InvariantViolationError("agent does not envy the claimed bundle")
    bundles = list(alloc.bundles)
    for u, w in zip(mea.path, mea.path[1:]):
        bundles[u] = alloc.bundles[w]
    bundles[mea.agent] = mea.bundle
    result = Allocation(inst, tuple(bundles))
    assert check_efx(result).satisfied, "shift broke EFX"
    dominance = pareto_dominates(result, alloc)
    # The plain give (single-entry path taking the whole augmented bundle)
    # may add a worthless item; every other shift strictly improves someone.
    if len(mea.path) > 1 or proper:
        assert dominance == "strict", "shift was not an improvement"
    else:
        assert dominance in ("strict", "weak")
    return result


def allocate_two_types_geometric(instance: Instance) -> Allocation:
    """Complete EFX allocation for t = 2 by repeated Pareto improvement.

    From the empty allocation (trivially EFX): take the lowest-index type
    with unallocated items; give one directly to the first agent (ascending)
    that keeps EFX; failing that, de-cycle if the envy graph has a cycle;
    failing that, shift along a reachable most envious agent.  Every round
    strictly increases (total value, items placed) lexicographically over a
    finite set, so the loop terminates with everything placed.
    """
    if instance.t != 2:
        raise PreconditionError(
            f"allocate_two_types_geometric requires t = 2, got t = {instance.t}"
        )
    alloc = Allocation.empty(instance)
    while not alloc.is_complete:
        unallocated = alloc.unallocated
        g = 0 if unallocated[0] > 0 else 1
        placed = None
        for i in range(instance.n):
            candidate = alloc.give(i, g)
            if check_efx(candidate).satisfied:
                placed = candidate
                break
        if placed is not None:
            alloc = placed
            continue
        if not envy_graph(alloc).is_acyclic():
            alloc = decycle(alloc)
            continue
        alloc = apply_shift(alloc, reachable_mea_t2(alloc, g), g)
    assert check_efx(alloc).satisfied
    return alloc


# --- the three-type stuck configuration --------------------------------------


def counterexample_instance(epsilon: Fraction = Fraction(7, 100)) -> Instance:
    """Three agents, three types, supply (9, 9, 11); epsilon tunes the gaps."""
    one = Fraction(1)
    return Instance(
        n=3,
        t=3,
        m=ItemVector((9, 9, 11)),
        valuations=(
            AdditiveValuation((one, 2 - epsilon, Fraction(0))),
            AdditiveValuation((1 + 2 * epsilon, 1 + epsilon, one)),
            AdditiveValuation((Fraction(0), 2 - epsilon, one)),
        ),
    )


@dataclass(frozen=True)
class CounterexampleCheck:
    name: str
    passed: bool
    details: str

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "details": self.details}


@dataclass(frozen=True)
class CounterexampleReport:
    checks: tuple[CounterexampleCheck, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "checks": [c.to_json() for c in self.checks],
        }


def _reachable_from(graph, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for w in graph.successors(u):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def _mea_agent_set(alloc: Allocation, bundle: ItemVector) -> set[int]:
    """Every agent that is a most envious agent of ``bundle`` via some witness."""
    enviers: dict[tuple[int, ...], list[int]] = {}
    for z in bundle.strict_subsets():
        enviers[z.counts] = [
            r for r in range(alloc.instance.n) if _envies_bundle(alloc, r, z)
        ]
    agents: set[int] = set()
    for z in bundle.strict_subsets():
        if enviers[z.counts] and all(
            not enviers[y.counts] for y in z.strict_subsets()
        ):
            agents.update(enviers[z.counts])
    return agents


def counterexample_t3(epsilon: Fraction = Fraction(7, 100)) -> CounterexampleReport:
    """Replay the stuck three-type configuration and verify every claim.

    Six checks: the allocation is EFX; its only sources are the first two
    agents; handing the leftover middle-type item to any agent breaks EFX
    with a specific witness bundle; the most envious agents of each
    augmented bundle are exactly the expected ones; no source (nor the third
    agent) has a reachable most envious agent; and a specific complete EF
    allocation of the same instance exists.  Any failed check carries a
    diagnostic in its details.
    """
    inst = counterexample_instance(epsilon)
    agent_name = {0: "A", 1: "B", 2: "C"}
    alloc = Allocation(
        inst,
        (ItemVector((3, 5, 0)), ItemVector((6, 3, 0)), ItemVector((0, 0, 11))),
    )
    g = 1  # the single leftover item has the middle type
    checks: list[CounterexampleCheck] = []

    def record(name: str, passed: bool, details: str) -> None:
        checks.append(CounterexampleCheck(name, passed, details))

    report = check_efx(alloc)
    record(
        "stuck-allocation-is-efx",
        report.satisfied,
        "EFX holds" if report.satisfied else f"witness: {report.witness}",
    )

    graph = envy_graph(alloc)
    sources = graph.sources()
    record(
        "sources-are-first-two-agents",
        sources == [0, 1],
        f"sources = {[agent_name[s] for s in sources]}",
    )

    expected_breaks = {
        0: (2, ItemVector((2, 6, 0))),
        1: (0, ItemVector((5, 4, 0))),
        2: (1, ItemVector((0, 0, 11))),
    }
    break_notes = []
    breaks_ok = True
    for target, (observer, expected_bundle) in expected_breaks.items():
        augmented = alloc.give(target, g)
        rep = check_efx(augmented)
        if rep.satisfied:
            breaks_ok = False
            break_notes.append(f"giving to {agent_name[target]} stayed EFX")
            continue
        w = rep.witness
        got_bundle = augmented.bundles[w.envied].remove_item(w.removed_type)
        ok = (
            w.observer == observer
            and w.envied == target
            and got_bundle.counts == expected_bundle.counts
            and _envies_bundle(alloc, observer, expected_bundle)
        )
        breaks_ok = breaks_ok and ok
        break_notes.append(
            f"give to {agent_name[target]}: {agent_name[w.observer]} envies "
            f"{got_bundle.counts}"
        )
    record("single-item-additions-break-efx", breaks_ok, "; ".join(break_notes))

    expected_meas = {
        0: (2, ItemVector((0, 6, 0))),
        1: (0, ItemVector((5, 4, 0))),
        2: (1, ItemVector((0, 1, 9))),
    }
    mea_notes = []
    meas_ok = True
    for target, (expected_agent, expected_bundle) in expected_meas.items():
        augmented_bundle = alloc.bundles[target].add_item(g)
        found = most_envious_agent(alloc, augmented_bundle)
        ok = (
            found is not None
            and found.agent == expected_agent
            and found.bundle.counts == expected_bundle.counts
        )
        meas_ok = meas_ok and ok
        mea_notes.append(
            f"MEA of X_{agent_name[target]} plus item: "
            + (f"{agent_name[found.agent]} via {found.bundle.counts}" if found else "none")
        )
    # The non-MEA side claims: who fails to be a most envious agent, and why.
    non_mea_facts = [
        # B never envies A's augmented bundle.
        not _envies_bundle(alloc, 1, ItemVector((3, 6, 0))),
        # A's only envied strict subset of A's augmented bundle is (2,6,0) ...
        [z.counts for z in ItemVector((3, 6, 0)).strict_subsets()
         if _envies_bundle(alloc, 0, z)] == [(2, 6, 0)],
        # ... and (2,6,0) contains an envied strict subset, so A is not a MEA.
        any(
            _envies_bundle(alloc, r, y)
            for y in ItemVector((2, 6, 0)).strict_subsets()
            for r in range(3)
        ),
        # C never envies B's augmented bundle.
        not _envies_bundle(alloc, 2, ItemVector((6, 4, 0))),
        # B envies no strict subset of B's augmented bundle.
        not any(
            _envies_bundle(alloc, 1, z)
            for z in ItemVector((6, 4, 0)).strict_subsets()
        ),
        # A never envies C's augmented bundle.
        not _envies_bundle(alloc, 0, ItemVector((0, 1, 11))),
        # C's only envied strict subset of C's augmented bundle is (0,1,10) ...
        [z.counts for z in ItemVector((0, 1, 11)).strict_subsets()
         if _envies_bundle(alloc, 2, z)] == [(0, 1, 10)],
        # ... and (0,1,10) contains an envied strict subset, so C is not a MEA.
        any(
            _envies_bundle(alloc, r, y)
            for y in ItemVector((0, 1, 10)).strict_subsets()
            for r in range(3)
        ),
    ]
    meas_ok = meas_ok and all(non_mea_facts)
    mea_notes.append(f"non-MEA facts: {sum(non_mea_facts)}/{len(non_mea_facts)} hold")
    record("most-envious-agents-match", meas_ok, "; ".join(mea_notes))

    stuck_notes = []
    stuck_ok = True
    for start in range(3):
        meas = _mea_agent_set(alloc, alloc.bundles[start].add_item(g))
        reachable = _reachable_from(graph, start)
        overlap = meas & reachable
        stuck_ok = stuck_ok and not overlap
        stuck_notes.append(
            f"from {agent_name[start]}: MEAs {sorted(agent_name[i] for i in meas)}, "
            f"reachable {sorted(agent_name[i] for i in reachable)}"
        )
    record("no-reachable-most-envious-agent", stuck_ok, "; ".join(stuck_notes))

    fair = Allocation(
        inst,
        (ItemVector((4, 3, 2)), ItemVector((3, 3, 4)), ItemVector((2, 3, 5))),
    )
    fair_report = check_ef(fair)
    record(
        "complete-ef-allocation-exists",
        fair.is_complete and fair_report.satisfied,
        "complete and envy-free"
        if fair.is_complete and fair_report.satisfied
        else f"complete={fair.is_complete}, witness={fair_report.witness}",
    )

    return CounterexampleReport(tuple(checks))
