"""Envy-free feasibility via a unimodular change of variables.

A complete EF allocation is an integer point of the polytope cut out by the
EF inequalities, nonnegativity, and per-type completeness, in ``n*t``
variables ``x_{i,a}``.  Substituting the consecutive differences
``xi_{k,a} = x_{k,a} - x_{k+1,a}`` (a unimodular map, so integer points
correspond bijectively) and eliminating the last agent's bundle through the
completeness equations leaves a system in ``(n-1)*t`` variables:

* EF rows, one pair per ``i < j``:
  ``sum_a v_i(a) * S_a >= 0`` and ``sum_a v_j(a) * S_a <= 0`` where
  ``S_a = sum(xi_{k,a} for k in i..j-1)``;
* positivity rows, one per agent and type:
  ``m_a - sum_{k<i} (k+1) xi_{k,a} + sum_{k>=i} (n-1-k) xi_{k,a} >= 0``
  (0-indexed ``k``; this is ``n`` times the reconstructed ``x_{i,a}``).

The feasible set Gamma(v, m) of this system has two properties Delta lacks:
scaling (``xi`` feasible for ``m`` iff ``lambda*xi`` is feasible for
``lambda*m``) and containment (growing ``m`` only grows Gamma).  A unit
cube of lattice points inside Gamma guarantees one corner whose
reconstruction is integral: the corner picked by ``cube_corner``'s residue
rule.  So one cube found at supply ``r`` per type certifies a complete EF
allocation for *every* supply that is at least ``r`` in each type, which is
what ``scan_min_r`` searches for.

The cube search is exact and exhaustive within a box; absence of a cube at
some radius never proves EF infeasibility (``ef_bruteforce`` is the
ground-truth oracle at small scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import AdditiveValuation, Allocation, Instance, ItemVector, format_rational
from .errors import (
    DimensionMismatchError,
    EnumerationCapError,
    InvariantViolationError,
    PreconditionError,
    SchemaError,
)
from .fairness import EF
from .oracle import DEFAULT_CAP, exists_fair

DEFAULT_DIM_CAP = 8


@dataclass(frozen=True)
class XiVector:
    """A point in difference coordinates, flat row-major: index ``k*t + a``."""

    entries: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(Fraction(e) for e in self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx: int) -> Fraction:
        return self.entries[idx]

    @property
    def is_integral(self) -> bool:
        return all(e.denominator == 1 for e in self.entries)

    def scaled(self, factor: Fraction) -> "XiVector":
        return XiVector(tuple(e * factor for e in self.entries))

    def shifted(self, offsets) -> "XiVector":
        return XiVector(tuple(e + o for e, o in zip(self.entries, offsets)))

    def to_json(self) -> list:
        return [format_rational(e) for e in self.entries]


@dataclass(frozen=True)
class GammaSystem:
    """The EF + positivity constraint system for fixed valuations and supply.

    The supply may be rational: the scaling identity relates integer and
    scaled-rational systems.  Reconstruction back to allocations requires an
    integral supply.
    """

    valuations: tuple[AdditiveValuation, ...]
    supply: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        valuations = tuple(self.valuations)
        supply = tuple(Fraction(s) for s in self.supply)
        if not valuations:
            raise SchemaError("at least one valuation required")
        t = valuations[0].t
        if any(v.t != t for v in valuations):
            raise DimensionMismatchError("valuations disagree on the number of types")
        if len(supply) != t:
            raise DimensionMismatchError(
                f"supply has {len(supply)} types, valuations have {t}"
            )
        if any(s < 0 for s in supply):
            raise SchemaError("supply must be nonnegative")
        object.__setattr__(self, "valuations", valuations)
        object.__setattr__(self, "supply", supply)

    @classmethod
    def from_instance(cls, instance: Instance) -> "GammaSystem":
        return cls(instance.valuations, tuple(Fraction(c) for c in instance.m))

    @property
    def n(self) -> int:
        return len(self.valuations)

    @property
    def t(self) -> int:
        return self.valuations[0].t

    @property
    def dim(self) -> int:
        return (self.n - 1) * self.t

    def instance(self) -> Instance:
        if any(s.denominator != 1 for s in self.supply):
            raise PreconditionError("supply is not integral")
        return Instance(
            n=self.n,
            t=self.t,
            m=ItemVector(tuple(int(s) for s in self.supply)),
            valuations=self.valuations,
        )


def _check_dim(sys: GammaSystem, xi: XiVector) -> None:
    if len(xi) != sys.dim:
        raise DimensionMismatchError(f"xi has {len(xi)} entries, system needs {sys.dim}")


def gamma_feasible(sys: GammaSystem, xi: XiVector) -> bool:
    """Exact membership test for the EF + positivity system."""
    _check_dim(sys, xi)
    n, t = sys.n, sys.t
    # Prefix sums over k so the pair sums S_a are O(1) each.
    prefix = [[Fraction(0)] * t]
    for k in range(n - 1):
        prefix.append([prefix[k][a] + xi[k * t + a] for a in range(t)])
    for i in range(n):
        vi = sys.valuations[i].values
        for j in range(i + 1, n):
            vj = sys.valuations[j].values
            span = [prefix[j][a] - prefix[i][a] for a in range(t)]
            if sum(vi[a] * span[a] for a in range(t)) < 0:
                return False
            if sum(vj[a] * span[a] for a in range(t)) > 0:
                return False
    for i in range(n):
        for a in range(t):
            total = sys.supply[a]
            for k in range(n - 1):
                weight = -(k + 1) if k < i else (n - 1 - k)
                total += weight * xi[k * t + a]
            if total < 0:
                return False
    return True


def x_n_of_xi(sys: GammaSystem, xi: XiVector) -> tuple[Fraction, ...]:
    """The last agent's bundle coordinates implied by completeness."""
    _check_dim(sys, xi)
    n, t = sys.n, sys.t
    return tuple(
        (sys.supply[a] - sum((k + 1) * xi[k * t + a] for k in range(n - 1)))
        / n
        for a in range(t)
    )


def xi_of_bundles(bundles) -> XiVector:
    """Forward transform: consecutive bundle differences, flattened."""
    entries = []
    for k in range(len(bundles) - 1):
        for a in range(len(bundles[k])):
            entries.append(Fraction(bundles[k][a] - bundles[k + 1][a]))
    return XiVector(tuple(entries))


def reconstruct_allocation(sys: GammaSystem, xi: XiVector) -> Allocation | None:
    """Map an integer xi back to a complete allocation, if one exists there.

    Returns None when the implied last bundle is not integral or any
    reconstructed count is negative.  A non-None result is complete by
    construction, and satisfies EF whenever ``xi`` lies in the system.
    """
    _check_dim(sys, xi)
    if not xi.is_integral:
        raise PreconditionError("reconstruction requires an integral xi")
    instance = sys.instance()
    n, t = sys.n, sys.t
    x_last = x_n_of_xi(sys, xi)
    if any(c.denominator != 1 for c in x_last):
        return None
    rows = [[int(c) for c in x_last] for _ in range(n)]
    for i in range(n - 2, -1, -1):
        for a in range(t):
            rows[i][a] = rows[i + 1][a] + int(xi[i * t + a])
    if any(c < 0 for row in rows for c in row):
        return None
    return Allocation(instance, tuple(ItemVector(tuple(row)) for row in rows))


def cube_corner(sys: GammaSystem, xi_star: XiVector) -> Allocation:
    """Pick the corner of a unit cube that reconstructs integrally.

    Per type, the residue ``r_a = (m_a - sum_k (k+1) xi*_{k,a}) mod n``
    names the single row ``k = r_a - 1`` whose offset must be 1 (no offset
    when the residue is 0); that corner always makes the last bundle
    integral.  The caller certifies cube feasibility (see
    :func:`find_integer_cube`); for a certified cube the result is a
    complete EF allocation.  A corner whose reconstruction fails anyway
    (negative counts, i.e. an infeasible corner) raises
    InvariantViolationError; on an uncertified anchor the residue rule
    still applies but only completeness and integrality are guaranteed.
    """
    _check_dim(sys, xi_star)
    if not xi_star.is_integral:
        raise PreconditionError("cube corners require an integral xi")
    instance = sys.instance()
    n, t = sys.n, sys.t
    offsets = [0] * sys.dim
    for a in range(t):
        residue = (
            instance.m[a] - sum((k + 1) * int(xi_star[k * t + a]) for k in range(n - 1))
        ) % n
        if residue:
            offsets[(residue - 1) * t + a] = 1
    corner = xi_star.shifted(offsets)
    alloc = reconstruct_allocation(sys, corner)
    if alloc is None:
        raise InvariantViolationError(
            "cube corner failed to reconstruct: infeasible corner"
        )
    return alloc


# --- cube search -------------------------------------------------------------
#
# All rows are scaled to integer coefficients, so the search is pure integer
# arithmetic.  A unit cube anchored at xi fits in the system exactly when xi
# satisfies every row with its constant tightened by the row's negative
# coefficient sum (a linear function on a box is minimized corner-by-corner),
# which turns the 2^dim corner conditions into one shifted system.


def _integer_rows(sys: GammaSystem) -> list[tuple[tuple[int, ...], int]]:
    """The system as integer rows (coeffs, const): feasible iff coeffs.xi + const >= 0."""
    n, t, dim = sys.n, sys.t, sys.dim
    rows: list[tuple[tuple[int, ...], int]] = []

    def scaled(coeffs: list[Fraction], const: Fraction) -> tuple[tuple[int, ...], int]:
        lcm = math.lcm(const.denominator, *(c.denominator for c in coeffs))
        return tuple(int(c * lcm) for c in coeffs), int(const * lcm)

    for i in range(n):
        vi = sys.valuations[i].values
        for j in range(i + 1, n):
            vj = sys.valuations[j].values
            row_i = [Fraction(0)] * dim
            row_j = [Fraction(0)] * dim
            for k in range(i, j):
                for a in range(t):
                    row_i[k * t + a] += vi[a]
                    row_j[k * t + a] -= vj[a]
            rows.append(scaled(row_i, Fraction(0)))
            rows.append(scaled(row_j, Fraction(0)))
    for i in range(n):
        for a in range(t):
            coeffs = [Fraction(0)] * dim
            for k in range(n - 1):
                coeffs[k * t + a] = Fraction(-(k + 1) if k < i else (n - 1 - k))
            rows.append(scaled(coeffs, sys.supply[a]))
    return rows


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _lex_first_point(
    rows: list[tuple[tuple[int, ...], int]], dim: int, radius: int
) -> tuple[int, ...] | None:
    """Lexicographically smallest integer point of the row system in the box.

    Depth-first over coordinates in order, values ascending; a branch is cut
    when some row cannot reach 0 even with the best remaining assignment, so
    the first leaf is exactly the answer a brute-force lexicographic scan of
    ``[-radius, radius]^dim`` would return.
    """
    suffix = []
    for coeffs, _ in rows:
        tail = [0] * (dim + 1)
        for idx in range(dim - 1, -1, -1):
            tail[idx] = tail[idx + 1] + abs(coeffs[idx])
        suffix.append(tail)

    def descend(level: int, partials: list[int]) -> tuple[int, ...] | None:
        if level == dim:
            return ()
        lo, hi = -radius, radius
        for ridx, (coeffs, _) in enumerate(rows):
            c = coeffs[level]
            room = partials[ridx] + radius * suffix[ridx][level + 1]
            if c > 0:
                lo = max(lo, _ceil_div(-room, c))
            elif c < 0:
                hi = min(hi, room // (-c))
            elif room < 0:
                return None
        for x in range(lo, hi + 1):
            nxt = [p + coeffs[level] * x for (coeffs, _), p in zip(rows, partials)]
            found = descend(level + 1, nxt)
            if found is not None:
                return (x, *found)
        return None

    return descend(0, [const for _, const in rows])


def find_integer_cube(
    sys: GammaSystem, radius: int, dim_cap: int = DEFAULT_DIM_CAP
) -> XiVector | None:
    """First integer xi (ascending lexicographic, sup-norm <= radius) whose
    whole 0/1-offset corner set is feasible, or None if the box has none.

    Refuses outright when the search dimension ``(n-1)*t`` exceeds
    ``dim_cap``: the box grows exponentially and a silent attempt would hang.
    """
    if radius < 0:
        raise PreconditionError("radius must be nonnegative")
    if sys.dim > dim_cap:
        raise EnumerationCapError(
            f"cube search dimension {sys.dim} exceeds cap {dim_cap}"
        )
    rows = _integer_rows(sys)
    shifted = [
        (coeffs, const + sum(c for c in coeffs if c < 0)) for coeffs, const in rows
    ]
    if sys.dim == 0:
        anchor: tuple[int, ...] | None = (
            () if all(const >= 0 for _, const in shifted) else None
        )
    else:
        anchor = _lex_first_point(shifted, sys.dim, radius)
    if anchor is None:
        return None
    xi = XiVector(tuple(Fraction(x) for x in anchor))
    assert gamma_feasible(sys, xi), "cube anchor must itself be feasible"
    return xi


@dataclass(frozen=True)
class ScanResult:
    """A feasibility certificate: a unit cube found at uniform supply ``r``.

    By containment, the same cube lies in the system of every supply that is
    at least ``r`` in each type, so a complete EF allocation exists for all
    such supplies (and :func:`cube_corner` constructs one).
    """

    r: int
    xi_star: XiVector

    @property
    def certified_for(self) -> str:
        return f"all m >= {self.r}"

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "xi_star": self.xi_star.to_json(),
            "certified_for": self.certified_for,
        }


def scan_min_r(
    valuations,
    r_max: int,
    radius_policy: str = "r",
    dim_cap: int = DEFAULT_DIM_CAP,
) -> ScanResult | None:
    """Smallest r <= r_max whose uniform supply admits a unit cube.

    Requires pairwise distinct valuations and at least two types (with one
    type all additive valuations are proportional, so no instance qualifies).
    The search box grows with r per ``radius_policy`` ("r" or "2r"); a cube
    outside the box is missed, so None means "none found within the caps",
    never "no complete EF allocation exists".
    """
    valuations = tuple(valuations)
    if not valuations or valuations[0].t < 2:
        raise PreconditionError("scanning needs t >= 2")
    if not distinct_valuations(valuations):
        raise PreconditionError("valuations must be pairwise distinct")
    try:
        policy = {"r": lambda r: r, "2r": lambda r: 2 * r}[radius_policy]
    except KeyError:
        raise PreconditionError(f"unknown radius policy {radius_policy!r}") from None
    t = valuations[0].t
    for r in range(1, r_max + 1):
        sys = GammaSystem(valuations, (Fraction(r),) * t)
        xi = find_integer_cube(sys, policy(r), dim_cap)
        if xi is not None:
            return ScanResult(r, xi)
    return None


def _proportional(v: AdditiveValuation, w: AdditiveValuation) -> bool:
    t = v.t
    return all(
        v[a] * w[b] == v[b] * w[a] for a in range(t) for b in range(a + 1, t)
    )


def distinct_valuations(valuations) -> bool:
    """True iff no two valuations are positive scalar multiples of each other."""
    valuations = tuple(valuations)
    return not any(
        _proportional(valuations[i], valuations[j])
        for i in range(len(valuations))
        for j in range(i + 1, len(valuations))
    )


def ef_bruteforce(instance: Instance, cap: int = DEFAULT_CAP) -> Allocation | None:
    """Ground truth: first complete EF allocation by exhaustive enumeration."""
    return exists_fair(instance, EF, cap)
