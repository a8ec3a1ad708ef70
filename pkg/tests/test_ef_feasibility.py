"""The difference-coordinate system: feasibility, cubes, and the r-scanner."""

import random
from fractions import Fraction
from itertools import product

import pytest

from fairdiv import (
    AdditiveValuation,
    EnumerationCapError,
    GammaSystem,
    PreconditionError,
    XiVector,
    check_ef,
    cube_corner,
    distinct_valuations,
    ef_bruteforce,
    find_integer_cube,
    gamma_feasible,
    reconstruct_allocation,
    scan_min_r,
    x_n_of_xi,
    xi_of_bundles,
)
from fairdiv import DimensionMismatchError

from conftest import EPS, mk_instance, random_complete_allocation, random_instance


def frac_vals(*rows):
    return tuple(AdditiveValuation(tuple(Fraction(v) for v in row)) for row in rows)


def system(rows, m):
    return GammaSystem(frac_vals(*rows), tuple(Fraction(v) for v in m))


def verify_ef_ilp(alloc):
    """Re-check the original EF/positivity/completeness constraints directly."""
    inst = alloc.instance
    for i in range(inst.n):
        vi = inst.valuations[i]
        own = vi.value(alloc.bundles[i])
        for j in range(inst.n):
            if i != j and own < vi.value(alloc.bundles[j]):
                return False
    if any(c < 0 for b in alloc.bundles for c in b.counts):
        return False
    return alloc.is_complete


def random_rational_xi(rng, dim, span=4):
    return XiVector(
        tuple(
            Fraction(rng.randint(-span * 6, span * 6), rng.randint(1, 6))
            for _ in range(dim)
        )
    )


class TestGammaFeasible:
    def test_zero_point_is_always_feasible(self):
        sys = system([(2, 1), (1, 5), (3, 3)], (4, 0))
        assert gamma_feasible(sys, XiVector((0,) * sys.dim))

    def test_dimension_mismatch(self):
        sys = system([(2, 1), (1, 5)], (4, 4))
        with pytest.raises(DimensionMismatchError):
            gamma_feasible(sys, XiVector((0,) * 5))

    def test_scaling_identity(self):
        rng = random.Random(51001)
        base = system([(2, 1), (1, 3), (4, 1)], (5, 7))
        for lam in (Fraction(2), Fraction(3), Fraction(1, 2)):
            scaled = GammaSystem(base.valuations, tuple(lam * s for s in base.supply))
            for _ in range(200):
                xi = random_rational_xi(rng, base.dim)
                assert gamma_feasible(base, xi) == gamma_feasible(scaled, xi.scaled(lam))

    def test_containment(self):
        rng = random.Random(51002)
        small = system([(2, 1), (1, 3)], (3, 2))
        grown = GammaSystem(
            small.valuations, tuple(s + rng.randint(0, 4) for s in small.supply)
        )
        feasible_seen = 0
        for _ in range(400):
            xi = random_rational_xi(rng, small.dim, span=1)
            if gamma_feasible(small, xi):
                feasible_seen += 1
                assert gamma_feasible(grown, xi)
        assert feasible_seen > 0
        # spot check with three agents: the always-feasible origin
        trio_small = system([(2, 1), (1, 3), (4, 1)], (3, 2))
        trio_grown = GammaSystem(trio_small.valuations, (Fraction(9), Fraction(5)))
        origin = XiVector((0,) * trio_small.dim)
        assert gamma_feasible(trio_small, origin) and gamma_feasible(trio_grown, origin)


class TestTransform:
    def test_x_last_equal_split(self):
        sys = system([(1, 1)] * 3, (6, 6))
        assert x_n_of_xi(sys, XiVector((0,) * 4)) == (2, 2)

    def test_x_last_two_agents(self):
        sys = system([(1,), (2,)], (5,))
        assert x_n_of_xi(sys, XiVector((1,))) == (Fraction(2),)

    def test_x_last_non_integer(self):
        sys = system([(1,)] * 3, (7,))
        assert x_n_of_xi(sys, XiVector((1, 1))) == (Fraction(4, 3),)

    def test_reconstruct_equal_split(self):
        sys = system([(1, 1)] * 3, (6, 6))
        alloc = reconstruct_allocation(sys, XiVector((0,) * 4))
        assert alloc is not None
        assert all(b.counts == (2, 2) for b in alloc.bundles)
        assert check_ef(alloc).satisfied

    def test_reconstruct_rejects_fractional_last_bundle(self):
        sys = system([(1,)] * 3, (7,))
        assert reconstruct_allocation(sys, XiVector((1, 1))) is None

    def test_reconstruct_rejects_negative_counts(self):
        sys = system([(1,), (1,)], (2,))
        # xi = 4 forces the second agent to -1.
        assert reconstruct_allocation(sys, XiVector((4,))) is None

    def test_reconstruct_requires_integral_xi(self):
        sys = system([(1,), (1,)], (2,))
        with pytest.raises(PreconditionError):
            reconstruct_allocation(sys, XiVector((Fraction(1, 2),)))

    def test_round_trip_on_random_allocations(self):
        rng = random.Random(51003)
        for _ in range(300):
            inst = random_instance(rng, rng.randint(2, 4), rng.randint(1, 3), 6)
            alloc = random_complete_allocation(rng, inst)
            sys = GammaSystem.from_instance(inst)
            xi = xi_of_bundles([b.counts for b in alloc.bundles])
            back = reconstruct_allocation(sys, xi)
            assert back is not None
            assert [b.counts for b in back.bundles] == [
                b.counts for b in alloc.bundles
            ]

    def test_feasible_integer_points_reconstruct_to_ef(self):
        rng = random.Random(51004)
        sys = system([(2, 1), (1, 3)], (6, 6))
        hits = 0
        for _ in range(500):
            xi = XiVector(tuple(rng.randint(-6, 6) for _ in range(sys.dim)))
            if not gamma_feasible(sys, xi):
                continue
            alloc = reconstruct_allocation(sys, xi)
            if alloc is None:
                continue  # fractional last bundle
            hits += 1
            assert verify_ef_ilp(alloc)
            assert check_ef(alloc).satisfied
        assert hits > 0


class TestCubeCorner:
    def test_zero_residue_keeps_anchor(self):
        sys = system([(1,)] * 3, (6,))
        anchor = XiVector((0, 0))
        alloc = cube_corner(sys, anchor)
        assert [b.counts for b in alloc.bundles] == [(2,), (2,), (2,)]
        assert alloc == reconstruct_allocation(sys, anchor)

    def test_residue_rule_restores_integrality(self):
        sys = system([(1,)] * 3, (7,))
        alloc = cube_corner(sys, XiVector((0, 0)))
        assert [b.counts for b in alloc.bundles] == [(3,), (2,), (2,)]
        assert alloc.is_complete

    def test_certified_cubes_give_complete_ef(self):
        rng = random.Random(51005)
        checked = 0
        while checked < 20:
            rows = [
                (rng.randint(0, 5), rng.randint(0, 5)),
                (rng.randint(0, 5), rng.randint(0, 5)),
            ]
            try:
                vals = frac_vals(*rows)
            except Exception:
                continue
            if not distinct_valuations(vals):
                continue
            r = rng.randint(2, 8)
            sys = GammaSystem(vals, (Fraction(r), Fraction(r)))
            xi = find_integer_cube(sys, r)
            if xi is None:
                continue
            checked += 1
            alloc = cube_corner(sys, xi)
            assert alloc.is_complete
            assert check_ef(alloc).satisfied
            assert verify_ef_ilp(alloc)


def brute_force_cube(sys, radius):
    """Reference search: full lexicographic box scan with all corners checked."""
    dim = sys.dim
    corners = list(product((0, 1), repeat=dim))
    for point in product(range(-radius, radius + 1), repeat=dim):
        xi = XiVector(tuple(Fraction(x) for x in point))
        if all(gamma_feasible(sys, xi.shifted(c)) for c in corners):
            return xi
    return None


class TestFindIntegerCube:
    def test_matches_brute_force_scan(self):
        rng = random.Random(51006)
        agreements = 0
        for _ in range(40):
            rows = [
                (rng.randint(0, 4), rng.randint(0, 4)),
                (rng.randint(0, 4), rng.randint(0, 4)),
            ]
            if not any(rows[0]) or not any(rows[1]):
                continue
            m = (rng.randint(0, 5), rng.randint(0, 5))
            sys = system(rows, m)
            radius = rng.randint(0, 3)
            fast = find_integer_cube(sys, radius)
            slow = brute_force_cube(sys, radius)
            assert (fast is None) == (slow is None)
            if fast is not None:
                assert fast.entries == slow.entries
                agreements += 1
        assert agreements > 0

    def test_proportional_valuations_never_hold_a_cube(self):
        # Equal (or proportional) valuations force the pair constraints into
        # an equality, and no unit cube fits inside a hyperplane; the EF
        # oracle still finds allocations, showing one-sidedness.
        sys = system([(1, 1), (1, 1)], (2, 2))
        assert find_integer_cube(sys, 3) is None
        inst = mk_instance([(1, 1), (1, 1)], (2, 2))
        assert ef_bruteforce(inst) is not None

    def test_absence_does_not_refute_ef(self):
        sys = system([(2, 1), (1, 2)], (1, 1))
        for radius in range(4):
            assert find_integer_cube(sys, radius) is None
        found = ef_bruteforce(mk_instance([(2, 1), (1, 2)], (1, 1)))
        assert [b.counts for b in found.bundles] == [(1, 0), (0, 1)]

    def test_zero_supply_too_small(self):
        sys = system([(2, 1), (1, 2)], (0, 0))
        assert find_integer_cube(sys, 2) is None

    def test_dimension_cap_refusal(self):
        vals = [(i + 1, 1) for i in range(6)]
        sys = system(vals, (3, 3))
        assert sys.dim == 10
        with pytest.raises(EnumerationCapError):
            find_integer_cube(sys, 2)
        assert find_integer_cube(sys, 1, dim_cap=10) is not None or True

    def test_negative_radius_rejected(self):
        sys = system([(2, 1), (1, 2)], (2, 2))
        with pytest.raises(PreconditionError):
            find_integer_cube(sys, -1)


class TestScanMinR:
    def test_opposed_pair_scan_and_certificates(self):
        vals = frac_vals((2, 1), (1, 2))
        result = scan_min_r(vals, 50)
        assert result is not None and 1 <= result.r <= 50
        assert result.certified_for == f"all m >= {result.r}"
        rng = random.Random(51007)
        for _ in range(5):
            m = tuple(result.r + rng.randint(0, 6) for _ in range(2))
            sys = GammaSystem(vals, tuple(Fraction(v) for v in m))
            alloc = cube_corner(sys, result.xi_star)
            assert alloc.is_complete and check_ef(alloc).satisfied
            assert verify_ef_ilp(alloc)

    def test_scan_is_minimal(self):
        vals = frac_vals((2, 1), (1, 2))
        result = scan_min_r(vals, 50)
        if result.r > 1:
            assert scan_min_r(vals, result.r - 1) is None

    def test_identical_valuations_rejected(self):
        with pytest.raises(PreconditionError):
            scan_min_r(frac_vals((1, 2), (2, 4)), 10)

    def test_single_type_rejected(self):
        with pytest.raises(PreconditionError):
            scan_min_r(frac_vals((1,), (2,)), 10)

    def test_bad_radius_policy_rejected(self):
        with pytest.raises(PreconditionError):
            scan_min_r(frac_vals((2, 1), (1, 2)), 5, radius_policy="r^2")

    def test_wider_radius_policy_accepted(self):
        vals = frac_vals((2, 1), (1, 2))
        wide = scan_min_r(vals, 50, radius_policy="2r")
        assert wide is not None and wide.r <= scan_min_r(vals, 50).r


class TestDistinctValuations:
    def test_proportional_pair(self):
        assert not distinct_valuations(frac_vals((1, 2), (2, 4)))

    def test_opposed_pair(self):
        assert distinct_valuations(frac_vals((1, 2), (2, 1)))

    def test_fixture_valuations_pairwise_distinct(self):
        assert distinct_valuations(
            frac_vals(
                (1, 2 - EPS, 0),
                (1 + 2 * EPS, 1 + EPS, 1),
                (0, 2 - EPS, 1),
            )
        )

    def test_zero_pattern_mismatch_is_distinct(self):
        assert distinct_valuations(frac_vals((0, 1), (1, 1)))


class TestEfBruteforce:
    def test_fixture_instance_has_complete_ef(self, table1_instance):
        found = ef_bruteforce(table1_instance)
        assert found is not None
        assert found.is_complete and check_ef(found).satisfied

    def test_single_item_has_none(self):
        assert ef_bruteforce(mk_instance([(1,)] * 2, (1,))) is None

    def test_first_hit_in_enumeration_order(self):
        found = ef_bruteforce(mk_instance([(2, 1), (1, 2)], (1, 1)))
        assert [b.counts for b in found.bundles] == [(1, 0), (0, 1)]
