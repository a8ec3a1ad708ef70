"""Fair division of multisets of typed indivisible items.

Exact-rational toolkit: EF/EF1/EFX checking with witnesses, envy-graph
de-cycling, constructive EFX allocators (single type, shared preference
order, two types), an envy-free feasibility scanner built on a unimodular
change of variables, plane-geometry machinery for the two-type case, and
brute-force oracles for ground truth on small instances.
"""

__version__ = "0.1.0"

from .core import (
    AdditiveValuation,
    Allocation,
    Instance,
    ItemVector,
    Rational,
    allocation_from_json,
    allocation_to_json,
    instance_from_json,
    instance_to_json,
)
from .errors import (
    DimensionMismatchError,
    EnumerationCapError,
    FairDivError,
    InvariantViolationError,
    ItemUnderflowError,
    PreconditionError,
    SchemaError,
    UnsupportedInstanceError,
)
from .fairness import (
    EnvyGraph,
    FairnessReport,
    FairnessWitness,
    check_ef,
    check_ef1,
    check_efx,
    decycle,
    envies,
    envy_graph,
    find_source,
)
from .algorithms import (
    Alg2Trace,
    PreferenceOrder,
    allocate,
    allocate_identical_prefs,
    allocate_single_type,
    allocate_two_types,
    common_preference_order,
    route_for,
)
from .ef_feasibility import (
    GammaSystem,
    ScanResult,
    XiVector,
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
from .geometry import (
    CounterexampleReport,
    MEAResult,
    allocate_two_types_geometric,
    apply_shift,
    counterexample_instance,
    counterexample_t3,
    intercepts,
    most_envious_agent,
    pareto_dominates,
    reachable_mea_t2,
)
from .oracle import EnumerationPlan, enumerate_complete, exists_fair

__all__ = [name for name in dir() if not name.startswith("_")]
