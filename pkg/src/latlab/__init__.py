"""Exact-arithmetic and numerical laboratory for diagonal flows on the
space of unimodular lattices in R^3.

The library layers are, from the bottom up: exact rational linear algebra
(`exact`), the flow and root-space structure (`lie`), short-vector and
injectivity-radius geometry (`latgeom`), rational points and their
denominators and counts (`ratpoints`), orbit decay and classification
(`diophantine`), and dimension bounds with the tree construction
(`dimension`).  The `cli` module exposes all of it as a batch tool.
"""

from .exact import (
    BruhatCell,
    RationalFlag,
    bruhat_decompose,
    flag_adapted_basis,
    frac,
    lower_triangularize,
    mat3,
    weyl_matrix,
)
from .lie import (
    Box3,
    ConstantsProfile,
    FlowParams,
    GaugeValue,
    RootCoords,
    UnipotentUpper,
    group_distance,
    log_unipotent,
    reduce_mod_gamma,
)
from .latgeom import (
    EnumerationBudgetError,
    InjectivityRadius,
    LatticeBasis,
    SearchRadiusError,
    ShortVectorResult,
    injectivity_radius,
    lll_reduce,
    shortest_vector,
    systole,
)
from .ratpoints import (
    CoordBox,
    CountBudgetError,
    CountSpec,
    RationalPointCanon,
    TruncationMarker,
    canonicalize,
    count_band,
    count_family,
    denominator_formula,
    denominator_oracle,
    enumerate_band,
    expand,
    kernu_coordinate,
    polar_component,
    residue_pair_count,
)
from .diophantine import (
    GammaWitness,
    OrbitSample,
    OrbitSeries,
    RationalityStructure,
    WeylType,
    estimate_type,
    family_membership,
    gamma_condition_check,
    nonemptiness_threshold,
    orbit_eta_series,
    rationality_structure,
    weyl_type,
)
from .dimension import (
    EMPTY_SET,
    FamilyExponents,
    TreeLevel,
    box_counting_dim,
    cantor_build,
    critical_dimension,
    dim_full_space,
    dim_upper_bound,
    disjoint_shrink_boxes,
    family_exponents,
    treelike_lower_bound,
)

__version__ = "0.1.0"

__all__ = [
    "Box3",
    "BruhatCell",
    "ConstantsProfile",
    "CoordBox",
    "CountBudgetError",
    "CountSpec",
    "EMPTY_SET",
    "EnumerationBudgetError",
    "FamilyExponents",
    "FlowParams",
    "GammaWitness",
    "GaugeValue",
    "InjectivityRadius",
    "LatticeBasis",
    "OrbitSample",
    "OrbitSeries",
    "RationalFlag",
    "RationalPointCanon",
    "RationalityStructure",
    "RootCoords",
    "SearchRadiusError",
    "ShortVectorResult",
    "TreeLevel",
    "TruncationMarker",
    "UnipotentUpper",
    "WeylType",
    "box_counting_dim",
    "bruhat_decompose",
    "canonicalize",
    "cantor_build",
    "count_band",
    "count_family",
    "critical_dimension",
    "denominator_formula",
    "denominator_oracle",
    "dim_full_space",
    "dim_upper_bound",
    "disjoint_shrink_boxes",
    "enumerate_band",
    "estimate_type",
    "expand",
    "family_exponents",
    "family_membership",
    "flag_adapted_basis",
    "frac",
    "gamma_condition_check",
    "group_distance",
    "injectivity_radius",
    "kernu_coordinate",
    "lll_reduce",
    "log_unipotent",
    "lower_triangularize",
    "mat3",
    "nonemptiness_threshold",
    "orbit_eta_series",
    "polar_component",
    "rationality_structure",
    "reduce_mod_gamma",
    "residue_pair_count",
    "shortest_vector",
    "systole",
    "treelike_lower_bound",
    "weyl_matrix",
    "weyl_type",
]
