"""Exact-arithmetic toolkit for hyperelliptic Klein coverings.

Marked point configurations on the projective line, the even-subset
2-torsion calculus of hyperelliptic Jacobians, symbolic covering towers with
a Klein deck group, the forward Prym datum, and its explicit inverse with
round-trip verification.
"""

from .errors import (
    DegenerateConfiguration,
    InvalidConfig,
    InvalidCover,
    InvalidDatum,
    InvalidRamification,
    KleinPrymError,
    NoKleinSubgroup,
    NotInPrymImage,
    NotLiftableRepresentation,
    OddParity,
    SingularCurve,
    UniverseMismatch,
    UnsupportedNode,
)
from .projline import (
    INF,
    MarkedConfig,
    Mobius,
    ProjPoint,
    Scalar,
    canonical_form,
    cross_ratio,
    equivalent,
    mobius_from_triples,
)
from .torsion import (
    TwoTorsionClass,
    TwoTorsionSubgroup,
    WUniverse,
    add,
    class_from_subset,
    classify_klein,
    intersect,
    is_isotropic,
    member,
    norm_2tor,
    order,
    pullback_2tor,
    span,
    subgroup_sum,
    weil_pairing,
)
from .idempotents import DeckRingElem, norm_endos, verify_decomposition
from .towers import (
    CoverEdge,
    CurveNode,
    Tower,
    accola_check,
    build_tower,
    check_b2_hyperelliptic,
    check_b4_hyperelliptic,
    check_etale_hyperelliptic,
    fixed_point_profile,
    klein_classification,
    rh_genus,
    validate_tower,
)
from .prym import (
    PrymDatum,
    addition_kernel,
    decomposition_check,
    embed_2torsion,
    gluing_group,
    polarisation_type,
    prym_datum,
    triple_intersection,
)
from .reconstruct import (
    ReconstructionResult,
    fiber_enumerate_b4,
    invert,
    invert_branched12,
    invert_etale_klein,
    invert_mixed4,
    invert_mixed8,
    invert_unlabeled,
    noninjectivity_witness_b2,
    roundtrip,
)
from .family import (
    RatPoly,
    build_family_poly,
    family_genus,
    verify_involutions,
    verify_p1_quotient,
)

__version__ = "0.1.0"
