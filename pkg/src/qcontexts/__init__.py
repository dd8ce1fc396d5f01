"""Finite-dimensional contexts, presheaves, valuations, and the
global-section (Kochen-Specker) search."""

from ._kernel import BACKEND as kernel_backend
from .coarse import (
    AugmentedProposition,
    LatticeElement,
    augment,
    canonical_probe,
    clopen_iso_check,
    clopen_of,
    coarse_functoriality_check,
    coarse_grain,
    coarse_grain_bruteforce,
    element_projector,
    lattice,
)
from .contexts import (
    Context,
    ContextPoset,
    SpectralFunctional,
    StateOnContext,
    algebra_from_operators,
    algebra_from_projectors,
    all_coarsenings,
    build_poset,
    check_state_global_element,
    check_weight_family,
    is_subalgebra,
    meet,
    restrict_functional,
    restrict_state,
    spectrum,
)
from .intervals import (
    CoarseGlobalElement,
    IntervalAssignment,
    ProjectorFamily,
    check_coarse_subobject,
    check_semantic_subobject,
    check_spectral_subobject,
    global_element_from_valuation,
    ideal_valuation,
    interval_from_valuation,
    probability_family,
    support,
    true_set,
    true_subobject,
)
from .ks import (
    RaySet,
    SectionAssignment,
    brute_force_sections,
    enumerate_global_sections,
    find_global_section,
    load_rayset,
    poset_from_rayset,
    validate_section,
)
from .linalg import (
    BackendError,
    DensityMatrix,
    EigenvalueFunction,
    HermitianOperator,
    Projector,
    ValidationError,
    apply_function,
    born_probability,
    spectral_decompose,
)
from .scalars import ExactComplex, QSqrt2, get_eps, set_eps
from .valuations import (
    Sieve,
    ValuationTable,
    check_valuation,
    natural_transformation_check,
    principal_sieve,
    pullback,
    state_valuation,
    valuation_table,
)

__version__ = "0.1.0"
