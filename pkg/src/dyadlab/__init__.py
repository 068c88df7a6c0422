"""dyadlab: a desk-scale laboratory for dyadic harmonic analysis on finite trees."""

from .lattice import (
    Cube,
    DyadicTree,
    GridFunction,
    LatticeError,
    CoverError,
    average,
    haar_difference,
    one_third_cover,
    restrict_tree,
)
from .weights import (
    BloomTriple,
    ExponentConfig,
    Weight,
    ap_characteristic,
    bloom_triple,
    carleson_norm,
    divergence_flag,
    dual_weight,
    fujii_wilson_ainfty,
    lower_joint_characteristic,
    parse_weight,
    power_weight_cube_lower_bound,
    relative_ainfty_carleson_ratio,
    upper_joint_characteristic,
)
from .operators import (
    commutator_test_pairs,
    commutator,
    commutator_handle,
    hilbert_transform,
    martingale_transform,
    maximal,
    multiplication_handle,
    paraproduct,
    paraproduct_handle,
    sharp_maximal,
    sparse_op,
    sparse_op_exponent,
)
from .sparse import (
    SparseFamily,
    StoppingMassError,
    carleson_from_sparse,
    domination_check,
    domination_worst_case,
    family_from_text,
    family_to_text,
    paraproduct_sparse_dominate,
    verify_sparse,
)
from .norms import (
    NormReport,
    bmo_alpha_norm,
    discretized_sharp_sup,
    empirical_operator_norm,
    lp_norm,
    multiplier_norm,
    q_ge_p_testing,
    sequential_testing_functional,
    sharp_maximal_r_norm,
    weight_necessity_bound,
)

__version__ = "0.1.0"
