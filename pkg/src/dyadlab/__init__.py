"""Exact dyadic computations for sparse operators, Muckenhoupt weights and square functions."""

from .grid import (
    DEFAULT_DEPTH,
    MAX_DEPTH,
    ROOT,
    DyadicInterval,
    ExponentParams,
    GridFunction,
    RegimeError,
    all_intervals,
    average,
    integrate,
    lorentz_p1_norm,
    lp_norm,
    weak_lp_norm,
    weighted_average,
)
from .sparse import (
    DensityProfile,
    PrincipalForest,
    SparseCollection,
    SparsifyError,
    SparsityCertificate,
    canonical_families,
    principal_cubes,
    random_sparse,
    sparsify,
    verify_sparse,
)
from .weights import (
    Characteristic,
    CharacteristicReport,
    Weight,
    ainfty_characteristic,
    ap_characteristic,
    characterize,
    dual_weight,
    dyadic_maximal,
    power_weight,
    random_weight,
)
from .operators import (
    CoefficientFamily,
    HaarCoefficients,
    char_functional,
    haar_sign,
    haar_square,
    haar_transform,
    positive_apply,
    sign_witness,
    sparse_apply,
)
from .norms import (
    BoundComparison,
    HaarSquareOperator,
    SparseOperator,
    SumCheck,
    TestingReport,
    TheoremBounds,
    TraceReport,
    WitnessFamily,
    carleson_gamma_check,
    dyadic_sum_check,
    haar_sign_witness_quotients,
    norm_lower_bound,
    prop_test_bounds,
    single_cube_T,
    single_cube_Tstar,
    testing_T,
    testing_Tstar,
    theorem_bounds,
    weaktype_trace,
)
from .experiments import (
    ExperimentConfig,
    SharpnessRow,
    battery,
    build_ak_family,
    lower_bound_experiment,
    sharpness_sweep,
)

__all__ = [
    "DEFAULT_DEPTH",
    "MAX_DEPTH",
    "ROOT",
    "DyadicInterval",
    "ExponentParams",
    "GridFunction",
    "RegimeError",
    "all_intervals",
    "average",
    "integrate",
    "lorentz_p1_norm",
    "lp_norm",
    "weak_lp_norm",
    "weighted_average",
    "DensityProfile",
    "PrincipalForest",
    "SparseCollection",
    "SparsifyError",
    "SparsityCertificate",
    "canonical_families",
    "principal_cubes",
    "random_sparse",
    "sparsify",
    "verify_sparse",
    "Characteristic",
    "CharacteristicReport",
    "Weight",
    "ainfty_characteristic",
    "ap_characteristic",
    "characterize",
    "dual_weight",
    "dyadic_maximal",
    "power_weight",
    "random_weight",
    "CoefficientFamily",
    "HaarCoefficients",
    "char_functional",
    "haar_sign",
    "haar_square",
    "haar_transform",
    "positive_apply",
    "sign_witness",
    "sparse_apply",
    "BoundComparison",
    "HaarSquareOperator",
    "SparseOperator",
    "SumCheck",
    "TestingReport",
    "TheoremBounds",
    "TraceReport",
    "WitnessFamily",
    "carleson_gamma_check",
    "dyadic_sum_check",
    "haar_sign_witness_quotients",
    "norm_lower_bound",
    "prop_test_bounds",
    "single_cube_T",
    "single_cube_Tstar",
    "testing_T",
    "testing_Tstar",
    "theorem_bounds",
    "weaktype_trace",
    "ExperimentConfig",
    "SharpnessRow",
    "battery",
    "build_ak_family",
    "lower_bound_experiment",
    "sharpness_sweep",
]

__version__ = "0.1.0"
