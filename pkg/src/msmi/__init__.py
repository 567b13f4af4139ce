"""Micro-state counting estimators for Shannon and Boltzmann-Gibbs entropy.

The package measures how many permutation arrangements of quantile-like
witness sequences reproduce a target distribution's types or moments, and
turns those counts into entropy and mutual-information estimates with
matching analytic references.
"""

from msmi.core import (
    Alphabet,
    BudgetExceededError,
    JointProbTensor,
    JointType,
    LogCount,
    Permutation,
    ProbVector,
    SortedVector,
    TypeVector,
    derive_seed,
)
from msmi.continuous import (
    MomentWindow,
    QuantileSequence,
    SpotCheckReport,
    VolumeEstimate,
    anchor_inclusion_spot_check,
    joint_moment_membership,
    moment_band_volume_estimate,
    quantile_sequence,
    sym_set_anchored_mc_estimate,
)
from msmi.discrete import (
    BandSpec,
    InclusionReport,
    LogProbEstimate,
    MarginalTypeTuple,
    NTooSmallError,
    anchor_inclusion_check,
    clopper_pearson_log,
    discrete_quantile_sequence,
    enumerate_band_types,
    estimate_rate,
    stirling_max_excess,
    sym_set_brute_count,
    sym_set_log_lower_bound,
    sym_set_log_upper_bound,
    sym_set_mc_estimate,
    sym_set_membership,
    sym_set_rate,
    type_class_bound_violations,
    typical_set_log_count,
)
from msmi.entropy import (
    DiscreteOnReals,
    DistributionSpec,
    MomentOracle,
    ProductOfSpecs,
    QuadratureError,
    TiltedUniformSquare,
    UniformInterval,
    bg_entropy_quadrature,
    continuous_mi_quadrature,
    discrete_mutual_information,
    relative_entropy,
    shannon_entropy,
)
from msmi.harness import (
    ExtrapolationResult,
    StudyConfig,
    StudyRow,
    emit_report,
    extrapolate_rate,
    load_config,
    parse_config,
    rows_to_csv,
    run_study,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "ProbVector",
    "JointProbTensor",
    "TypeVector",
    "JointType",
    "Permutation",
    "SortedVector",
    "LogCount",
    "BudgetExceededError",
    "derive_seed",
    "BandSpec",
    "MarginalTypeTuple",
    "LogProbEstimate",
    "InclusionReport",
    "NTooSmallError",
    "enumerate_band_types",
    "typical_set_log_count",
    "sym_set_membership",
    "sym_set_brute_count",
    "sym_set_log_upper_bound",
    "sym_set_log_lower_bound",
    "sym_set_rate",
    "sym_set_mc_estimate",
    "estimate_rate",
    "clopper_pearson_log",
    "discrete_quantile_sequence",
    "anchor_inclusion_check",
    "type_class_bound_violations",
    "stirling_max_excess",
    "MomentWindow",
    "QuantileSequence",
    "VolumeEstimate",
    "SpotCheckReport",
    "quantile_sequence",
    "joint_moment_membership",
    "sym_set_anchored_mc_estimate",
    "moment_band_volume_estimate",
    "anchor_inclusion_spot_check",
    "DistributionSpec",
    "UniformInterval",
    "TiltedUniformSquare",
    "DiscreteOnReals",
    "ProductOfSpecs",
    "MomentOracle",
    "QuadratureError",
    "shannon_entropy",
    "relative_entropy",
    "discrete_mutual_information",
    "bg_entropy_quadrature",
    "continuous_mi_quadrature",
    "StudyConfig",
    "StudyRow",
    "ExtrapolationResult",
    "parse_config",
    "load_config",
    "run_study",
    "rows_to_csv",
    "write_csv",
    "extrapolate_rate",
    "emit_report",
    "__version__",
]
