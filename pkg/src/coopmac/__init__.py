"""Sum-capacity bounds for discrete MACs with a rate-limited cooperation facilitator."""

from coopmac.errors import DomainError, ResourceError, ValidationError
from coopmac.info import (
    CfConfig,
    DiscreteMac,
    JointInputDist,
    conditional_mutual_information,
    entropy,
    kl_divergence,
    l1_distance,
    mutual_dependence,
    nth_extension,
    sum_rate_information,
)
from coopmac.channels import (
    binary_adder_mac,
    first_input_mac,
    identity_pair_mac,
    load_channel,
    random_mac,
    useless_mac,
)
from coopmac.sigma import (
    OptimizerConfig,
    SigmaEvaluation,
    brute_force_oracle,
    full_knowledge_cin,
    max_mi_independent,
    max_mi_joint,
    sigma1,
    sigma_n,
)
from coopmac.structure import (
    CardinalityReduction,
    DueckResult,
    concat_distributions,
    dueck_decompose,
    reduce_cardinality,
    time_share,
)
from coopmac.bounds import (
    BoundCurve,
    CstarVerdict,
    cin_delta_bound,
    concave_diff_bound,
    csum_lower,
    csum_upper,
    cstar_test,
    forwarding_bounds,
    sigma1_modulus,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "ResourceError",
    "ValidationError",
    "CfConfig",
    "DiscreteMac",
    "JointInputDist",
    "conditional_mutual_information",
    "entropy",
    "kl_divergence",
    "l1_distance",
    "mutual_dependence",
    "nth_extension",
    "sum_rate_information",
    "binary_adder_mac",
    "first_input_mac",
    "identity_pair_mac",
    "load_channel",
    "random_mac",
    "useless_mac",
    "OptimizerConfig",
    "SigmaEvaluation",
    "brute_force_oracle",
    "full_knowledge_cin",
    "max_mi_independent",
    "max_mi_joint",
    "sigma1",
    "sigma_n",
    "CardinalityReduction",
    "DueckResult",
    "concat_distributions",
    "dueck_decompose",
    "reduce_cardinality",
    "time_share",
    "BoundCurve",
    "CstarVerdict",
    "cin_delta_bound",
    "concave_diff_bound",
    "csum_lower",
    "csum_upper",
    "cstar_test",
    "forwarding_bounds",
    "sigma1_modulus",
]
