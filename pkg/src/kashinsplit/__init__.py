"""Randomized L1/L2 splitting of bounded orthonormal systems.

Select a large subset of a Walsh or Fourier character family on which the
L1 and L2 norms are equivalent up to an explicit factor, certify the
selection with concentration checks and heuristic/exact ratio witnesses,
and probe the supporting machinery (sign-process suprema, packing numbers,
Gaussian widths) empirically.
"""

__version__ = "0.1.0"

from .coset import (
    CosetCertificate,
    cardinality_audit,
    convolution_identity,
    find_coset,
    fwht,
    optimality_certificate,
    subgroup_sum_norms,
    xor_autocorrelation,
)
from .empirical import (
    DeviationReport,
    bernoulli_sup,
    bernoulli_sup_bound,
    moment_deviation,
    scaling_study,
)
from .entropy import (
    PackingResult,
    covering_volume_bound,
    gaussian_width,
    greedy_cover,
    greedy_packing,
    packing_ratio_ellipsoid,
    packing_ratio_maxpair,
    packing_sandwich,
    type2_ratio,
)
from .errors import ConfigError, InfeasibleError, RetryExhaustedError
from .metrics import (
    MixSpace,
    VectorSet,
    chain_dist,
    clarkson_slack,
    dual_norm_upper,
    ellipsoid_norm,
    increment_dist,
    lp_norm,
    max_abs_quad_on_ball,
    max_pairing,
    max_quad_on_ball,
    metric_inequalities,
    mix_norm,
    quad_sup_search,
    quad_sup_upper,
    sample_mix_ball,
)
from .selection import (
    SampledOperator,
    SplitResult,
    cardinality_window,
    feasibility_radius,
    isometry_check,
    kashin_split,
    lp_to_l1_factor,
    p_auto,
    ratio_search,
    rho_bound,
    sample_operator,
    slice_concentration,
)
from .systems import (
    OrthonormalSystem,
    SpanElement,
    gen_fourier,
    gen_walsh,
    load_system,
    save_system,
    validate_system,
    walsh_gram_exact,
    walsh_product_law_exact,
)
