"""fatoulab: numerical harmonic analysis of convolution-type approximate identities.

Kernels phi_r on the circle, convergence regions lambda(r), the maximal
operators they control, and a constructive divergence example.
"""

from .circle import (
    CircleGrid,
    PeriodicFunction,
    QuadratureReport,
    constant,
    cosine,
    function_from_spec,
    grid_for,
    indicator,
    integrate,
    linear_combination,
    local_mean,
    lp_norm,
    make_grid,
    power_singularity,
    required_n,
    sampled,
    total_variation,
)
from .convolution import (
    ConvergenceTrace,
    convergence_trace,
    convolve_at,
    convolve_grid,
    lambda_sup_deviation,
)
from .counterexample import (
    BVMeanReport,
    ConstructionError,
    CounterexampleSpec,
    DeltaSet,
    DivergenceProfile,
    assemble,
    block_lower_bound,
    build_fr,
    build_spec,
    bv_mean_check,
    divergence_profile,
    select_radii,
)
from .functionals import (
    FunctionalEstimate,
    RegionFunction,
    default_ladder,
    lemma_phi_star_bounds_check,
    load_region_table,
    mu_of_r,
    phi_star_moment,
    pi_functional,
    pi_infinity,
    power_log,
    region_from_spec,
    small_c_phi,
    synthesize_region,
    tabulated,
)
from .kernels import (
    POISSON,
    AxiomReport,
    KernelFamily,
    KernelSlice,
    c_phi_estimate,
    check_identity_axioms,
    custom_family,
    family_from_spec,
    frac_poisson,
    load_kernel_table,
    majorant,
    normalizer,
    q_norm,
    sup_norm,
)
from .maximal import (
    BoundReport,
    MaximalField,
    annulus_bound_check,
    hl_maximal,
    holder_bound_check,
    measured_constants,
    phi_lambda_star,
    pointwise_bound_check,
    split_sups,
    t_a_check,
    tail_bound_check,
    theorem2_constant,
    weak_type_ratio,
)

__version__ = "0.1.0"
