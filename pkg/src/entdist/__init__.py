"""Entanglement distillation workbench.

Density operators and operation algebra on small bipartite spaces, the
isotropic-state reduction protocols with closed-form fidelity maps,
entanglement bounds, and protocol-trace rate accounting with the transforms
between the distillable-entanglement rate definitions.
"""

from .bounds import (
    FormationBounds,
    HashingRate,
    binary_entropy,
    ef_numeric_estimate,
    formation_bounds_isotropic,
    hashing_rate,
    ppt_bound_isotropic,
)
from .distillation import (
    BranchMargins,
    BranchOutcome,
    CompilerConfig,
    CompileResult,
    ProtocolTrace,
    RateReport,
    TraceStep,
    discard_padding,
    dims_are_powers_of_two,
    floor_dims_to_powers_of_two,
    formation_rate_intervals,
    min_branch_fidelity,
    power_of_two_transform,
    rate_and_residual,
    rate_report,
    single_branch_rate,
    tensor_power_compile,
)
from .linalg import (
    BipartiteLabel,
    DensityOperator,
    haar_unitary,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    partial_transpose_density,
    random_density,
    tensor,
)
from .operations import (
    LinearAction,
    QuantumOperation,
    SeparableWitness,
    SubOperation,
    apply_operation,
    choi_matrix,
    compose,
    forget,
    forget_all,
    identity_operation,
    is_completely_positive,
    is_ppt_operation,
    is_trace_preserving,
    make_local,
    make_one_local,
    natural_product_witness,
    ppt_conjugate,
    tensor_operations,
    verify_separable_form,
)
from .protocols import (
    ReductionPlan,
    exact_twirl,
    factor_tracing_fidelity,
    factor_tracing_op,
    monte_carlo_twirl,
    reduce_dimension,
    reduce_dimension_fidelity,
    reduction_plan,
    subspace_measurement_fidelity,
    subspace_measurement_op,
)
from .states import (
    IsotropicParams,
    fidelity,
    isotropic,
    isotropic_params_of,
    isotropic_state,
    max_entangled_ket,
    max_entangled_projector,
)

__version__ = "0.1.0"
