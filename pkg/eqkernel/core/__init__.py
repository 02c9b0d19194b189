"""
eqkernel.core

Numerical core: C2QE states, shift-invariant kernels, (quantum) random Fourier
features, composition and projected kernels, and Mercer truncations.
"""

from ._errors import (
    BoxViolationError,
    CircuitError,
    ConfigError,
    DimensionError,
    EqkernelError,
    GuardError,
    NormalizationError,
    SamplerError,
    SmoothnessError,
    SymmetryError,
)
from .circuit import EmbeddingCircuit, ReducedStateVector, rdm_feature_vector, reduced_density_matrices, statevector_encode
from .composition import (
    CompositionKernel,
    Preprocessor,
    composition_kernel_eval,
    projected_kernel_bound,
    projected_kernel_eval,
    qrff_pp_estimate,
    rff_pp_build,
    rff_pp_features,
)
from .mercer import (
    FiniteFeatureMap,
    MercerTruncation,
    gram_eigendecompose,
    mercer_to_eqk,
    nystrom_features,
    truncation_error_bound,
)
from .pauli_state import (
    L1UnitVector,
    L2UnitVector,
    PauliMixtureState,
    PauliWordIndex,
    c2qe_encode,
    hs_inner,
    hs_inner_sampled,
    qubit_count_for,
    renormalized_inner,
)
from .qrff import QrffModel, g_factor, qrff_encode, qrff_kernel_estimate
from .rff import (
    BoundReport,
    DomainBox,
    RffMap,
    build_rff_map,
    central_second_derivative,
    failure_bound,
    required_dimension,
    required_precision_bits,
    rff_features,
    rff_kernel_estimate,
    smooth_dimension_bound,
    sup_error_estimate,
)
from .spectral import (
    CustomKernel,
    GaussianKernel,
    ShiftInvariantKernel,
    TrigPolynomial,
    TrigPolynomialKernel,
    spectral_variance,
    trig_poly_is_even,
    trig_poly_is_psd,
)
