""" eqkernel/core/_defaults.py """

# normalization
NORM_INPUT_TOL = 1e-9        # accepted deviation of user vectors from unit norm
NORM_INTERNAL_TOL = 1e-12    # invariant on stored states

# density matrices
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
DENSITY_EIG_TOL = 1e-10
DENSE_MAX_QUBITS = 12        # 4096 x 4096 complex
DENSE_CHECK_QUBITS = 5       # dense cross-checks run automatically up to here

# kernels and Gram matrices
KERNEL_TOL = 1e-12           # k(0) = 1 and evenness
PSD_COEF_TOL = 1e-12         # trig-poly cosine coefficients
GRAM_EIG_TOL = 1e-8          # eigensolver noise floor on Gram spectra
SYMMETRY_TOL = 1e-10

# random Fourier features
MAX_GRID_PAIRS = 10**8
GRID_BLOCK_ROWS = 512
BOUND_PREFACTOR_LOG2 = 8     # the 2^8 prefactor of the uniform-convergence bound
DEFAULT_EXPONENT_CONSTANT = 8
GROWTH_TIMED_MAX_D = 4096     # largest map actually built per dimension in the growth report

# finite differences
FD_STEPS = (1e-2, 1e-3)
FD_AGREEMENT_TOL = 1e-3

# circuits and preprocessing
CIRCUIT_MAX_QUBITS = 10
QRFF_MAX_QUBITS = 12
BOX_TOL = 1e-9
RDM_TOL = 1e-10
STATE_NORM_TOL = 1e-12
