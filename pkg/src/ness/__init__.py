"""Variational MPO solver for steady states of driven-dissipative chains.

The density matrix is vectorized into a matrix product state, the
Lindblad generator encoded as a matrix product operator, and DMRG-style
sweeps with shift-and-invert Arnoldi site solves converge onto the
generator's null eigenvector.  A dense-space oracle for small chains and a
scanning CLI round out the package.
"""

from .errors import (
    ConfigError,
    DegenerateKernelError,
    DegenerateTraceError,
    DimensionMismatch,
    NessError,
    ResourceLimitError,
    SingularMatrixError,
)
from .linalg import RitzPair, arnoldi_eigs, contract, lu_solve, qr, svd_truncated
from .lmpo import LiouvillianMpo, apply_mpo, build_mpo, mpo_to_dense, quadratic_form
from .model import (
    JumpTerm,
    LocalTerm,
    ModelSpec,
    dissipator_superoperator,
    hamiltonian_terms,
    jump_terms,
    local_superoperator_terms,
    lowering_jump,
    pauli,
    super_from_sandwich,
    terms_to_dense,
)
from .mps import (
    MpsState,
    correlation,
    expectation,
    load_mps,
    move_center,
    norm,
    normalize,
    overlap,
    pad_bonds,
    product_init,
    random_state,
    reconstruct_dense,
    reduced_density_matrix,
    save_mps,
    trace_overlap,
)
from .oracle import (
    DenseLiouvillian,
    dense_liouvillian,
    dense_observable,
    evolve_rk4,
    ness_null_space,
    unvectorize_density,
    vectorize_density,
)
from .sweeper import (
    ConvergenceReport,
    EnvironmentCache,
    LocalProblem,
    SweepRecord,
    SweepSchedule,
    assemble_local,
    global_residual,
    init_environments,
    load_checkpoint,
    run,
    save_checkpoint,
    shift_invert_solve,
    sweep,
)

__version__ = "0.1.0"
