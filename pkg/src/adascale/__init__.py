"""Primal-dual affine scaling LP solver.

The per-iteration normal equations (A D A^T) dy = A x are solved either by
a direct Cholesky backend or by a rank-one-update cascade that reuses a
factorization of A A^T across iterations.  Hot kernels live in a compiled
extension with a numpy fallback selected at import time.
"""

from ._core import active_core
from .errors import (
    AdascaleError,
    DimensionMismatch,
    GenerationError,
    NonFiniteEntry,
    NotFeasible,
    NotInterior,
    NotPositiveDefinite,
    RankDeficient,
    SchemaError,
    SingularUpdate,
)
from .linalg import (
    DenseMatrix,
    LowerTriangular,
    cholesky_factor,
    cholesky_solve,
    dot_tree,
    gram,
    mat_t_vec,
    mat_vec,
    scaled_gram,
)
from .model import (
    InteriorPoint,
    StandardFormLP,
    gen_random_feasible,
    parse_problem,
    serialize_problem,
    validate,
)
from .normal import (
    AugWorkspace,
    WoodburyBasis,
    init_workspace,
    prepare_woodbury,
    rank_one_step,
    solve_direct,
    solve_woodbury,
)
from .parallel import SweepPlan, column_partition, parallel_sweep, solve_woodbury_parallel
from .solver import (
    Directions,
    SolveOptions,
    Status,
    TraceRecord,
    compute_directions,
    duality_gap,
    scaling_diag,
    solve_lp,
    step_length,
    z_inverse_check,
)

__version__ = "0.1.0"

__all__ = [
    "AdascaleError",
    "AugWorkspace",
    "DenseMatrix",
    "DimensionMismatch",
    "Directions",
    "GenerationError",
    "InteriorPoint",
    "LowerTriangular",
    "NonFiniteEntry",
    "NotFeasible",
    "NotInterior",
    "NotPositiveDefinite",
    "RankDeficient",
    "SchemaError",
    "SingularUpdate",
    "SolveOptions",
    "StandardFormLP",
    "Status",
    "SweepPlan",
    "TraceRecord",
    "WoodburyBasis",
    "active_core",
    "cholesky_factor",
    "cholesky_solve",
    "column_partition",
    "compute_directions",
    "dot_tree",
    "duality_gap",
    "gen_random_feasible",
    "gram",
    "init_workspace",
    "mat_t_vec",
    "mat_vec",
    "parallel_sweep",
    "parse_problem",
    "prepare_woodbury",
    "rank_one_step",
    "scaled_gram",
    "scaling_diag",
    "serialize_problem",
    "solve_direct",
    "solve_lp",
    "solve_woodbury",
    "solve_woodbury_parallel",
    "step_length",
    "validate",
    "z_inverse_check",
]
