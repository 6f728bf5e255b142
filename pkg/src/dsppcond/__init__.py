"""Partial condition numbers for double saddle point systems.

The package computes how sensitive a projected part L w of the solution of

    [ A   B^T  0   ] [x]   [b1]
    [ B  -D    C^T ] [y] = [b2]
    [ 0   C    E   ] [z]   [b3]

is to perturbations of the data: normwise (2-norm), mixed and componentwise
(max-norm) condition numbers, cheap upper bounds, structure-respecting
variants (symmetric, symmetric Toeplitz, diagonal blocks), a specialization
to equality constrained indefinite least squares, and a seeded experiment
harness that validates the closed forms against random perturbations.
"""

from ._version import __version__
from .errors import (
    DimensionMismatch,
    DominanceViolation,
    DsppcondError,
    IncompatibleZeroPattern,
    IndefiniteProblem,
    MalformedProblem,
    NotInSubspace,
    RankDeficientC,
    SingularMatrix,
    ZeroMatrix,
    ZeroXi,
)
from .linalg import (
    LuSolver,
    ddagger,
    hadamard,
    induced_norm,
    kron,
    solve,
    spectral_top,
    unvec,
    vec,
)
from .dspp import (
    SELECTOR_KINDS,
    DsppBlocks,
    Selector,
    Solution,
    assemble,
    factorize,
    norm_fro_system,
    problem_from_dict,
    problem_to_dict,
    selector,
    solve_dspp,
)
from .partial_cn import (
    CnValue,
    PerturbationWeights,
    XiChoice,
    build_g,
    build_j,
    definition_ratio,
    extremal_direction,
    first_order_delta,
    inf_cn,
    inf_cn_upper,
    inv_rows,
    ncn,
    ncn_upper,
    unified_cn,
)
from .structured import (
    STRUCTURE_KINDS,
    StructureBasis,
    StructureTriple,
    structure_basis,
    structured_inf_cn,
    structured_ncn,
)
from .eils import (
    EilsProblem,
    EilsSolution,
    default_scalar_weights,
    eils_cn,
    eils_from_dict,
    eils_reduce,
    eils_to_dict,
    signature_matrix,
    solve_eils,
)
from .experiments import (
    DEFAULT_SELECTORS,
    FAMILIES,
    RNG_ALGORITHM,
    ExperimentRow,
    FirstOrderCheck,
    PerturbationSet,
    apply_perturbation,
    epsilons,
    first_order_residual,
    forward_errors,
    gen_example1,
    gen_example2,
    perturb,
    report_meta,
    run_experiment,
    write_csv_report,
    write_json_report,
)

__all__ = [
    "__version__",
    # errors
    "DsppcondError",
    "DimensionMismatch",
    "SingularMatrix",
    "ZeroMatrix",
    "ZeroXi",
    "NotInSubspace",
    "RankDeficientC",
    "IndefiniteProblem",
    "IncompatibleZeroPattern",
    "MalformedProblem",
    "DominanceViolation",
    # dense kernels
    "vec",
    "unvec",
    "kron",
    "ddagger",
    "hadamard",
    "induced_norm",
    "LuSolver",
    "solve",
    "spectral_top",
    # problem container and solve
    "DsppBlocks",
    "Solution",
    "Selector",
    "SELECTOR_KINDS",
    "assemble",
    "factorize",
    "solve_dspp",
    "selector",
    "problem_from_dict",
    "problem_to_dict",
    "norm_fro_system",
    # condition numbers
    "CnValue",
    "PerturbationWeights",
    "XiChoice",
    "build_g",
    "build_j",
    "inv_rows",
    "first_order_delta",
    "unified_cn",
    "ncn",
    "ncn_upper",
    "inf_cn",
    "inf_cn_upper",
    "definition_ratio",
    "extremal_direction",
    # structured variants
    "STRUCTURE_KINDS",
    "StructureBasis",
    "StructureTriple",
    "structure_basis",
    "structured_ncn",
    "structured_inf_cn",
    # constrained least squares
    "EilsProblem",
    "EilsSolution",
    "signature_matrix",
    "eils_reduce",
    "solve_eils",
    "eils_cn",
    "default_scalar_weights",
    "eils_from_dict",
    "eils_to_dict",
    # experiments
    "RNG_ALGORITHM",
    "FAMILIES",
    "DEFAULT_SELECTORS",
    "PerturbationSet",
    "FirstOrderCheck",
    "ExperimentRow",
    "gen_example1",
    "gen_example2",
    "perturb",
    "apply_perturbation",
    "forward_errors",
    "epsilons",
    "first_order_residual",
    "run_experiment",
    "report_meta",
    "write_csv_report",
    "write_json_report",
]
