"""Low-rank doubling solver for large-scale continuous-time algebraic
Riccati equations, with a dense doubling iteration and a Hamiltonian
eigen-oracle as verification baselines, plus a benchmark CLI."""

from .problems import (
    CareProblem,
    ConditioningError,
    DENSE_CAP,
    LowRankSymmetric,
    NoStabilizingSolutionError,
    ORACLE_CAP,
    SizeCapError,
    SolveReport,
    care_oracle_small,
    dual_problem,
    hamiltonian,
    make_example1,
    make_example2,
    qnorm,
    residual_dense,
    spectral_norm_sym,
)
from .cayley import (
    BaseDoublingOperator,
    InitialData,
    ShiftSingularError,
    ShiftedFactorization,
    build_shifted,
    choose_alpha,
    init_dense,
    init_lowrank,
)
from .dense import (
    AddaDenseState,
    DoublingIdentityReport,
    SingularUpdateError,
    VerificationContext,
    adda_solve_dense,
    adda_step_dense,
    build_verification_context,
    verify_doubling_identities,
    verify_symplectic_pencil,
)
from .lowrank import (
    BreakdownError,
    ImplicitAhat,
    RaddaState,
    apply_ahat,
    radda_solve,
    radda_step,
    residual_lowrank,
    truncate_factors,
)
from .serialize import (
    load_problem,
    load_solution,
    problem_from_dict,
    problem_to_dict,
    save_problem,
    save_solution,
    solution_from_dict,
    solution_to_dict,
)

__version__ = "0.1.0"

__all__ = [
    "AddaDenseState",
    "BaseDoublingOperator",
    "BreakdownError",
    "CareProblem",
    "ConditioningError",
    "DENSE_CAP",
    "DoublingIdentityReport",
    "ImplicitAhat",
    "InitialData",
    "LowRankSymmetric",
    "NoStabilizingSolutionError",
    "ORACLE_CAP",
    "RaddaState",
    "ShiftSingularError",
    "ShiftedFactorization",
    "SingularUpdateError",
    "SizeCapError",
    "SolveReport",
    "VerificationContext",
    "adda_solve_dense",
    "adda_step_dense",
    "apply_ahat",
    "build_shifted",
    "build_verification_context",
    "care_oracle_small",
    "choose_alpha",
    "dual_problem",
    "hamiltonian",
    "init_dense",
    "init_lowrank",
    "load_problem",
    "load_solution",
    "make_example1",
    "make_example2",
    "problem_from_dict",
    "problem_to_dict",
    "qnorm",
    "radda_solve",
    "radda_step",
    "residual_dense",
    "residual_lowrank",
    "save_problem",
    "save_solution",
    "solution_from_dict",
    "solution_to_dict",
    "spectral_norm_sym",
    "truncate_factors",
    "verify_doubling_identities",
    "verify_symplectic_pencil",
]
