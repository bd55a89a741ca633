"""Clayton-copula models for paired binary outcomes and tests of equal group rates."""

__version__ = "0.1.0"

from .copula import (
    INDEPENDENCE,
    CellProbs,
    ClassicalEquivalents,
    cell_probs,
    classical_equivalents,
    clayton_cdf,
    copula_from_classical,
    kendall_tau,
    pearson_rho,
    tau_to_theta,
)
from .errors import (
    ClaytonPairError,
    DegenerateTable,
    DomainError,
    H0ViolationInSpec,
    NoConvergence,
    NonfiniteLikelihood,
    SamplingExhausted,
    SingularInformation,
    TableError,
)
from .estimation import FitResult, fit
from .fisher import InfoMatrix, assemble_info, info_pi_pi, info_pi_theta, info_theta_theta, solve_arrowhead
from .frequency import FrequencyTable
from .homogeneity import Method, TestReport, lr_test, run_tests, score_test, wald_test
from .likelihood import Hypothesis, ModelParams, loglik, score_pi, score_theta, score_vector
from .simulation import SimSpec, SimSummary, SweepSpec, generate_table, run_power, run_sweep, run_tie

__all__ = [
    "INDEPENDENCE",
    "CellProbs",
    "ClassicalEquivalents",
    "ClaytonPairError",
    "DegenerateTable",
    "DomainError",
    "FitResult",
    "FrequencyTable",
    "H0ViolationInSpec",
    "Hypothesis",
    "InfoMatrix",
    "Method",
    "ModelParams",
    "NoConvergence",
    "NonfiniteLikelihood",
    "SamplingExhausted",
    "SimSpec",
    "SimSummary",
    "SingularInformation",
    "SweepSpec",
    "TableError",
    "TestReport",
    "assemble_info",
    "cell_probs",
    "classical_equivalents",
    "clayton_cdf",
    "copula_from_classical",
    "fit",
    "generate_table",
    "info_pi_pi",
    "info_pi_theta",
    "info_theta_theta",
    "kendall_tau",
    "loglik",
    "lr_test",
    "pearson_rho",
    "run_power",
    "run_sweep",
    "run_tests",
    "run_tie",
    "score_pi",
    "score_test",
    "score_theta",
    "score_vector",
    "solve_arrowhead",
    "tau_to_theta",
    "wald_test",
]
