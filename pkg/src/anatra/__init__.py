"""Noise-aware model-based trust-region optimization for noisy black-box objectives."""
from .comparators import SpsaConfig, deterministic_mbtr_solve, spsa_solve
from .exceptions import (
    AnatraError,
    BenchError,
    BudgetTooSmall,
    DegeneratePrediction,
    InvalidShots,
    MissingNoiseInfo,
    OracleFailure,
    SingularGeometry,
)
from .geometry import affine_points, improve_poisedness
from .interp_models import (
    InterpolationSet,
    QuadraticModel,
    build_mfn_model,
    gradient_error_bound,
    lagrange_polynomials,
    poisedness,
)
from .oracles import NoiseSpec, NoisyEvaluation, ZerothOrderOracle, noisy_quadratic, noisy_rosenbrock
from .qaoa import Graph, QaoaCircuit, brute_force_maxcut, exact_expectation, shot_oracle
from .solver import SolverConfig, solve
from .trace import RunTrace
from .trs import solve_trs

__version__ = "0.1.0"

__all__ = [
    "AnatraError",
    "BenchError",
    "BudgetTooSmall",
    "DegeneratePrediction",
    "Graph",
    "InterpolationSet",
    "InvalidShots",
    "MissingNoiseInfo",
    "NoiseSpec",
    "NoisyEvaluation",
    "OracleFailure",
    "QaoaCircuit",
    "QuadraticModel",
    "RunTrace",
    "SingularGeometry",
    "SolverConfig",
    "SpsaConfig",
    "ZerothOrderOracle",
    "affine_points",
    "brute_force_maxcut",
    "build_mfn_model",
    "deterministic_mbtr_solve",
    "exact_expectation",
    "gradient_error_bound",
    "improve_poisedness",
    "lagrange_polynomials",
    "noisy_quadratic",
    "noisy_rosenbrock",
    "poisedness",
    "shot_oracle",
    "solve",
    "solve_trs",
    "spsa_solve",
]
