"""Baselines: SPSA and the noise-unaware model-based trust-region ablation."""
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .exceptions import OracleFailure
from .solver import SolverConfig, solve
from .trace import RunTrace

__all__ = ["SpsaConfig", "SpsaResult", "deterministic_mbtr_solve", "spsa_gradient", "spsa_solve"]


@dataclass(frozen=True)
class SpsaConfig:
    """Spall's standard gain sequences ``a_k = a/(k+1+A)^alpha`` and ``c_k = c0/(k+1)^gamma``."""

    a: float = 0.1
    c0: float = 0.1
    alpha: float = 0.602
    gamma: float = 0.101
    A: float = 0.0
    budget: int = 100
    seed: object = None

    def __post_init__(self):
        if self.a <= 0.0 or self.c0 <= 0.0:
            raise ValueError("gains a and c0 must be positive")
        if self.alpha < 0.0 or self.gamma < 0.0 or self.A < 0.0:
            raise ValueError("alpha, gamma and A must be nonnegative")
        if self.budget < 2:
            raise ValueError(f"budget must be >= 2, got {self.budget!r}")

    def a_k(self, k):
        return self.a / (k + 1 + self.A) ** self.alpha

    def c_k(self, k):
        return self.c0 / (k + 1) ** self.gamma


class SpsaResult(NamedTuple):
    theta_best: np.ndarray
    f_best: float
    trace: RunTrace


def spsa_gradient(f_plus, f_minus, c, delta):
    """Two-point simultaneous-perturbation estimate; ``1/delta == delta`` for Rademacher ``delta``."""
    return (f_plus - f_minus) / (2.0 * c) * np.asarray(delta, dtype=float)


def spsa_solve(oracle, theta0, config=SpsaConfig(), name="spsa"):
    """Run SPSA until the evaluation budget is spent.

    ``theta0`` is never evaluated. The best point is the evaluated point with
    the lowest noisy value.

    Raises:
        OracleFailure: if the oracle raises; the partial trace is attached.
    """
    rng = np.random.default_rng(config.seed)
    theta = np.asarray(theta0, dtype=float).copy()
    trace = RunTrace(solver=name, meta={"budget": config.budget, "dim": theta.shape[0]})
    best_x, best_f = None, np.inf

    def evaluate(x, k):
        try:
            value = oracle.evaluate(x).value
        except Exception as exc:
            raise OracleFailure(f"oracle failed at {x!r}: {exc}", trace) from exc
        trace.add_evaluation(x, value, k, "trial")
        return value

    k = 0
    while trace.n_evals + 2 <= config.budget:
        delta = rng.choice((-1.0, 1.0), size=theta.shape[0])
        c = config.c_k(k)
        x_plus, x_minus = theta + c * delta, theta - c * delta
        f_plus = evaluate(x_plus, k)
        f_minus = evaluate(x_minus, k)
        for x, f in ((x_plus, f_plus), (x_minus, f_minus)):
            if f < best_f:
                best_x, best_f = x.copy(), f
        theta = theta - config.a_k(k) * spsa_gradient(f_plus, f_minus, c, delta)
        k += 1
    return SpsaResult(best_x, float(best_f), trace)


def deterministic_mbtr_solve(oracle, theta0, config=SolverConfig(), name="det-mbtr"):
    """The same trust-region method with the noise estimate forced to zero."""
    return solve(oracle, theta0, replace(config, noise_mode="zero"), name=name)
