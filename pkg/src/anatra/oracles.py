"""Zeroth-order oracles and the synthetic noisy test problems."""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "NoiseSpec",
    "NoisyEvaluation",
    "ZerothOrderOracle",
    "noisy_quadratic",
    "noisy_rosenbrock",
    "quadratic",
    "rosenbrock",
]

NOISE_KINDS = ("uniform", "gaussian")


@dataclass(frozen=True)
class NoisyEvaluation:
    """A noisy function value.

    ``std_error`` is the oracle's own estimate of the noise in ``value`` (for
    example the standard error of a sample mean), or ``None`` when it has none.
    """

    value: float
    std_error: Optional[float] = None


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise: ``uniform`` draws from [-level, level], ``gaussian`` from N(0, level^2)."""

    kind: str = "uniform"
    level: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not self.level >= 0.0:
            raise ValueError(f"noise level must be >= 0, got {self.level!r}")

    def draw(self, rng):
        if self.kind == "uniform":
            return rng.uniform(-self.level, self.level)
        return rng.normal(0.0, self.level)


class ZerothOrderOracle:
    """Noisy access to ``f``.

    Every call to :meth:`evaluate` draws fresh noise from a single RNG stream
    owned by the instance, so results depend only on the seed and the call
    sequence. :meth:`true_value` is meant for benchmarking only.
    """

    def __init__(self, func: Callable[[np.ndarray], float], dim: int, noise: NoiseSpec = NoiseSpec(), seed=None):
        self.func = func
        self.dim = int(dim)
        self.noise = noise
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.n_calls = 0

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"expected a point of shape ({self.dim},), got {theta.shape}")
        return theta

    def evaluate(self, theta) -> NoisyEvaluation:
        theta = self._check(theta)
        self.n_calls += 1
        return NoisyEvaluation(float(self.func(theta) + self.noise.draw(self.rng)))

    def true_value(self, theta) -> float:
        return float(self.func(self._check(theta)))

    def __call__(self, theta):
        return self.evaluate(theta).value


def quadratic(theta):
    return float(theta @ theta)


def rosenbrock(theta):
    return float(100.0 * (theta[1] - theta[0] ** 2) ** 2 + (1.0 - theta[0]) ** 2)


def noisy_quadratic(d, noise=NoiseSpec(), seed=None):
    """``theta'theta + xi``."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d!r}")
    return ZerothOrderOracle(quadratic, d, noise, seed)


def noisy_rosenbrock(noise=NoiseSpec(), seed=None):
    """Two-dimensional Rosenbrock plus noise; minimum 0 at (1, 1)."""
    return ZerothOrderOracle(rosenbrock, 2, noise, seed)
