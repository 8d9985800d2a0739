import itertools

import numpy as np
import pytest

from anatra.comparators import SpsaConfig, deterministic_mbtr_solve, spsa_gradient, spsa_solve
from anatra.oracles import NoiseSpec, ZerothOrderOracle, noisy_quadratic
from anatra.solver import SolverConfig


def test_symmetric_cancellation():
    f = lambda x: float(x @ x)
    theta, delta, c = np.ones(2), np.array([1.0, -1.0]), 0.1
    g = spsa_gradient(f(theta + c * delta), f(theta - c * delta), c, delta)
    np.testing.assert_allclose(g, [0.0, 0.0], atol=1e-12)


def test_linear_estimate_unbiased():
    v = np.array([0.5, -2.0, 3.0])
    theta = np.array([0.1, 0.2, 0.3])
    ests = []
    for delta in itertools.product((-1.0, 1.0), repeat=3):
        delta = np.array(delta)
        est = spsa_gradient(v @ (theta + 0.1 * delta), v @ (theta - 0.1 * delta), 0.1, delta)
        np.testing.assert_allclose(est, (v @ delta) * delta)
        ests.append(est)
    np.testing.assert_allclose(np.mean(ests, axis=0), v)


def test_gain_sequences():
    cfg = SpsaConfig()
    a = [cfg.a_k(k) for k in range(50)]
    c = [cfg.c_k(k) for k in range(50)]
    assert all(x > 0 for x in a + c)
    assert all(np.diff(a) <= 0) and all(np.diff(c) <= 0)
    assert a[0] == pytest.approx(0.1) and c[0] == pytest.approx(0.1)


@pytest.mark.parametrize("budget", [2, 7, 50])
def test_two_evaluations_per_step(budget):
    result = spsa_solve(noisy_quadratic(2), np.ones(2), SpsaConfig(budget=budget, seed=0))
    trace = result.trace
    assert trace.n_evals == budget - budget % 2
    per_step = np.bincount([e.iteration for e in trace.evaluations])
    assert np.all(per_step == 2)


def test_initial_point_never_evaluated():
    theta0 = np.array([0.25, -0.75])
    result = spsa_solve(noisy_quadratic(2), theta0, SpsaConfig(budget=40, seed=3))
    assert all(not np.allclose(e.point, theta0) for e in result.trace.evaluations)


def test_direction_sign_pattern():
    seen = []

    def f(x):
        seen.append(x.copy())
        return float(x @ x)

    spsa_solve(ZerothOrderOracle(f, 3), np.ones(3), SpsaConfig(budget=2, seed=5))
    plus, minus = seen
    delta = np.sign(plus - minus)
    g = spsa_gradient(f(plus), f(minus), SpsaConfig().c_k(0), delta)
    assert np.all(np.sign(g) == np.sign(g[0]) * delta)


def test_replay_and_best_point():
    runs = [spsa_solve(noisy_quadratic(2, NoiseSpec("uniform", 0.1), 8), np.ones(2),
                       SpsaConfig(budget=30, seed=[8, 2])) for _ in range(2)]
    assert list(runs[0].trace.lines()) == list(runs[1].trace.lines())
    vals = [e.noisy_value for e in runs[0].trace.evaluations]
    assert runs[0].f_best == min(vals)


def test_spsa_config_validation():
    with pytest.raises(ValueError):
        SpsaConfig(budget=1)
    with pytest.raises(ValueError):
        SpsaConfig(a=0.0)


def test_deterministic_ablation_returns_best_seen():
    oracle = noisy_quadratic(2, NoiseSpec("uniform", 0.1), 2)
    result = deterministic_mbtr_solve(oracle, np.ones(2), SolverConfig(budget=30, noise_level=0.1))
    assert result.trace.solver == "det-mbtr"
    assert all(it.noise_estimate == 0.0 for it in result.trace.iterations)
    assert result.f_best == min(e.noisy_value for e in result.trace.evaluations)
    assert result.trace.n_evals <= 30
