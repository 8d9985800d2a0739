import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from anatra.oracles import NoiseSpec, ZerothOrderOracle, noisy_quadratic, noisy_rosenbrock


def test_noiseless_quadratic():
    assert noisy_quadratic(2).evaluate(np.array([1.0, 1.0])).value == 2.0


@pytest.mark.parametrize("theta,expected", [((1, 1), 0.0), ((0, 0), 1.0), ((-1, 1), 4.0)])
def test_noiseless_rosenbrock(theta, expected):
    oracle = noisy_rosenbrock()
    assert oracle.evaluate(np.array(theta, float)).value == expected
    assert oracle.true_value(np.array(theta, float)) == expected


@given(arrays(np.float64, (3,), elements=st.floats(-10, 10)), st.integers(0, 2**32 - 1),
       st.floats(0.0, 5.0))
def test_uniform_noise_bounded(theta, seed, level):
    oracle = noisy_quadratic(3, NoiseSpec("uniform", level), seed)
    for _ in range(20):
        assert abs(oracle(theta) - oracle.true_value(theta)) <= level


def test_gaussian_std_and_independence():
    oracle = noisy_quadratic(2, NoiseSpec("gaussian", 0.1), seed=5)
    theta = np.array([0.3, -0.2])
    xi = np.array([oracle(theta) for _ in range(10_000)]) - oracle.true_value(theta)
    assert 0.095 <= xi.std(ddof=1) <= 0.105
    lag1 = np.corrcoef(xi[:-1], xi[1:])[0, 1]
    assert abs(lag1) <= 0.05


def test_uniform_independence():
    oracle = noisy_quadratic(1, NoiseSpec("uniform", 1.0), seed=9)
    xi = np.array([oracle(np.zeros(1)) for _ in range(10_000)])
    assert abs(np.corrcoef(xi[:-1], xi[1:])[0, 1]) <= 0.05


def test_seed_determinism():
    pts = np.random.default_rng(0).standard_normal((50, 2))
    runs = []
    for _ in range(2):
        oracle = noisy_rosenbrock(NoiseSpec("gaussian", 0.3), seed=42)
        runs.append([oracle(p) for p in pts])
    assert runs[0] == runs[1]
    other = noisy_rosenbrock(NoiseSpec("gaussian", 0.3), seed=43)
    assert [other(p) for p in pts] != runs[0]


def test_fresh_noise_each_call():
    oracle = noisy_quadratic(2, NoiseSpec("uniform", 0.1), seed=1)
    vals = {oracle(np.ones(2)) for _ in range(5)}
    assert len(vals) == 5
    assert oracle.n_calls == 5


def test_invalid_inputs():
    with pytest.raises(ValueError):
        NoiseSpec("laplace", 0.1)
    with pytest.raises(ValueError):
        NoiseSpec("uniform", -1.0)
    with pytest.raises(ValueError):
        noisy_quadratic(0)
    with pytest.raises(ValueError):
        noisy_quadratic(2).evaluate(np.ones(3))


def test_custom_oracle_reports_no_std_error():
    oracle = ZerothOrderOracle(lambda x: float(np.sum(np.abs(x))), 2)
    ev = oracle.evaluate(np.array([1.0, -2.0]))
    assert ev.value == 3.0 and ev.std_error is None
