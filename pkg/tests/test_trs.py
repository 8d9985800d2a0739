import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from anatra.trs import cauchy_step, minimize_on_ball, solve_trs


def cauchy_requirement(g, H, delta, kappa=1.0):
    gnorm = np.linalg.norm(g)
    hnorm = np.linalg.norm(H, 2)
    return 0.5 * kappa * gnorm * (delta if hnorm == 0 else min(gnorm / hnorm, delta))


def random_ball_points(rng, d, delta, m):
    x = rng.standard_normal((m, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return delta * rng.uniform(0, 1, (m, 1)) ** (1.0 / d) * x


def test_steepest_descent_to_boundary():
    sol = solve_trs(np.array([3.0, 4.0]), np.zeros((2, 2)), 1.0)
    np.testing.assert_allclose(sol.step, [-0.6, -0.8], atol=1e-12)
    assert sol.predicted_decrease == pytest.approx(5.0)
    assert sol.on_boundary


def test_interior_newton_step():
    sol = solve_trs(np.array([1.0, 0.0]), np.eye(2), 2.0)
    np.testing.assert_allclose(sol.step, [-1.0, 0.0], atol=1e-12)
    assert sol.predicted_decrease == pytest.approx(0.5)
    assert not sol.on_boundary


def test_zero_gradient_returns_zero_step():
    sol = solve_trs(np.zeros(3), -np.eye(3), 0.7)
    assert np.all(sol.step == 0.0)
    assert sol.predicted_decrease == 0.0


@pytest.mark.parametrize("delta,kappa", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, 1.5)])
def test_invalid_arguments(delta, kappa):
    with pytest.raises(ValueError):
        solve_trs(np.ones(2), np.eye(2), delta, kappa)


def test_cauchy_step_on_negative_curvature_hits_boundary():
    s = cauchy_step(np.array([1.0, 0.0]), -np.eye(2), 0.5)
    np.testing.assert_allclose(s, [-0.5, 0.0])


@given(
    d=st.integers(1, 6),
    seed=st.integers(0, 2**32 - 1),
    delta=st.floats(1e-4, 1e3),
    hscale=st.sampled_from([0.0, 1e-6, 1.0, 1e4]),
)
def test_cauchy_decrease_and_feasibility(d, seed, delta, hscale):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(d)
    A = rng.standard_normal((d, d))
    H = hscale * (A + A.T)
    sol = solve_trs(g, H, delta)
    assert np.linalg.norm(sol.step) <= delta * (1 + 1e-10)
    assert sol.predicted_decrease >= cauchy_requirement(g, H, delta) * (1 - 1e-12)
    model = g @ sol.step + 0.5 * sol.step @ H @ sol.step
    assert -model == pytest.approx(sol.predicted_decrease, rel=1e-9, abs=1e-12)


@given(arrays(np.float64, (3,), elements=st.floats(-1e3, 1e3)), st.floats(1e-3, 10.0))
def test_linear_model_step_is_scaled_negative_gradient(g, delta):
    sol = solve_trs(g, np.zeros((3, 3)), delta)
    if np.linalg.norm(g) > 1e-100:  # squares of smaller entries underflow
        np.testing.assert_allclose(sol.step, -delta * g / np.linalg.norm(g), rtol=1e-10, atol=1e-12)


def test_exact_against_random_point_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        d = int(rng.integers(1, 6))
        g = rng.standard_normal(d)
        A = rng.standard_normal((d, d))
        H = A + A.T
        delta = float(rng.uniform(0.1, 3.0))
        sol = solve_trs(g, H, delta)
        pts = random_ball_points(rng, d, delta, 100_000)
        oracle = -np.min(pts @ g + 0.5 * np.einsum("ij,jk,ik->i", pts, H, pts))
        assert sol.predicted_decrease >= oracle - 1e-6


def test_hard_case_matches_grid():
    # g orthogonal to the leftmost eigenvector, interior stationary point too short
    H = np.diag([-2.0, 1.0])
    g = np.array([0.0, 0.1])
    delta = 1.0
    sol = solve_trs(g, H, delta)
    t = np.linspace(0, 2 * np.pi, 200_001)
    r = np.linspace(0, delta, 401)
    X = (r[:, None, None] * np.stack([np.cos(t), np.sin(t)], -1)[None]).reshape(-1, 2)
    grid = -np.min(X @ g + 0.5 * np.einsum("ij,jk,ik->i", X, H, X))
    assert sol.on_boundary
    assert sol.predicted_decrease == pytest.approx(grid, rel=1e-4)
    assert sol.predicted_decrease >= grid - 1e-12


def test_batched_solver_matches_single():
    rng = np.random.default_rng(3)
    g = rng.standard_normal((20, 4))
    A = rng.standard_normal((20, 4, 4))
    H = A + np.swapaxes(A, 1, 2)
    s, val = minimize_on_ball(g, H, 0.8)
    for i in range(20):
        sol = solve_trs(g[i], H[i], 0.8)
        assert val[i] == pytest.approx(-sol.predicted_decrease, rel=1e-8, abs=1e-12)
