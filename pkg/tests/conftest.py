import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from anatra.interp_models import InterpolationSet

settings.register_profile("ci", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

ACCEPTANCE_LINES = []


def random_set(rng, d, n, radius=1.0, center=None):
    """``n`` points in ``B(center, radius)`` with the center first."""
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    dirs = rng.standard_normal((n - 1, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = radius * rng.uniform(0.3, 1.0, size=(n - 1, 1))
    return InterpolationSet(np.vstack([center, center + r * dirs]))


def random_quadratic(rng, d):
    A = rng.standard_normal((d, d))
    return float(rng.standard_normal()), rng.standard_normal(d), A + A.T


def quad_values(points, center, c, g, H):
    y = np.atleast_2d(points) - center
    return c + y @ g + 0.5 * np.einsum("ij,jk,ik->i", y, H, y)


def mfn_oracle(points, values):
    """Least-Frobenius-norm interpolant by pseudo-inverses on raw monomials.

    Unknowns are ``c``, ``g`` and the upper triangle of ``H`` of the model
    ``c + g'y + 0.5 y'Hy`` in displacements from ``points[0]``. The weight
    on off-diagonal entries makes the objective equal ``||H||_F^2``.
    """
    y = points - points[0]
    n, d = y.shape
    iu, ju = np.triu_indices(d)
    A_lin = np.hstack([np.ones((n, 1)), y])
    coef = np.where(iu == ju, 0.5, 1.0)
    A_h = y[:, iu] * y[:, ju] * coef
    w = np.where(iu == ju, 1.0, np.sqrt(2.0))
    B = A_h / w
    P = np.eye(n) - A_lin @ np.linalg.pinv(A_lin)
    u = np.linalg.pinv(P @ B, rcond=1e-10) @ (P @ values)
    h = u / w
    a = np.linalg.pinv(A_lin) @ (values - A_h @ h)
    H = np.zeros((d, d))
    H[iu, ju] = h
    H[ju, iu] = h
    return a[0], a[1:], H


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def trace_violations(trace, budget, r=2.0, delta_max=1e3):
    """Solver invariants that every iteration record must satisfy."""
    bad = []
    if trace.n_evals > budget:
        bad.append(f"{trace.n_evals} evaluations exceed budget {budget}")
    if trace.iterations and trace.iterations[-1].n_evals != trace.n_evals:
        bad.append("last iteration eval count disagrees with the evaluation log")
    for it in trace.iterations:
        floor = np.sqrt(r * it.noise_estimate / it.lipschitz)
        if not np.isclose(it.sampling_radius, max(it.delta_before, floor), rtol=1e-12, atol=0):
            bad.append(f"k={it.k}: sampling radius {it.sampling_radius} != max(delta, floor)")
        if it.noise_estimate > 0 and it.sampling_radius < floor:
            bad.append(f"k={it.k}: sampling radius below noise floor")
        if it.sampling_radius < it.delta_before:
            bad.append(f"k={it.k}: sampling radius below trust radius")
        if it.lipschitz < max(1e-8, r * it.noise_estimate):
            bad.append(f"k={it.k}: Lipschitz estimate below its floor")
        if it.delta_after < it.delta_before and not it.valid:
            bad.append(f"k={it.k}: radius shrank on an invalid set")
        if max(it.delta_before, it.delta_after) > delta_max:
            bad.append(f"k={it.k}: radius above delta_max")
        if not (it.f_center < it.f_best + r * it.noise_estimate or it.f_center == it.f_best):
            bad.append(f"k={it.k}: center {it.f_center} not within r*eps of best {it.f_best}")
    return bad
