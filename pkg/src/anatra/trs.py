"""Trust-region subproblem: minimize ``g's + 0.5 s'Hs`` subject to ``||s|| <= delta``.

The exact solver works in the eigenbasis of ``H`` and finds the multiplier
``sigma`` of the secular equation ``||(H + sigma I)^{-1} g|| = delta`` by a
safeguarded Newton iteration on ``1/||s(sigma)|| - 1/delta`` (More & Sorensen).
It is vectorized over a batch of problems because the poisedness computation
needs two subproblems per Lagrange polynomial.
"""
from dataclasses import dataclass

import numpy as np

__all__ = ["TrsSolution", "solve_trs", "cauchy_step", "minimize_on_ball", "minimize_on_ball_eig"]

_MAX_SECULAR_ITERATIONS = 100
_SECULAR_TOL = 1e-10


@dataclass(frozen=True)
class TrsSolution:
    step: np.ndarray
    predicted_decrease: float
    on_boundary: bool


def _model_change(g, H, s):
    return float(g @ s + 0.5 * s @ H @ s)


def cauchy_step(g, H, delta):
    """Minimizer of the model along ``-g`` inside the ball."""
    gnorm = np.linalg.norm(g)
    if gnorm == 0.0:
        return np.zeros_like(g)
    curv = g @ H @ g
    t = delta / gnorm
    if curv > 0.0:
        t = min(t, gnorm**2 / curv)
    return -t * g


def _quad_eig(lam, a, z):
    return np.sum(a * z, axis=-1) + 0.5 * np.sum(lam * z * z, axis=-1)


def _step_norm(lam, a, sigma):
    denom = lam + sigma[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(a == 0.0, 0.0, -a / denom)
    return z, np.linalg.norm(z, axis=1)


def minimize_on_ball_eig(lam, a, delta):
    """Globally minimize ``a'z + 0.5 sum(lam z^2)`` over ``||z|| <= delta``, batched.

    Args:
        lam: (B, d) eigenvalues of each Hessian.
        a: (B, d) gradients expressed in the matching eigenbases.
        delta: ball radius.

    Returns:
        (z, value): minimizers in eigen-coordinates, shape (B, d), and the
        minimal model values, shape (B,).
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    B, d = lam.shape
    rows = np.arange(B)
    lmin = lam.min(axis=1)
    imin = lam.argmin(axis=1)
    scale = np.maximum(1.0, np.abs(lam).max(axis=1))

    best_z = np.zeros((B, d))
    best_val = np.zeros(B)
    limit = delta * (1.0 + 1e-10)

    def offer(z, mask):
        z = np.where(mask[:, None], z, 0.0)
        norms = np.linalg.norm(z, axis=1)
        val = _quad_eig(lam, a, z)
        take = mask & (norms <= limit) & np.isfinite(val) & (val < best_val)
        best_z[take] = z[take]
        best_val[take] = val[take]

    # interior Newton point
    pd = lmin > 0.0
    if pd.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            z_int = np.where(pd[:, None], -a / np.where(pd[:, None], lam, 1.0), 0.0)
        offer(z_int, pd)

    # boundary solution of the secular equation
    lo = np.maximum(0.0, -lmin)
    _, norm_lo = _step_norm(lam, a, lo)
    need = norm_lo > delta
    if need.any():
        anorm = np.linalg.norm(a, axis=1)
        lo_b = lo.copy()
        hi_b = lo + anorm / delta + 1e-300
        sigma = hi_b.copy()
        active = need.copy()
        for _ in range(_MAX_SECULAR_ITERATIONS):
            z, ns = _step_norm(lam, a, sigma)
            resid = ns - delta
            done = np.abs(resid) <= _SECULAR_TOL * delta
            active &= ~done
            if not active.any():
                break
            below = ns > delta  # sigma left of the root
            lo_b = np.where(active & below, sigma, lo_b)
            hi_b = np.where(active & ~below, sigma, hi_b)
            denom = lam + sigma[:, None]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                psi = 1.0 / ns - 1.0 / delta
                dpsi = np.sum(np.where(a == 0.0, 0.0, a * a / denom**3), axis=1) / ns**3
                newton = sigma - psi / dpsi
            ok = np.isfinite(newton) & (newton > lo_b) & (newton < hi_b)
            bisect = 0.5 * (lo_b + hi_b)
            sigma = np.where(active, np.where(ok, newton, bisect), sigma)
        z, ns = _step_norm(lam, a, sigma)
        with np.errstate(invalid="ignore", divide="ignore"):
            shrink = np.where(ns > delta, delta / ns, 1.0)
        ok = need & np.isfinite(ns)
        z = np.where(ok[:, None], z, 0.0) * np.where(ok, shrink, 0.0)[:, None]
        offer(z, ok)

    # hard case: sigma = -lmin, fill the remaining length along the leftmost eigenvector
    indef = lmin <= 0.0
    if indef.any():
        tol = 1e-12 * scale
        in_min = np.abs(lam - lmin[:, None]) <= tol[:, None]
        denom = lam - lmin[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            z_rest = np.where(in_min, 0.0, -a / np.where(in_min, 1.0, denom))
        rest_norm = np.linalg.norm(z_rest, axis=1)
        fits = indef & (rest_norm <= delta)
        tau = np.sqrt(np.maximum(delta**2 - rest_norm**2, 0.0))
        a_min = a[rows, imin]
        sign = np.where(a_min > 0.0, -1.0, 1.0)
        z_hard = z_rest.copy()
        z_hard[rows, imin] += sign * tau
        offer(z_hard, fits)

    return best_z, best_val


def minimize_on_ball(g, H, delta):
    """Batched global minimization of ``g's + 0.5 s'Hs`` on the ball.

    ``g`` has shape (B, d) and ``H`` shape (B, d, d). Returns steps (B, d) and
    minimal values (B,).
    """
    g = np.atleast_2d(np.asarray(g, dtype=float))
    H = np.asarray(H, dtype=float)
    if H.ndim == 2:
        H = H[None]
    lam, Q = np.linalg.eigh(0.5 * (H + np.swapaxes(H, 1, 2)))
    a = np.einsum("bji,bj->bi", Q, g)
    z, val = minimize_on_ball_eig(lam, a, delta)
    s = np.einsum("bij,bj->bi", Q, z)
    return s, val


def solve_trs(g, H, delta, kappa_fcd=1.0):
    """Approximately minimize the quadratic model over the trust region.

    The Cauchy point is computed first, which already satisfies the
    fraction-of-Cauchy-decrease condition with ``kappa_fcd = 1``; the exact
    eigen-based solution replaces it only when it achieves a lower model value.

    Args:
        g: model gradient, shape (d,).
        H: symmetric model Hessian, shape (d, d). The model is
            ``g's + 0.5 s'Hs``.
        delta: trust-region radius, > 0.
        kappa_fcd: fraction of Cauchy decrease constant in (0, 1]. Only used
            to validate the returned step.

    Returns:
        TrsSolution with the step, the predicted decrease ``m(0) - m(s)`` and
        whether the step lies on the boundary.
    """
    g = np.asarray(g, dtype=float)
    H = np.asarray(H, dtype=float)
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    if not 0.0 < kappa_fcd <= 1.0:
        raise ValueError(f"kappa_fcd must lie in (0, 1], got {kappa_fcd!r}")
    H = 0.5 * (H + H.T)
    if not np.any(g):
        return TrsSolution(np.zeros_like(g), 0.0, False)

    s = cauchy_step(g, H, delta)
    change = _model_change(g, H, s)
    s_exact, _ = minimize_on_ball(g[None], H[None], delta)
    s_exact = s_exact[0]
    change_exact = _model_change(g, H, s_exact)
    if np.linalg.norm(s_exact) <= delta * (1.0 + 1e-10) and change_exact < change:
        s, change = s_exact, change_exact

    decrease = -change
    gnorm = np.linalg.norm(g)
    hnorm = np.linalg.norm(H, 2)
    radius_term = delta if hnorm == 0.0 else min(gnorm / hnorm, delta)
    required = 0.5 * kappa_fcd * gnorm * radius_term
    # the Cauchy point always meets the bound; roundoff only
    assert decrease >= required - 1e-12 * max(1.0, required), (decrease, required)
    on_boundary = abs(np.linalg.norm(s) - delta) <= 1e-8 * delta
    return TrsSolution(s, float(decrease), bool(on_boundary))
