"""Minimum Frobenius norm (MFN) quadratic interpolation.

Models are stored about the first point of the interpolation set (the
center ``x0``) as::

    m(x) = c + g'(x - x0) + 0.5 (x - x0)' H (x - x0)

The quadratic monomials are ordered squares first, then cross terms in
lexicographic order ``(0,1), (0,2), ..., (d-2,d-1)``. Squares carry a
``1/sqrt(2)`` factor so that the coefficient vector ``beta`` satisfies
``||beta|| = ||H||_F / sqrt(2)``; minimizing ``||beta||`` therefore minimizes
the Frobenius norm of the Hessian.

Before the KKT system is assembled the displacements are divided by the
radius of the set, which keeps ``W`` well scaled for small radii. The MFN
solution is invariant under this scaling.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .exceptions import SingularGeometry
from .trs import minimize_on_ball_eig

__all__ = [
    "ErrorBoundCertificate",
    "InterpolationSet",
    "KktSystem",
    "LagrangePolySet",
    "Poisedness",
    "QuadraticModel",
    "assemble_kkt",
    "beta_to_hessian",
    "build_mfn_model",
    "gradient_error_bound",
    "hessian_to_beta",
    "lagrange_maxima",
    "lagrange_polynomials",
    "linear_monomials",
    "nu_radius",
    "poisedness",
    "quadratic_monomials",
]

COND_LIMIT = 1e12
_SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=None)
def _cross_indices(d):
    iu, ju = np.triu_indices(d, k=1)
    iu.flags.writeable = False
    ju.flags.writeable = False
    return iu, ju


def linear_monomials(y):
    """Rows ``[1, y_1, ..., y_d]`` for each row of ``y``."""
    y = np.atleast_2d(y)
    return np.hstack([np.ones((y.shape[0], 1)), y])


def quadratic_monomials(y):
    """Rows ``[y_1^2/sqrt2, ..., y_d^2/sqrt2, y_1 y_2, y_1 y_3, ..., y_{d-1} y_d]``."""
    y = np.atleast_2d(y)
    iu, ju = _cross_indices(y.shape[1])
    return np.hstack([y * y / _SQRT2, y[:, iu] * y[:, ju]])


def beta_to_hessian(beta, d):
    """Hessian of ``beta' nu(y)``."""
    H = np.diag(_SQRT2 * beta[:d])
    iu, ju = _cross_indices(d)
    H[iu, ju] = beta[d:]
    H[ju, iu] = beta[d:]
    return H


def hessian_to_beta(H):
    d = H.shape[0]
    iu, ju = _cross_indices(d)
    return np.concatenate([np.diag(H) / _SQRT2, H[iu, ju]])


@dataclass(frozen=True)
class InterpolationSet:
    """Points ``x^0, ..., x^p``; ``x^0`` is the center.

    ``ages`` holds insertion counters; larger means more recently inserted.
    """

    points: np.ndarray
    ages: np.ndarray = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        ages = np.arange(len(pts)) if self.ages is None else np.asarray(self.ages, dtype=int)
        if ages.shape != (len(pts),):
            raise ValueError("ages must have one entry per point")
        object.__setattr__(self, "ages", ages)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def center(self):
        return self.points[0]

    @property
    def displacements(self):
        """``x^i - x^0`` for ``i >= 1``, shape (p, d)."""
        return self.points[1:] - self.points[0]

    @property
    def radius(self):
        disp = self.displacements
        return float(np.linalg.norm(disp, axis=1).max()) if len(disp) else 0.0

    def distinct(self):
        tol = 1e-12 * max(1.0, float(np.linalg.norm(self.center)))
        diff = self.points[:, None, :] - self.points[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        np.fill_diagonal(dist, np.inf)
        return bool(np.all(dist > tol))

    def replace(self, index, point, age):
        pts = self.points.copy()
        ages = self.ages.copy()
        pts[index] = point
        ages[index] = age
        return InterpolationSet(pts, ages)


@dataclass(frozen=True)
class QuadraticModel:
    """``m(x) = c + g'(x - x0) + 0.5 (x - x0)' H (x - x0)``."""

    center: np.ndarray
    c: float
    g: np.ndarray
    H: np.ndarray

    def __call__(self, x):
        y = np.asarray(x, dtype=float) - self.center
        if y.ndim == 1:
            return float(self.c + self.g @ y + 0.5 * y @ self.H @ y)
        return self.c + y @ self.g + 0.5 * np.einsum("ij,jk,ik->i", y, self.H, y)

    def gradient(self, x):
        y = np.asarray(x, dtype=float) - self.center
        return self.g + y @ self.H.T if y.ndim > 1 else self.g + self.H @ y

    def recentered(self, new_center):
        """Same polynomial expanded about ``new_center``."""
        new_center = np.asarray(new_center, dtype=float)
        return QuadraticModel(new_center, self(new_center), self.gradient(new_center), self.H)


@dataclass(frozen=True)
class KktSystem:
    M: np.ndarray
    N: np.ndarray
    W: np.ndarray
    scale: float
    lu: tuple = field(repr=False)

    def solve(self, rhs):
        """Solve ``W [lambda; alpha] = [rhs; 0]`` (rhs may have several columns)."""
        rhs = np.asarray(rhs, dtype=float)
        n = self.M.shape[1]
        full = np.zeros((self.W.shape[0],) + rhs.shape[1:])
        full[:n] = rhs
        return scipy.linalg.lu_solve(self.lu, full)


def assemble_kkt(iset):
    """Build and factorize the saddle-point system on scaled displacements.

    Raises:
        SingularGeometry: the set is not MFN-poised to working precision.
    """
    n, d = iset.points.shape
    max_pts = (d + 1) * (d + 2) // 2
    if not d + 1 <= n <= max_pts:
        raise SingularGeometry(f"need between {d + 1} and {max_pts} points in dimension {d}, got {n}")
    y = iset.points - iset.center
    scale = iset.radius or 1.0
    u = y / scale
    M = linear_monomials(u).T
    N = quadratic_monomials(u).T
    W = np.zeros((n + d + 1, n + d + 1))
    W[:n, :n] = N.T @ N
    W[:n, n:] = M.T
    W[n:, :n] = M
    if not np.all(np.isfinite(W)):
        raise SingularGeometry("non-finite KKT matrix")
    cond = np.linalg.cond(W)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularGeometry(f"KKT matrix condition number {cond:.3e} exceeds {COND_LIMIT:.0e}")
    lu = scipy.linalg.lu_factor(W, check_finite=False)
    return KktSystem(M, N, W, scale, lu)


def _unscale(sol, kkt, d):
    """Map KKT solution columns to (c, g, H) in unscaled displacement coordinates."""
    n = kkt.M.shape[1]
    lam = sol[:n]
    alpha = sol[n:]
    beta = kkt.N @ lam
    s = kkt.scale
    c = alpha[0]
    g = alpha[1:] / s
    if beta.ndim == 1:
        return c, g, beta_to_hessian(beta, d) / s**2
    H = np.stack([beta_to_hessian(beta[:, j], d) for j in range(beta.shape[1])]) / s**2
    return c, g.T, H


def build_mfn_model(iset, values, kkt=None):
    """MFN quadratic model interpolating ``values`` on ``iset``.

    Args:
        iset: InterpolationSet with ``d+1 <= p+1 <= (d+1)(d+2)/2`` points.
        values: function values aligned with ``iset.points``.
        kkt: optional pre-assembled system for the same set.

    Raises:
        SingularGeometry: if ``W`` is singular or its condition number exceeds 1e12.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (len(iset),):
        raise ValueError(f"expected {len(iset)} values, got shape {values.shape}")
    kkt = kkt or assemble_kkt(iset)
    c, g, H = _unscale(kkt.solve(values), kkt, iset.dim)
    return QuadraticModel(iset.center.copy(), float(c), g, 0.5 * (H + H.T))


@dataclass(frozen=True)
class LagrangePolySet:
    """MFN Lagrange polynomials, one per interpolation point, about ``center``."""

    center: np.ndarray
    c: np.ndarray  # (n,)
    g: np.ndarray  # (n, d)
    H: np.ndarray  # (n, d, d)

    def __len__(self):
        return len(self.c)

    def __getitem__(self, i):
        return QuadraticModel(self.center, float(self.c[i]), self.g[i], self.H[i])

    def __call__(self, x):
        """Values of every polynomial at ``x``; shape (n,) or (m, n) for batched x."""
        y = np.asarray(x, dtype=float) - self.center
        if y.ndim == 1:
            return self.c + self.g @ y + 0.5 * np.einsum("j,ijk,k->i", y, self.H, y)
        return self.c + y @ self.g.T + 0.5 * np.einsum("mj,ijk,mk->mi", y, self.H, y)

    def combine(self, values):
        """The model ``sum_i values_i * l_i``."""
        values = np.asarray(values, dtype=float)
        return QuadraticModel(self.center, float(values @ self.c), values @ self.g,
                              np.einsum("i,ijk->jk", values, self.H))


def lagrange_polynomials(iset, kkt=None):
    """MFN Lagrange polynomials from the first ``p+1`` columns of ``W^{-1}``."""
    kkt = kkt or assemble_kkt(iset)
    n = len(iset)
    c, g, H = _unscale(kkt.solve(np.eye(n)), kkt, iset.dim)
    H = 0.5 * (H + np.swapaxes(H, 1, 2))
    return LagrangePolySet(iset.center.copy(), np.asarray(c, dtype=float), g, H)


def _maxima_1d(c, g, h, radius):
    # candidates: both ends of the interval and the stationary point when inside
    cands = np.stack([-radius * np.ones_like(c), radius * np.ones_like(c), np.zeros_like(c)], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = np.where(h != 0.0, -g / h, np.nan)
    inside = np.isfinite(stat) & (np.abs(stat) <= radius)
    cands[:, 2] = np.where(inside, stat, 0.0)
    vals = np.abs(c[:, None] + g[:, None] * cands + 0.5 * h[:, None] * cands**2)
    j = vals.argmax(axis=1)
    rows = np.arange(len(c))
    return vals[rows, j], cands[rows, j][:, None]


def lagrange_maxima(lagrange, center, radius):
    """Per polynomial, ``max |l_i(x)|`` over ``B(center, radius)`` and its maximizer.

    Returns:
        (maxima, points) with shapes (n,) and (n, d).
    """
    center = np.asarray(center, dtype=float)
    y0 = center - lagrange.center
    c = lagrange.c + lagrange.g @ y0 + 0.5 * np.einsum("j,ijk,k->i", y0, lagrange.H, y0)
    g = lagrange.g + np.einsum("ijk,k->ij", lagrange.H, y0)
    n, d = g.shape
    if d == 1:
        vals, steps = _maxima_1d(c, g[:, 0], lagrange.H[:, 0, 0], radius)
        return vals, center + steps

    lam, Q = np.linalg.eigh(lagrange.H)
    a = np.einsum("bji,bj->bi", Q, g)
    # min of l_i and min of -l_i in one batch
    z, val = minimize_on_ball_eig(np.vstack([lam, -lam]), np.vstack([a, -a]), radius)
    lo = c + val[:n]        # min l_i
    hi = c - val[n:]        # max l_i
    take_hi = np.abs(hi) >= np.abs(lo)
    vals = np.where(take_hi, np.abs(hi), np.abs(lo))
    z_pick = np.where(take_hi[:, None], z[n:], z[:n])
    steps = np.einsum("bij,bj->bi", Q, z_pick)
    return vals, center + steps


class Poisedness(NamedTuple):
    value: float
    index: int
    point: np.ndarray


def poisedness(iset, center, radius, lagrange=None):
    """Lambda-poisedness of ``iset`` in ``B(center, radius)``.

    Returns:
        (Lambda, index of the worst polynomial, point where it peaks).

    Raises:
        SingularGeometry: if the set is not MFN-poised.
    """
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    lagrange = lagrange or lagrange_polynomials(iset)
    vals, pts = lagrange_maxima(lagrange, center, radius)
    i = int(np.argmax(vals))
    return Poisedness(float(vals[i]), i, pts[i])


def nu_radius(delta):
    """``min{1, 1/delta, 1/delta^2}``."""
    return min(1.0, 1.0 / delta, 1.0 / delta**2)


@dataclass(frozen=True)
class ErrorBoundCertificate:
    poisedness: float
    pinv_norm: float
    hessian_norm: float
    radius: float
    lipschitz: float
    eps0: float
    eps_max: float
    bound: float
    hessian_bound: float


def gradient_error_bound(iset, model, radius, lipschitz, eps0=0.0, eps_max=0.0, point_errors=None):
    """Certificate for ``||grad f(x) - grad m(x)||`` on ``B(x0, radius)``.

    ``bound = sqrt(p+1) ||L^+|| [(L + ||H||) radius + (eps0 + eps_max) / radius]``
    where ``L`` is the matrix of displacements divided by ``radius``.

    ``hessian_bound`` is the a priori bound on ``||H||`` implied by the
    poisedness of the set, summed over the per-point errors ``point_errors``
    (default ``eps0`` at the center and ``eps_max`` elsewhere).
    """
    n, d = iset.points.shape
    L = iset.displacements / radius
    sv = np.linalg.svd(L, compute_uv=False)
    pinv_norm = float(1.0 / sv[-1]) if len(sv) == d and sv[-1] > 0 else np.inf
    hess_norm = float(np.linalg.norm(model.H, 2))
    bound = np.sqrt(n) * pinv_norm * ((lipschitz + hess_norm) * radius + (eps0 + eps_max) / radius)

    lam = poisedness(iset, iset.center, radius).value
    if point_errors is None:
        point_errors = np.r_[eps0, np.full(n - 1, eps_max)]
    nu = nu_radius(radius)
    root = np.sqrt((d + 1) * (d + 2))
    hessian_bound = (n * 4.0 * lam * lipschitz * root / nu
                     + 8.0 * lam * root / (radius**2 * nu) * float(np.sum(point_errors)))
    return ErrorBoundCertificate(lam, pinv_norm, hess_norm, float(radius), float(lipschitz),
                                 float(eps0), float(eps_max), float(bound), float(hessian_bound))
