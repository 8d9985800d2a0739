"""Geometry maintenance for interpolation sets."""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import SingularGeometry
from .interp_models import InterpolationSet, lagrange_maxima, lagrange_polynomials

__all__ = ["GeometryReport", "affine_points", "affine_selection", "default_max_iterations", "improve_poisedness"]

MAX_ITERATIONS = 100
DEFAULT_TAU = 1e-5


@dataclass
class GeometryReport:
    set: InterpolationSet
    valid: bool
    iterations: int
    swaps: list = field(default_factory=list)  # (removed index, inserted point)
    poisedness: float = np.inf
    history: list = field(default_factory=list)  # Lambda before the first and after each swap


def default_max_iterations(lam_initial, lam_bar):
    if lam_initial <= lam_bar:
        return 0
    return min(MAX_ITERATIONS, math.ceil(math.log(lam_initial / lam_bar) / math.log(1 / 0.99)))


def improve_poisedness(iset, center, radius, lam_bar, max_iterations=None, first_age=None):
    """Swap badly placed points until the set is ``lam_bar``-poised in the ball.

    Each iteration finds the Lagrange polynomial with the largest peak on
    ``B(center, radius)`` and replaces its point with the maximizer. The center
    ``x^0`` is never removed (see ``_candidate_swaps`` for the case where its
    own polynomial is the worst). The first candidate swap that lowers Lambda
    is taken. When none does, the swap with the largest determinant ratio is
    taken anyway, since growing the interpolation volume is what drives the
    loop to termination. The set with the lowest Lambda seen is returned, so
    the result is never worse than the input.

    Args:
        iset: MFN-poised interpolation set.
        center, radius: the ball on which poisedness is measured.
        lam_bar: target poisedness, > 1.
        max_iterations: number of swaps allowed; ``None`` picks
            :func:`default_max_iterations`, capped at 100.
        first_age: age given to the first inserted point (then incremented).

    Returns:
        GeometryReport. ``swaps`` lists the swaps leading to the returned set;
        ``history`` holds Lambda before the first swap and after every swap made.

    Raises:
        SingularGeometry: if the incoming set is not MFN-poised.
    """
    if lam_bar <= 1.0:
        raise ValueError(f"lam_bar must exceed 1, got {lam_bar!r}")
    lag = lagrange_polynomials(iset)
    vals, pts = lagrange_maxima(lag, center, radius)
    lam = float(vals.max())
    history = [lam]
    if max_iterations is None:
        max_iterations = default_max_iterations(lam, lam_bar)
    age = int(iset.ages.max()) + 1 if first_age is None else first_age
    swaps = []
    best = (lam, iset, 0)
    iterations = 0

    while best[0] > lam_bar and iterations < max_iterations:
        iterations += 1
        step = None
        for i, point in _candidate_swaps(lag, vals, pts):
            trial = _evaluate_swap(iset, i, point, age, center, radius)
            if trial is not None and trial[3] < lam:
                step = (i, point, trial)
                break
        if step is None:
            i, point = _max_volume_swap(lag, pts)
            trial = None if i is None else _evaluate_swap(iset, i, point, age, center, radius)
            if trial is None:
                break
            step = (i, point, trial)
        i, point, (iset, lag, vals, lam, pts) = step
        swaps.append((int(i), point.copy()))
        history.append(lam)
        age += 1
        if lam < best[0]:
            best = (lam, iset, len(swaps))

    lam, iset, n_swaps = best
    return GeometryReport(iset, lam <= lam_bar, iterations, swaps[:n_swaps], lam, history)


def _evaluate_swap(iset, i, point, age, center, radius):
    trial = iset.replace(i, point, age)
    try:
        t_lag = lagrange_polynomials(trial)
        t_vals, t_pts = lagrange_maxima(t_lag, center, radius)
    except SingularGeometry:
        return None
    return trial, t_lag, t_vals, float(t_vals.max()), t_pts


def _max_volume_swap(lag, pts):
    """The swap ``j <- peak_i`` (``j >= 1``) with the largest ratio ``|l_j(peak_i)|``, if above 1."""
    ratios = np.abs(lag(pts))[:, 1:]
    i, j = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
    if ratios[i, j] <= 1.0:
        return None, None
    return int(j) + 1, pts[i]


def _candidate_swaps(lag, vals, pts, max_fallback=None):
    """Swaps to try, most promising first.

    When the worst polynomial belongs to a non-center point, the first
    candidate moves that point to where its polynomial peaks. When it is the
    center's own polynomial, its peak location is inserted instead, replacing
    the point whose polynomial is largest there (the largest determinant ratio).
    The remaining points follow by decreasing peak, then up to
    ``max_fallback`` (default ``2 * len(lag)``) swaps that insert some other
    polynomial's peak, most volume-increasing first.
    """
    if max_fallback is None:
        max_fallback = 2 * len(lag)
    tried = set()
    worst = int(np.argmax(vals))
    if worst == 0:
        peak = pts[0]
        at_peak = np.abs(lag(peak))[1:]
        j = int(np.argmax(at_peak)) + 1
        if at_peak[j - 1] > 0.0:
            tried.add((0, j))
            yield j, peak
    for i in np.argsort(-vals[1:], kind="stable") + 1:
        if vals[i] <= 1.0:
            break
        tried.add((int(i), int(i)))
        yield int(i), pts[i]
    # fallback: other peaks, ranked by the determinant ratio |l_j(peak_i)| of the swap j <- peak_i
    ratios = np.abs(lag(pts))[:, 1:]  # rows: peak i, columns: replaced point j >= 1
    order = np.argsort(-ratios, axis=None, kind="stable")
    yielded = 0
    for flat in order:
        i, j = divmod(int(flat), ratios.shape[1])
        j += 1
        if yielded >= max_fallback or ratios[i, j - 1] <= 1.0:
            break
        if (i, j) in tried:
            continue
        yielded += 1
        yield j, pts[i]


def affine_selection(history, center, c_s, delta, tau=DEFAULT_TAU):
    """Pick affinely independent displacements from ``history``, completing with a basis.

    Displacements longer than ``c_s * delta`` are ignored. A displacement is
    accepted when the norm of its projection (scaled by ``1/(c_s delta)``)
    onto the orthogonal complement of those already accepted is at least
    ``tau`` and the accepted displacements keep a smallest singular value of
    at least ``tau * c_s * delta / sqrt(d)``. The complement left at the end
    is filled with orthonormal directions scaled to length ``c_s * delta``.

    Returns:
        (accepted, synthetic): indices into ``history`` and the (d - q, d)
        array of generated points.
    """
    if not 0.0 < tau <= 1.0 / c_s:
        raise ValueError(f"tau must lie in (0, 1/c_s], got {tau!r}")
    center = np.asarray(center, dtype=float)
    d = center.shape[0]
    reach = c_s * delta
    floor = tau * reach / np.sqrt(d)
    accepted = []
    Q = np.eye(d)  # columns [span(Y) | Z]
    q = 0
    for idx, x in enumerate(history):
        if q == d:
            break
        disp = np.asarray(x, dtype=float) - center
        if np.linalg.norm(disp) > reach * (1.0 + 1e-12):
            continue
        Z = Q[:, q:]
        if np.linalg.norm(Z.T @ (disp / reach)) < tau:
            continue
        Y = np.column_stack([np.asarray(history[j], dtype=float) - center for j in accepted] + [disp])
        # the projection test alone admits chains whose smallest singular value decays geometrically
        if np.linalg.svd(Y, compute_uv=False)[-1] < floor:
            continue
        accepted.append(idx)
        Q, _ = scipy.linalg.qr(Y)
        q += 1
    synthetic = center + reach * Q[:, q:].T
    return accepted, synthetic


def affine_points(history, center, c_s, delta, tau=DEFAULT_TAU):
    """Set of exactly ``d+1`` affinely independent points around ``center``.

    ``history`` lists previously evaluated points, most recent first.
    """
    center = np.asarray(center, dtype=float)
    accepted, synthetic = affine_selection(history, center, c_s, delta, tau)
    pts = [center] + [np.asarray(history[i], dtype=float) for i in accepted] + list(synthetic)
    return InterpolationSet(np.array(pts))
