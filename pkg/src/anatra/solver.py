"""Noise-aware model-based trust-region solver (ANATRA).

Each iteration:

1. estimates the noise level and a gradient Lipschitz constant,
2. sets the sampling radius ``max(delta, sqrt(r * eps / L))``,
3. prunes the interpolation set to ``c_s`` sampling radii and to at most
   ``(d+1)(d+2)/2`` points (oldest first),
4. restores affine independence if needed and runs one poisedness-improvement
   swap, which also yields the validity flag,
5. evaluates new points, builds the MFN model and solves the trust-region
   subproblem,
6. evaluates the trial point unless the set is invalid *and* the step is
   shorter than ``0.01 delta``,
7. accepts using the noise-relaxed ratio and updates the radius (expand on
   long accepted steps, shrink on rejection only when the set is valid),
8. falls back to the best point seen when the center drifts ``r * eps`` above it.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import BudgetTooSmall, DegeneratePrediction, MissingNoiseInfo, OracleFailure, SingularGeometry
from .geometry import DEFAULT_TAU, affine_selection, improve_poisedness
from .interp_models import InterpolationSet, build_mfn_model
from .trace import IterationRecord, RunTrace
from .trs import solve_trs

__all__ = [
    "NOISE_MODES",
    "SolveResult",
    "SolverConfig",
    "certificate_bound",
    "estimate_noise",
    "relaxed_rho",
    "sampling_radius",
    "solve",
    "update_lipschitz",
]

_log = logging.getLogger(__name__)

NOISE_MODES = ("exact", "shots", "zero")
LIPSCHITZ_FLOOR = 1e-8
_MAX_IDLE_ITERATIONS = 100


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    ``c_s`` and ``lam_bar`` default to ``sqrt(d)``; ``lam_bar`` is raised to
    ``sqrt(2)`` in one dimension where ``sqrt(d)`` would be 1.

    noise_mode:
        ``exact``: use ``noise_level`` as the noise estimate.
        ``shots``: use the standard error reported with the center's evaluation.
        ``zero``: ignore noise entirely (classical trust-region behaviour).
    """

    budget: int = 100
    eta1: float = 0.25
    gamma: float = 0.5
    r: float = 2.0
    c_s: Optional[float] = None
    lam_bar: Optional[float] = None
    delta0: float = 1.0
    delta_max: float = 1e3
    expand_fraction: float = 0.75
    skip_fraction: float = 0.01
    noise_mode: str = "exact"
    noise_level: float = 0.0
    tau: float = DEFAULT_TAU
    min_radius: float = 1e-12
    kappa_fcd: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.eta1 < 1.0 and 0.0 < self.gamma < 1.0):
            raise ValueError("eta1 and gamma must lie in (0, 1)")
        if self.r < 2.0:
            raise ValueError(f"r must be >= 2, got {self.r!r}")
        if not self.delta_max >= self.delta0 > 0.0:
            raise ValueError("need delta_max >= delta0 > 0")
        if self.noise_mode not in NOISE_MODES:
            raise ValueError(f"noise_mode must be one of {NOISE_MODES}, got {self.noise_mode!r}")
        if self.noise_level < 0.0:
            raise ValueError("noise_level must be >= 0")

    def resolved(self, d):
        """Copy with the dimension-dependent defaults filled in."""
        c_s = self.c_s if self.c_s is not None else math.sqrt(d)
        lam_bar = self.lam_bar if self.lam_bar is not None else max(math.sqrt(d), math.sqrt(2.0))
        return replace(self, c_s=c_s, lam_bar=lam_bar)


class SolveResult(NamedTuple):
    theta_best: np.ndarray
    f_best: float
    trace: RunTrace


def estimate_noise(mode, level=0.0, std_error=None):
    """Noise estimate for the current iteration.

    In ``shots`` mode ``std_error`` is the standard error reported with the
    most recent evaluation at the center.
    """
    if mode == "exact":
        return float(level)
    if mode == "zero":
        return 0.0
    if mode == "shots":
        if std_error is None:
            raise MissingNoiseInfo("shot-based noise estimation needs an oracle reporting a standard error")
        return max(0.0, float(std_error))
    raise ValueError(f"unknown noise mode {mode!r}")


def update_lipschitz(k, valid, previous, last_hessian, noise, r):
    """Gradient Lipschitz estimate.

    1 on the first iteration; the largest eigenvalue magnitude of the latest
    model Hessian when the set was valid; otherwise the previous estimate.
    The result is always at least ``max(1e-8, r * noise)``.
    """
    if k == 0 or last_hessian is None:
        value = 1.0 if k == 0 or previous is None else previous
    elif valid:
        value = float(np.max(np.abs(np.linalg.eigvalsh(last_hessian))))
    else:
        value = previous
    return max(value, LIPSCHITZ_FLOOR, r * noise)


def sampling_radius(delta, noise, lipschitz, r):
    return max(delta, math.sqrt(r * noise / lipschitz))


def _degenerate(predicted_decrease, f_center):
    return predicted_decrease <= 1e-16 * max(1.0, abs(f_center))


def relaxed_rho(f_center, f_trial, noise, r, predicted_decrease):
    """``(f_center - f_trial + r * noise) / predicted_decrease``.

    Raises:
        DegeneratePrediction: if the predicted decrease is not meaningfully positive.
    """
    if _degenerate(predicted_decrease, f_center):
        raise DegeneratePrediction(f"predicted decrease {predicted_decrease!r} is not positive")
    return (f_center - f_trial + r * noise) / predicted_decrease


def certificate_bound(iset, H, radius, lipschitz, eps0, eps_max):
    """Right-hand side of the gradient error bound (no poisedness solve needed)."""
    L = iset.displacements / radius
    sv = np.linalg.svd(L, compute_uv=False)
    if len(sv) < iset.dim or sv[-1] <= 0.0:
        return math.inf
    hnorm = float(np.linalg.norm(H, 2))
    return float(math.sqrt(len(iset)) / sv[-1] * ((lipschitz + hnorm) * radius + (eps0 + eps_max) / radius))


class _BudgetExhausted(Exception):
    pass


@dataclass
class _Point:
    x: np.ndarray
    value: float
    std_error: Optional[float]
    index: int


class _Member:
    """Interpolation set entry; ``point`` is None until evaluated."""

    __slots__ = ("x", "age", "point")

    def __init__(self, x, age, point=None):
        self.x = np.asarray(x, dtype=float)
        self.age = age
        self.point = point


class _Run:
    def __init__(self, oracle, theta0, config, name):
        self.oracle = oracle
        self.theta0 = np.asarray(theta0, dtype=float).copy()
        self.d = self.theta0.shape[0]
        self.cfg = config.resolved(self.d)
        if self.cfg.budget < self.d + 2:
            raise BudgetTooSmall(f"budget {self.cfg.budget} < d + 2 = {self.d + 2}")
        self.qmax = (self.d + 1) * (self.d + 2) // 2
        self.trace = RunTrace(solver=name, meta={"budget": self.cfg.budget, "dim": self.d})
        self.history = []
        self.best = None
        self.k = 0
        self._age = 0

    def next_age(self):
        self._age += 1
        return self._age

    def evaluate(self, x, event):
        if self.trace.n_evals >= self.cfg.budget:
            raise _BudgetExhausted
        try:
            ev = self.oracle.evaluate(x)
        except Exception as exc:
            raise OracleFailure(f"oracle failed at {x!r}: {exc}", self.trace) from exc
        if not np.isfinite(ev.value):
            raise OracleFailure(f"oracle returned {ev.value!r} at {x!r}", self.trace)
        rec = self.trace.add_evaluation(x, ev.value, self.k, event, ev.std_error)
        point = _Point(np.asarray(x, dtype=float).copy(), float(ev.value), ev.std_error, rec.eval_index)
        self.history.append(point)
        if self.best is None or point.value < self.best.value:
            self.best = point
        return point

    # interpolation-set helpers -------------------------------------------------

    def as_set(self, members):
        return InterpolationSet(np.array([m.x for m in members]), np.array([m.age for m in members]))

    def distinct_from(self, x, members):
        tol = 1e-12 * max(1.0, float(np.linalg.norm(members[0].x)))
        return all(np.linalg.norm(m.x - x) > tol for m in members)

    def affine_members(self, center, dbar):
        recent = [p for p in reversed(self.history) if p is not center.point]
        accepted, synthetic = affine_selection([p.x for p in recent], center.x, self.cfg.c_s, dbar, self.cfg.tau)
        out = [center]
        out += [_Member(recent[i].x, self.next_age(), recent[i]) for i in accepted]
        out += [_Member(x, self.next_age()) for x in synthetic]
        return out

    def rank_deficient(self, members, dbar):
        if len(members) < self.d + 1:
            return True
        disp = np.array([m.x - members[0].x for m in members[1:]])
        sv = np.linalg.svd(disp, compute_uv=False)
        return len(sv) < self.d or sv[-1] < 1e-8 * self.cfg.c_s * dbar

    def geometry(self, members, center, dbar):
        """Affine completion plus one improvement swap; returns (members, report)."""
        cfg = self.cfg
        if self.rank_deficient(members, dbar):
            affine = self.affine_members(center, dbar)
            keep = [m for m in members[1:] if all(m is not a and np.any(m.x != a.x) for a in affine)]
            keep.sort(key=lambda m: m.age, reverse=True)
            candidate = affine + keep[: max(0, self.qmax - len(affine))]
            try:
                return self._improve(candidate, center, dbar)
            except SingularGeometry:
                return self._improve(affine, center, dbar)
        try:
            return self._improve(members, center, dbar)
        except SingularGeometry:
            _log.debug("singular interpolation set at iteration %d; rebuilding", self.k)
            return self._improve(self.affine_members(center, dbar), center, dbar)

    def _improve(self, members, center, dbar):
        cfg = self.cfg
        report = improve_poisedness(self.as_set(members), center.x, dbar, cfg.lam_bar,
                                    max_iterations=1, first_age=self._age + 1)
        members = list(members)
        for i, x in report.swaps:
            members[i] = _Member(x, self.next_age())
        return members, report

    # main loop --------------------------------------------------------------

    def run(self):
        cfg = self.cfg
        try:
            first = self.evaluate(self.theta0, "center")
        except _BudgetExhausted:  # pragma: no cover - budget >= d + 2
            raise
        center = _Member(self.theta0, 0, first)
        members = [center]
        delta = cfg.delta0
        valid = False
        lipschitz = None
        last_H = None
        idle = 0

        while True:
            evals_start = self.trace.n_evals
            noise = estimate_noise(cfg.noise_mode, cfg.noise_level, center.point.std_error)
            lipschitz = update_lipschitz(self.k, valid, lipschitz, last_H, noise, cfg.r)
            dbar = sampling_radius(delta, noise, lipschitz, cfg.r)
            rec = IterationRecord(self.k, None, False, delta, delta, dbar, noise, lipschitz, None, None,
                                  None, False, evals_start, f_center=center.point.value)
            try:
                members = [center] + [m for m in members[1:] if np.linalg.norm(m.x - center.x) <= cfg.c_s * dbar]
                if len(members) > self.qmax:
                    rest = sorted(members[1:], key=lambda m: m.age, reverse=True)
                    members = [center] + rest[: self.qmax - 1]

                members, report = self.geometry(members, center, dbar)
                valid = report.valid
                rec.valid = valid
                rec.poisedness = report.poisedness

                for m in members:
                    if m.point is None:
                        m.point = self.evaluate(m.x, "geometry")

                iset = self.as_set(members)
                model = build_mfn_model(iset, [m.point.value for m in members])
                last_H = model.H
                rec.set_size = len(members)
                rec.grad_norm = float(np.linalg.norm(model.g))
                rec.error_bound = certificate_bound(iset, model.H, max(dbar, iset.radius), lipschitz, noise, noise)
                step = solve_trs(model.g, model.H, delta, cfg.kappa_fcd)
                snorm = float(np.linalg.norm(step.step))
                rec.step_norm = snorm

                if not (valid or snorm >= cfg.skip_fraction * delta) and self.trace.n_evals > evals_start:
                    rec.skip_reason = "short-step-invalid-set"
                elif _degenerate(step.predicted_decrease, center.point.value):
                    rec.skip_reason = "degenerate-prediction"
                    if valid:
                        delta = cfg.gamma * delta
                else:
                    x_trial = center.x + step.step
                    trial = self.evaluate(x_trial, "trial")
                    rho = relaxed_rho(center.point.value, trial.value, noise, cfg.r, step.predicted_decrease)
                    rec.rho = float(rho)
                    trial_member = _Member(x_trial, self.next_age(), trial)
                    if rho >= cfg.eta1:
                        rec.accepted = True
                        center = trial_member
                        members = [center] + members
                        if snorm > cfg.expand_fraction * delta:
                            delta = min(delta / cfg.gamma, cfg.delta_max)
                    else:
                        if self.distinct_from(x_trial, members):
                            members.append(trial_member)
                        if valid:
                            delta = cfg.gamma * delta

                center, members = self._safeguard(rec, center, members, noise)
            except _BudgetExhausted:
                rec.skip_reason = rec.skip_reason or "budget"
                center, members = self._safeguard(rec, center, members, noise)
                self._close(rec, delta, center)
                break

            self._close(rec, delta, center)
            idle = idle + 1 if self.trace.n_evals == evals_start else 0
            self.k += 1
            if self.trace.n_evals >= cfg.budget:
                break
            if delta < cfg.min_radius or idle >= _MAX_IDLE_ITERATIONS:
                _log.info("stopping at iteration %d: delta=%g, idle=%d", self.k, delta, idle)
                break

        return SolveResult(self.best.x.copy(), self.best.value, self.trace)

    def _safeguard(self, rec, center, members, noise):
        """Move the center back to the best point if it sits ``r * noise`` or more above it."""
        if center.point.value >= self.best.value + self.cfg.r * noise and center.point is not self.best:
            rec.center_reset = True
            center = self._member_for(self.best, members)
            members = [center] + [m for m in members if m is not center]
        return center, members

    def _member_for(self, point, members):
        for m in members:
            if m.point is point:
                return m
        return _Member(point.x, self.next_age(), point)

    def _close(self, rec, delta, center):
        rec.delta_after = delta
        rec.n_evals = self.trace.n_evals
        rec.f_center = center.point.value
        rec.f_best = self.best.value
        self.trace.iterations.append(rec)


def solve(oracle, theta0, config=SolverConfig(), name="anatra"):
    """Minimize the noisy objective behind ``oracle`` starting from ``theta0``.

    Args:
        oracle: object with ``evaluate(theta) -> NoisyEvaluation``.
        theta0: starting point.
        config: SolverConfig; ``budget`` caps the number of oracle calls.
        name: solver label stored in the trace.

    Returns:
        SolveResult ``(theta_best, f_best, trace)`` where ``f_best`` is the
        lowest noisy value observed and ``theta_best`` where it was observed.

    Raises:
        BudgetTooSmall: if ``config.budget < d + 2``.
        OracleFailure: if the oracle raises; the partial trace is attached.
    """
    return _Run(oracle, theta0, config, name).run()
