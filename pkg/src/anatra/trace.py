"""Run traces: one record per oracle evaluation and one per solver iteration.

Traces serialize to JSON lines. Each line carries a ``type`` field
(``meta``, ``evaluation`` or ``iteration``) followed by the record fields.
"""
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

__all__ = ["EvaluationRecord", "IterationRecord", "RunTrace", "EVENTS"]

EVENTS = ("center", "geometry", "trial")


@dataclass
class EvaluationRecord:
    eval_index: int
    point: list
    noisy_value: float
    iteration: int
    event: str
    true_value: Optional[float] = None
    std_error: Optional[float] = None


@dataclass
class IterationRecord:
    k: int
    rho: Optional[float]
    accepted: bool
    delta_before: float
    delta_after: float
    sampling_radius: float
    noise_estimate: float
    lipschitz: float
    grad_norm: Optional[float]
    step_norm: Optional[float]
    poisedness: Optional[float]
    valid: bool
    n_evals: int
    skip_reason: Optional[str] = None
    f_center: Optional[float] = None
    f_best: Optional[float] = None
    center_reset: bool = False
    set_size: int = 0
    error_bound: Optional[float] = None


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


@dataclass
class RunTrace:
    solver: str = ""
    evaluations: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n_evals(self):
        return len(self.evaluations)

    def add_evaluation(self, point, noisy_value, iteration, event, std_error=None):
        if event not in EVENTS:
            raise ValueError(f"unknown event {event!r}")
        rec = EvaluationRecord(len(self.evaluations), [float(v) for v in point], float(noisy_value),
                               int(iteration), event, None, std_error)
        self.evaluations.append(rec)
        return rec

    def fill_true_values(self, true_value):
        """Attach ``true_value(point)`` to every evaluation (benchmarking only)."""
        for rec in self.evaluations:
            rec.true_value = float(true_value(np.asarray(rec.point)))

    def best_true_curve(self, length=None):
        """Best true value among the first ``j+1`` evaluations, padded to ``length``."""
        vals = np.array([rec.true_value for rec in self.evaluations], dtype=float)
        curve = np.minimum.accumulate(vals) if len(vals) else np.array([np.nan])
        if length is not None:
            if len(curve) < length:
                curve = np.concatenate([curve, np.full(length - len(curve), curve[-1])])
            curve = curve[:length]
        return curve

    def lines(self):
        yield json.dumps({"type": "meta", "solver": self.solver, **{k: _jsonable(v) for k, v in self.meta.items()}})
        for rec in self.evaluations:
            yield json.dumps({"type": "evaluation", **{k: _jsonable(v) for k, v in asdict(rec).items()}})
        for rec in self.iterations:
            yield json.dumps({"type": "iteration", **{k: _jsonable(v) for k, v in asdict(rec).items()}})

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for line in self.lines():
                fh.write(line + "\n")

    @classmethod
    def read_jsonl(cls, path):
        trace = cls()
        with open(path) as fh:
            for line in fh:
                obj = json.loads(line)
                kind = obj.pop("type")
                if kind == "meta":
                    trace.solver = obj.pop("solver", "")
                    trace.meta = obj
                elif kind == "evaluation":
                    trace.evaluations.append(EvaluationRecord(**obj))
                elif kind == "iteration":
                    trace.iterations.append(IterationRecord(**obj))
        return trace
