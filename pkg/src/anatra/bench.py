"""Seeded multi-trial benchmark runs and plot-ready exports.

A run directory holds::

    spec.json                       the ExperimentSpec
    traces/<solver>_trial<NNN>.jsonl one RunTrace per solver and trial
    aggregate.csv                   eval_index, solver, median_best_true_value

Every output byte is a function of the spec: trial ``t`` uses seed
``seed + t`` for its oracle, ``[seed + t, 1]`` for the QAOA starting point and
``[seed + t, 2]`` for SPSA directions. Trials run in worker processes when
``BENCH_THREADS`` allows it and are merged in trial order.
"""
import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .comparators import SpsaConfig, deterministic_mbtr_solve, spsa_solve
from .exceptions import BenchError
from .oracles import NoiseSpec, noisy_quadratic, noisy_rosenbrock
from .qaoa import QaoaCircuit, load_graph, shot_oracle
from .solver import SolverConfig, solve
from .trace import RunTrace

__all__ = [
    "AGGREGATE_COLUMNS",
    "BenchError",
    "EXPORT_COLUMNS",
    "PROBLEMS",
    "SOLVERS",
    "ExperimentSpec",
    "ResultBundle",
    "aggregate_run",
    "import_traces",
    "make_oracle",
    "plot_export",
    "run_experiment",
    "run_trial",
    "theta0_for",
]

_log = logging.getLogger(__name__)

PROBLEMS = ("quadratic-d2", "quadratic-d10", "rosenbrock", "qaoa-c6", "qaoa-chvatal")
SOLVERS = ("anatra", "spsa", "det-mbtr")
NOISE_KINDS = ("uniform", "gaussian", "shots")
AGGREGATE_COLUMNS = ("eval_index", "solver", "median_best_true_value")
EXPORT_COLUMNS = ("figure", "problem", "noise", "level", "solver", "eval_index", "median_best_true_value")
QAOA_DEPTH = 5


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str
    noise: str
    level: float = 0.0
    shots: Optional[int] = None
    solvers: tuple = SOLVERS
    trials: int = 30
    budget: Optional[int] = None
    seed: int = 1234
    graph: Optional[str] = None
    depth: int = QAOA_DEPTH

    def __post_init__(self):
        object.__setattr__(self, "solvers", tuple(self.solvers))
        if self.problem not in PROBLEMS:
            raise BenchError(f"unknown problem {self.problem!r}; choose from {PROBLEMS}")
        if not self.solvers:
            raise BenchError("solver list is empty")
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise BenchError(f"unknown solvers {unknown}; choose from {SOLVERS}")
        if len(set(self.solvers)) != len(self.solvers):
            raise BenchError("duplicate solver names")
        if self.trials < 1:
            raise BenchError("trials must be >= 1")
        if self.is_qaoa:
            if self.noise != "shots" or self.shots is None:
                raise BenchError("QAOA problems need --noise shots and --shots")
            if self.shots < 2:
                raise BenchError("shots must be >= 2")
        else:
            if self.noise not in ("uniform", "gaussian"):
                raise BenchError("synthetic problems need --noise uniform or gaussian")
            if not self.level >= 0.0:
                raise BenchError("noise level must be >= 0")
        if self.budget is not None and self.budget < self.dim + 2:
            raise BenchError(f"budget must be >= d + 2 = {self.dim + 2}")

    @property
    def is_qaoa(self):
        return self.problem.startswith("qaoa")

    @property
    def dim(self):
        if self.problem == "quadratic-d10":
            return 10
        if self.is_qaoa:
            return 2 * self.depth
        return 2

    @property
    def eval_budget(self):
        return self.budget if self.budget is not None else 25 * (self.dim + 1)

    @property
    def noise_level(self):
        """``level`` for synthetic problems, the shot count for QAOA."""
        return float(self.shots) if self.is_qaoa else float(self.level)

    @property
    def graph_name(self):
        if self.graph is not None:
            return self.graph
        return self.problem.split("-", 1)[1] if self.is_qaoa else None

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


@dataclass
class ResultBundle:
    spec: ExperimentSpec
    out_dir: Optional[Path]
    traces: dict = field(default_factory=dict)  # (solver, trial) -> RunTrace
    curves: dict = field(default_factory=dict)  # solver -> (trials, budget) array
    medians: dict = field(default_factory=dict)  # solver -> (budget,) array
    failures: list = field(default_factory=list)  # (solver, trial, message)

    @property
    def ok(self):
        return not self.failures


def make_oracle(spec, seed):
    if spec.problem == "quadratic-d2":
        return noisy_quadratic(2, NoiseSpec(spec.noise, spec.level), seed)
    if spec.problem == "quadratic-d10":
        return noisy_quadratic(10, NoiseSpec(spec.noise, spec.level), seed)
    if spec.problem == "rosenbrock":
        return noisy_rosenbrock(NoiseSpec(spec.noise, spec.level), seed)
    circuit = QaoaCircuit(load_graph(spec.graph_name), spec.depth)
    return shot_oracle(circuit, spec.shots, seed)


def theta0_for(spec, seed):
    """Ones for quadratics, the origin for Rosenbrock, seeded uniform in [0, 2pi) for QAOA."""
    if spec.problem.startswith("quadratic"):
        return np.ones(spec.dim)
    if spec.problem == "rosenbrock":
        return np.zeros(2)
    return np.random.default_rng([seed, 1]).uniform(0.0, 2.0 * np.pi, spec.dim)


def run_trial(spec, solver, trial):
    """One seeded solver run with true values attached to every evaluation."""
    seed = spec.seed + trial
    oracle = make_oracle(spec, seed)
    theta0 = theta0_for(spec, seed)
    budget = spec.eval_budget
    if solver == "anatra":
        if spec.is_qaoa:
            config = SolverConfig(budget=budget, noise_mode="shots")
        else:
            config = SolverConfig(budget=budget, noise_mode="exact", noise_level=spec.level)
        result = solve(oracle, theta0, config)
    elif solver == "det-mbtr":
        result = deterministic_mbtr_solve(oracle, theta0, SolverConfig(budget=budget))
    elif solver == "spsa":
        result = spsa_solve(oracle, theta0, SpsaConfig(budget=budget, seed=[seed, 2]))
    else:
        raise BenchError(f"unknown solver {solver!r}")
    trace = result.trace
    trace.fill_true_values(oracle.true_value)
    trace.meta.update({"problem": spec.problem, "trial": trial, "seed": seed,
                       "theta0": theta0.tolist(), "theta0_true_value": oracle.true_value(theta0)})
    return trace


def _run_job(job):
    spec, solver, trial = job
    try:
        return solver, trial, run_trial(spec, solver, trial), None
    except Exception as exc:  # reported per trial, the rest still complete
        partial = getattr(exc, "trace", None)
        return solver, trial, partial, f"{type(exc).__name__}: {exc}"


def _workers(threads):
    if threads is None:
        env = os.environ.get("BENCH_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _trace_name(solver, trial):
    return f"{solver}_trial{trial:03d}.jsonl"


def _curves(budget, trials, solvers, traces):
    curves, medians = {}, {}
    for solver in solvers:
        rows = [traces[(solver, t)].best_true_curve(budget) for t in range(trials) if (solver, t) in traces]
        if rows:
            curves[solver] = np.array(rows)
            medians[solver] = np.median(curves[solver], axis=0)
    return curves, medians


def _write_aggregate(path, solvers, medians):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        for solver in solvers:
            for i, v in enumerate(medians.get(solver, ())):
                writer.writerow((i, solver, repr(float(v))))


def run_experiment(spec, out_dir=None, threads=None):
    """Run every solver for every trial, aggregate, and write the run directory.

    Args:
        spec: ExperimentSpec.
        out_dir: run directory; nothing is written when ``None``.
        threads: worker-process cap; defaults to ``BENCH_THREADS`` or the CPU count.

    Returns:
        ResultBundle. ``failures`` lists trials that raised; completed trials
        are still aggregated and written.
    """
    jobs = [(spec, solver, trial) for solver in spec.solvers for trial in range(spec.trials)]
    workers = _workers(threads)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(job) for job in jobs]

    bundle = ResultBundle(spec, Path(out_dir) if out_dir is not None else None)
    for solver, trial, trace, error in results:
        if error is not None:
            bundle.failures.append((solver, trial, error))
            _log.error("%s trial %d failed: %s", solver, trial, error)
            continue
        bundle.traces[(solver, trial)] = trace
    bundle.curves, bundle.medians = _curves(spec.eval_budget, spec.trials, spec.solvers, bundle.traces)

    if bundle.out_dir is not None:
        tdir = bundle.out_dir / "traces"
        tdir.mkdir(parents=True, exist_ok=True)
        (bundle.out_dir / "spec.json").write_text(spec.to_json() + "\n")
        for (solver, trial), trace in sorted(bundle.traces.items(), key=lambda kv: (spec.solvers.index(kv[0][0]), kv[0][1])):
            trace.write_jsonl(tdir / _trace_name(solver, trial))
        _write_aggregate(bundle.out_dir / "aggregate.csv", spec.solvers, bundle.medians)
    return bundle


def _load_traces(run_dir, spec, solvers):
    traces = {}
    for path in sorted((run_dir / "traces").glob("*_trial*.jsonl")):
        solver, _, idx = path.stem.rpartition("_trial")
        if solver in solvers:
            traces[(solver, int(idx))] = RunTrace.read_jsonl(path)
    return traces


def aggregate_run(run_dir):
    """Recompute ``aggregate.csv`` from the traces stored in ``run_dir``."""
    run_dir = Path(run_dir)
    spec_path = run_dir / "spec.json"
    if not spec_path.exists():
        raise BenchError(f"{run_dir}: no spec.json")
    meta = json.loads(spec_path.read_text())
    extra = tuple(meta.pop("external_solvers", ()))
    spec = ExperimentSpec(**meta)
    solvers = spec.solvers + extra
    traces = _load_traces(run_dir, spec, solvers)
    _, medians = _curves(spec.eval_budget, spec.trials, solvers, traces)
    _write_aggregate(run_dir / "aggregate.csv", solvers, medians)
    return medians


def import_traces(run_dir, solver, paths):
    """Add traces produced by an external solver to an existing run.

    Each file must follow the RunTrace JSON-lines schema; trial ``t`` is the
    ``t``-th path. Missing true values are filled from the run's problem.
    The aggregate is rewritten to include the new solver.
    """
    run_dir = Path(run_dir)
    spec_path = run_dir / "spec.json"
    if not spec_path.exists():
        raise BenchError(f"{run_dir}: no spec.json")
    meta = json.loads(spec_path.read_text())
    extra = list(meta.get("external_solvers", []))
    if solver in SOLVERS or not solver or "_trial" in solver:
        raise BenchError(f"invalid external solver name {solver!r}")
    spec = ExperimentSpec(**{k: v for k, v in meta.items() if k != "external_solvers"})
    if not paths:
        raise BenchError("no trace files given")
    for trial, path in enumerate(paths):
        trace = RunTrace.read_jsonl(path)
        if any(rec.true_value is None for rec in trace.evaluations):
            trace.fill_true_values(make_oracle(spec, spec.seed + trial).true_value)
        trace.solver = solver
        trace.write_jsonl(run_dir / "traces" / _trace_name(solver, trial))
    if solver not in extra:
        extra.append(solver)
    meta["external_solvers"] = extra
    spec_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return aggregate_run(run_dir)


def _figure_for(problem):
    return "qaoa" if problem.startswith("qaoa") else problem


def plot_export(in_dir, out_dir=None):
    """Write one long-format CSV per figure from every run directory under ``in_dir``.

    Returns:
        Mapping figure name -> written path.

    Raises:
        BenchError: if no run is found, a run lacks its aggregate, or a run
            has no solver series. Nothing is written in that case.
    """
    in_dir = Path(in_dir)
    out_dir = Path(out_dir) if out_dir is not None else in_dir / "export"
    runs = sorted(p.parent for p in in_dir.rglob("spec.json"))
    if not runs:
        raise BenchError(f"no run directories under {in_dir}")
    rows = {}
    for run in runs:
        agg = run / "aggregate.csv"
        if not agg.exists():
            raise BenchError(f"{run}: missing aggregate.csv")
        meta = json.loads((run / "spec.json").read_text())
        meta.pop("external_solvers", None)
        spec = ExperimentSpec(**meta)
        with open(agg, newline="") as fh:
            records = list(csv.DictReader(fh))
        if not records:
            raise BenchError(f"{run}: aggregate.csv has no solver series")
        figure = _figure_for(spec.problem)
        label = spec.graph_name if spec.is_qaoa else spec.problem
        for rec in records:
            rows.setdefault(figure, []).append((
                figure, label, spec.noise, repr(spec.noise_level), rec["solver"],
                int(rec["eval_index"]), rec["median_best_true_value"],
            ))
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for figure in sorted(rows):
        path = out_dir / f"{figure}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(EXPORT_COLUMNS)
            writer.writerows(sorted(rows[figure], key=lambda r: (r[1], r[2], float(r[3]), r[4], r[5])))
        written[figure] = path
    return written
