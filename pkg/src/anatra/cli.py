"""``bench`` command line: ``run``, ``export`` and ``import``."""
import argparse
import logging
import sys

from .bench import PROBLEMS, SOLVERS, BenchError, ExperimentSpec, import_traces, plot_export, run_experiment

__all__ = ["build_parser", "main"]


def _budget(text):
    if text == "auto":
        return None
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("budget must be a positive integer or 'auto'")
    return value


def _solvers(text):
    return tuple(s for s in (part.strip() for part in text.split(",")) if s)


def build_parser():
    parser = argparse.ArgumentParser(prog="bench", description="Noisy derivative-free optimization benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded multi-trial experiment")
    run.add_argument("--problem", required=True, choices=PROBLEMS)
    run.add_argument("--noise", required=True, choices=("uniform", "gaussian", "shots"))
    level = run.add_mutually_exclusive_group(required=True)
    level.add_argument("--level", type=float, help="noise level for synthetic problems")
    level.add_argument("--shots", type=int, help="shots per evaluation for QAOA problems")
    run.add_argument("--solvers", type=_solvers, default=SOLVERS,
                     help=f"comma-separated subset of {','.join(SOLVERS)}")
    run.add_argument("--trials", type=int, default=30)
    run.add_argument("--budget", type=_budget, default=None, help="evaluations per run, or 'auto' for 25(d+1)")
    run.add_argument("--seed", type=int, default=1234)
    run.add_argument("--graph", default=None, help="c6, chvatal or a graph file (QAOA only)")
    run.add_argument("--out", required=True, help="run directory")

    export = sub.add_parser("export", help="write long-format CSVs for every run under a directory")
    export.add_argument("--in", dest="in_dir", required=True)
    export.add_argument("--out", default=None, help="defaults to <in>/export")

    imp = sub.add_parser("import", help="add an external solver's traces to a run")
    imp.add_argument("--in", dest="in_dir", required=True, help="existing run directory")
    imp.add_argument("--solver", required=True)
    imp.add_argument("traces", nargs="+", help="JSON-lines traces, one per trial in trial order")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            spec = ExperimentSpec(
                problem=args.problem, noise=args.noise, level=args.level or 0.0, shots=args.shots,
                solvers=args.solvers, trials=args.trials, budget=args.budget, seed=args.seed, graph=args.graph,
            )
            bundle = run_experiment(spec, args.out)
            for solver, trial, message in bundle.failures:
                print(f"error: {solver} trial {trial}: {message}", file=sys.stderr)
            return 0 if bundle.ok else 1
        if args.command == "export":
            for figure, path in plot_export(args.in_dir, args.out).items():
                print(f"{figure}: {path}")
            return 0
        import_traces(args.in_dir, args.solver, args.traces)
        return 0
    except (BenchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
