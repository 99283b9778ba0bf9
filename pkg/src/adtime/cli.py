"""Command-line front end.

Exit codes: 0 success, 1 a GBD solve hit its iteration limit (outputs are
still written), 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path

from adtime import experiments, plotting
from adtime.gbd import CUT_RULES, GbdConfig
from adtime.model import ScenarioError
from adtime.scenario import GenSpec, dumps, generate, load, load_genspec

EXIT_OK, EXIT_NONCONVERGED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _solver_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--epsilon", type=float, default=1e-6, help="GBD gap tolerance (default 1e-6)")
    p.add_argument("--max-iter", type=int, default=100, help="GBD iteration limit (default 100)")
    p.add_argument("--cut-rule", choices=CUT_RULES, default="pricing", help="Benders cut family")
    p.add_argument("--single-cut", action="store_true",
                   help="aggregate each cut over blocks (one bound per iteration)")
    p.add_argument("--cold-start", action="store_true", help="start GBD from the empty assignment")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock times (outputs are then not reproducible)")
    return p


def _genspec_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--spec", help="generator spec JSON (GenSpec fields)")
    p.add_argument("--n-followers", type=int)
    p.add_argument("--m-blocks", type=int)
    p.add_argument("--batch-duration", type=float)
    p.add_argument("--alpha-scale", type=float)
    return p


def _sweep_flags(default_out: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="first scenario seed (default 0)")
    p.add_argument("--seeds", type=int, default=30, help="number of consecutive seeds (default 30)")
    p.add_argument("--out", default=default_out, help=f"results CSV (default {default_out})")
    p.add_argument("--svg", help="figure path (default: next to the CSV)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adtime", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    solver, genspec = _solver_flags(), _genspec_flags()

    g = sub.add_parser("gen", parents=[genspec], help="generate a seeded scenario file")
    g.add_argument("--seed", type=int, help="generator seed (overrides the spec file)")
    g.add_argument("--out", help="scenario JSON path (default stdout)")

    s = sub.add_parser("solve", parents=[solver], help="solve one scenario file")
    s.add_argument("scenario", help="scenario JSON")
    s.add_argument("--alg", default="gbd", choices=experiments.ALGORITHMS)
    s.add_argument("--seed", type=int, default=0, help="random baseline seed (default 0)")
    s.add_argument("--out", help="report JSON (default <scenario>_<alg>.json)")
    s.add_argument("--svg", help="plot the GBD bound trace")

    t = sub.add_parser("sweep-time", parents=[solver, genspec, _sweep_flags("sweep_time.csv")],
                       help="revenue and utility against a common batch duration T")
    t.add_argument("--values", type=_floats, default=list(experiments.DEFAULT_T_VALUES),
                   help="ascending T values, comma separated")
    t.add_argument("--alg", type=_names, default=list(experiments.DEFAULT_ALGORITHMS))

    d = sub.add_parser("sweep-density", parents=[solver, genspec, _sweep_flags("sweep_density.csv")],
                       help="revenue and utility against the density scale c")
    d.add_argument("--values", type=_floats, default=list(experiments.DEFAULT_DENSITY_SCALES),
                   help="ascending c values, comma separated")
    d.add_argument("--alg", type=_names, default=list(experiments.DEFAULT_ALGORITHMS))

    sub.add_parser("compare", parents=[solver, genspec, _sweep_flags("compare.csv")],
                   help="GBD vs heuristic vs random over many seeds")
    return parser


def _config(args: argparse.Namespace) -> GbdConfig:
    try:
        return GbdConfig(epsilon=args.epsilon, max_iterations=args.max_iter,
                         warm_start=not args.cold_start, cut_rule=args.cut_rule,
                         per_block=not args.single_cut)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _genspec(args: argparse.Namespace) -> GenSpec:
    spec = load_genspec(args.spec)
    overrides = {
        "n_followers": args.n_followers,
        "m_blocks": args.m_blocks,
        "batch_duration": args.batch_duration,
        "alpha_scale": args.alpha_scale,
    }
    return spec.with_(**{k: v for k, v in overrides.items() if v is not None})


def _write(path: str | Path, text: str) -> None:
    Path(path).write_text(text)


def cmd_gen(args: argparse.Namespace) -> int:
    spec = _genspec(args)
    if args.seed is not None:
        spec = spec.with_(seed=args.seed)
    text = dumps(generate(spec))
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    config = _config(args)
    scenario = load(args.scenario)
    report = experiments.run_algorithm(scenario, args.alg, config, args.seed)
    out = args.out or f"{Path(args.scenario).stem}_{args.alg}.json"
    _write(out, json.dumps(report.to_dict(include_timing=args.timing), indent=2) + "\n")
    print(f"algorithm: {report.algorithm}")
    print(f"revenue: {report.leader_revenue!r}")
    print(f"sum_utility: {report.sum_utility!r}")
    print(f"iterations: {report.iterations}")
    print(f"gap: {report.gap!r}")
    print(f"report: {out}")
    if args.svg:
        if not report.bound_trace:
            raise UsageError(f"--svg plots a bound trace, which {args.alg} does not produce")
        plotting.plot_trace(report.bound_trace, args.svg, title=Path(args.scenario).name)
    if not report.converged:
        print(f"warning: no convergence within {config.max_iterations} iterations", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _seed_list(args: argparse.Namespace) -> list[int]:
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    return list(range(args.seed, args.seed + args.seeds))


def _emit(rows: Sequence[experiments.ResultRow], args: argparse.Namespace) -> Path:
    out = Path(args.out)
    _write(out, experiments.format_csv(rows, include_timing=args.timing))
    return out


def _finish(rows: Sequence[experiments.ResultRow]) -> int:
    stuck = [r for r in rows if not r.converged]
    if stuck:
        print(f"warning: {len(stuck)} GBD solve(s) hit the iteration limit", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace, runner, title: str) -> int:
    config = _config(args)
    rows = runner(_genspec(args), args.values, _seed_list(args), args.alg, config)
    out = _emit(rows, args)
    summary = experiments.summarize(rows)
    summary_path = out.with_name(out.stem + "_summary.csv")
    _write(summary_path, experiments.format_summary_csv(summary))
    figure = args.svg or out.with_suffix(".svg")
    plotting.plot_sweep(summary, figure, title=title)
    for s in summary:
        print(f"{s.algorithm:9s} {s.sweep_param}={s.param_value!r}: "
              f"revenue {s.mean_revenue:.6f}  sum_utility {s.mean_sum_utility:.6f}")
    print(f"wrote {out}, {summary_path}, {figure}")
    return _finish(rows)


def cmd_sweep_time(args: argparse.Namespace) -> int:
    return _cmd_sweep(args, experiments.sweep_time, "revenue and utility vs batch duration")


def cmd_sweep_density(args: argparse.Namespace) -> int:
    return _cmd_sweep(args, experiments.sweep_density, "revenue and utility vs vehicle density")


def cmd_compare(args: argparse.Namespace) -> int:
    config = _config(args)
    rows = experiments.compare(_genspec(args), _seed_list(args), config)
    out = _emit(rows, args)
    verdict = experiments.compare_verdict(rows)
    revenues: dict[str, list[float]] = {a: [] for a in experiments.DEFAULT_ALGORITHMS}
    for row in rows:
        revenues[row.algorithm].append(row.revenue)
    figure = args.svg or out.with_suffix(".svg")
    plotting.plot_compare(revenues, figure, title="revenue per scenario")
    for line in verdict.lines():
        print(line)
    print(f"wrote {out}, {figure}")
    return _finish(rows)


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "sweep-time": cmd_sweep_time,
    "sweep-density": cmd_sweep_density,
    "compare": cmd_compare,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
