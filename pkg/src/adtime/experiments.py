"""Seeded sweeps over batch duration and vehicle density, and algorithm comparison.

Every sweep point is one generated scenario solved by each requested
algorithm.  Points are independent, so they may run in worker processes;
rows are always emitted sorted by (seed, parameter index, algorithm index),
which keeps the CSV byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import os
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from adtime.gbd import GbdConfig, solve_gbd
from adtime.heuristic import solve_heuristic, solve_random_baseline
from adtime.model import Scenario, SolveReport
from adtime.oracle import oracle_solve
from adtime.scenario import MASK64, GenSpec, generate

CSV_HEADER = (
    "scenario_seed", "algorithm", "sweep_param", "param_value", "revenue",
    "sum_utility", "iterations", "gap", "wall_time_ms",
)
SUMMARY_HEADER = ("algorithm", "sweep_param", "param_value", "n_seeds", "mean_revenue",
                  "mean_sum_utility", "mean_iterations", "n_unconverged")
ALGORITHMS = ("gbd", "heuristic", "random", "oracle")
DEFAULT_ALGORITHMS = ("gbd", "heuristic", "random")
DEFAULT_T_VALUES = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
DEFAULT_DENSITY_SCALES = (0.025, 0.05, 0.1, 0.2, 0.4)
THREADS_ENV = "ADTIME_THREADS"

# the random baseline draws from its own stream so it never replays the generator's
BASELINE_SALT = 0x5DEECE66D2545F49


def baseline_seed(scenario_seed: int) -> int:
    return (int(scenario_seed) ^ BASELINE_SALT) & MASK64


def run_algorithm(scenario: Scenario, algorithm: str, config: GbdConfig, seed: int = 0) -> SolveReport:
    """Dispatch one solve; ``seed`` only matters for the random baseline."""
    if algorithm == "gbd":
        return solve_gbd(scenario, config)
    if algorithm == "heuristic":
        return solve_heuristic(scenario)
    if algorithm == "random":
        return solve_random_baseline(scenario, seed)
    if algorithm == "oracle":
        return oracle_solve(scenario)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


@dataclass(frozen=True)
class ResultRow:
    scenario_seed: int
    algorithm: str
    sweep_param: str
    param_value: float
    revenue: float
    sum_utility: float
    iterations: int
    gap: float
    wall_time_ms: float
    converged: bool

    def csv_fields(self, include_timing: bool) -> list[str]:
        return [
            str(self.scenario_seed), self.algorithm, self.sweep_param, repr(float(self.param_value)),
            repr(float(self.revenue)), repr(float(self.sum_utility)), str(self.iterations),
            repr(float(self.gap)), f"{self.wall_time_ms:.3f}" if include_timing else "",
        ]


@dataclass(frozen=True)
class SweepTask:
    spec: GenSpec
    sweep_param: str
    param_value: float
    param_index: int
    algorithms: tuple[str, ...]
    config: GbdConfig


def _run_task(task: SweepTask) -> list[tuple[tuple[int, int, int], ResultRow]]:
    scenario = generate(task.spec)
    out = []
    for k, algorithm in enumerate(task.algorithms):
        report = run_algorithm(scenario, algorithm, task.config, baseline_seed(task.spec.seed))
        row = ResultRow(
            scenario_seed=task.spec.seed,
            algorithm=algorithm,
            sweep_param=task.sweep_param,
            param_value=task.param_value,
            revenue=report.leader_revenue,
            sum_utility=report.sum_utility,
            iterations=report.iterations,
            gap=report.gap,
            wall_time_ms=1000.0 * report.wall_time,
            converged=report.converged,
        )
        out.append(((task.spec.seed, task.param_index, k), row))
    return out


def worker_count(n_tasks: int) -> int:
    """Workers to use: ``ADTIME_THREADS`` if set, otherwise the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        limit = os.cpu_count() or 1
    else:
        try:
            limit = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if limit < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return max(1, min(limit, n_tasks))


def run_tasks(tasks: Sequence[SweepTask], workers: int | None = None) -> list[ResultRow]:
    workers = worker_count(len(tasks)) if workers is None else workers
    if workers <= 1:
        chunks = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_task, tasks))
    keyed = [item for chunk in chunks for item in chunk]
    keyed.sort(key=lambda item: item[0])
    return [row for _, row in keyed]


def _check_values(values: Sequence[float], name: str) -> tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if not values:
        raise ValueError(f"empty {name} sweep")
    if any(not np.isfinite(v) or v <= 0 for v in values):
        raise ValueError(f"{name} values must be positive")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} values must be strictly ascending")
    return values


def _check_algorithms(algorithms: Sequence[str]) -> tuple[str, ...]:
    algorithms = tuple(dict.fromkeys(algorithms))
    if not algorithms:
        raise ValueError("no algorithms requested")
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise ValueError(f"unknown algorithm {unknown[0]!r}; choose from {ALGORITHMS}")
    return algorithms


def _seeds(seeds: Sequence[int]) -> tuple[int, ...]:
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("no seeds requested")
    return seeds


def sweep_time(base: GenSpec, t_values: Sequence[float], seeds: Sequence[int],
               algorithms: Sequence[str] = DEFAULT_ALGORITHMS, config: GbdConfig | None = None,
               workers: int | None = None) -> list[ResultRow]:
    """One row per (seed, T, algorithm), with the same T in every block."""
    t_values = _check_values(t_values, "batch_duration")
    algorithms = _check_algorithms(algorithms)
    config = config or GbdConfig()
    tasks = [SweepTask(base.with_(seed=s, batch_duration=t), "batch_duration", t, k, algorithms, config)
             for s in _seeds(seeds) for k, t in enumerate(t_values)]
    return run_tasks(tasks, workers)


def sweep_density(base: GenSpec, scales: Sequence[float], seeds: Sequence[int],
                  algorithms: Sequence[str] = DEFAULT_ALGORITHMS, config: GbdConfig | None = None,
                  workers: int | None = None) -> list[ResultRow]:
    """One row per (seed, c, algorithm) with ``alpha_j = 1 + c * vehicles_j``.

    The seed fixes the draws, so across c only alpha changes.
    """
    scales = _check_values(scales, "alpha_scale")
    algorithms = _check_algorithms(algorithms)
    config = config or GbdConfig()
    tasks = [SweepTask(base.with_(seed=s, alpha_scale=c), "alpha_scale", c, k, algorithms, config)
             for s in _seeds(seeds) for k, c in enumerate(scales)]
    return run_tasks(tasks, workers)


MIN_COMPARE_SEEDS = 10


def compare(base: GenSpec, seeds: Sequence[int], config: GbdConfig | None = None,
            workers: int | None = None) -> list[ResultRow]:
    """GBD, heuristic and random on each seed at the base batch duration."""
    seeds = _seeds(seeds)
    if len(seeds) < MIN_COMPARE_SEEDS:
        raise ValueError(f"compare needs at least {MIN_COMPARE_SEEDS} seeds, got {len(seeds)}")
    config = config or GbdConfig()
    tasks = [SweepTask(base.with_(seed=s), "batch_duration", base.batch_duration, 0,
                       DEFAULT_ALGORITHMS, config) for s in seeds]
    return run_tasks(tasks, workers)


@dataclass(frozen=True)
class CompareVerdict:
    n_seeds: int
    mean_heuristic_ratio: float
    mean_random_ratio: float
    worst_heuristic_excess: float

    @property
    def heuristic_close(self) -> bool:
        return self.mean_heuristic_ratio >= 0.9

    @property
    def ordering_holds(self) -> bool:
        return self.mean_random_ratio < self.mean_heuristic_ratio

    def lines(self) -> list[str]:
        return [
            f"seeds: {self.n_seeds}",
            f"mean heuristic/gbd revenue ratio: {self.mean_heuristic_ratio:.6f}",
            f"mean random/gbd revenue ratio: {self.mean_random_ratio:.6f}",
            f"mean relative gap heuristic vs gbd: {1 - self.mean_heuristic_ratio:.6f}",
            f"mean relative gap random vs gbd: {1 - self.mean_random_ratio:.6f}",
            f"heuristic close to gbd (ratio >= 0.9): {'yes' if self.heuristic_close else 'no'}",
            f"random below heuristic: {'yes' if self.ordering_holds else 'no'}",
        ]


def compare_verdict(rows: Sequence[ResultRow]) -> CompareVerdict:
    by_seed: dict[int, dict[str, float]] = {}
    for row in rows:
        by_seed.setdefault(row.scenario_seed, {})[row.algorithm] = row.revenue
    ratios_h, ratios_r, excess = [], [], 0.0
    for revenues in by_seed.values():
        g = revenues["gbd"]
        excess = max(excess, revenues["heuristic"] - g)
        if g > 0:
            ratios_h.append(revenues["heuristic"] / g)
            ratios_r.append(revenues["random"] / g)
    mean_h = float(np.mean(ratios_h)) if ratios_h else 1.0
    mean_r = float(np.mean(ratios_r)) if ratios_r else 1.0
    return CompareVerdict(len(by_seed), mean_h, mean_r, excess)


def format_csv(rows: Sequence[ResultRow], include_timing: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields(include_timing))
    return buf.getvalue()


@dataclass(frozen=True)
class SummaryRow:
    algorithm: str
    sweep_param: str
    param_value: float
    n_seeds: int
    mean_revenue: float
    mean_sum_utility: float
    mean_iterations: float
    n_unconverged: int


def summarize(rows: Sequence[ResultRow]) -> list[SummaryRow]:
    """Means over seeds per (algorithm, parameter value), in first-seen order."""
    groups: dict[tuple[str, str, float], list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.algorithm, row.sweep_param, row.param_value), []).append(row)
    out = []
    for (algorithm, param, value), members in sorted(
            groups.items(), key=lambda kv: (ALGORITHMS.index(kv[0][0]), kv[0][2])):
        out.append(SummaryRow(
            algorithm, param, value, len(members),
            float(np.mean([r.revenue for r in members])),
            float(np.mean([r.sum_utility for r in members])),
            float(np.mean([r.iterations for r in members])),
            sum(not r.converged for r in members),
        ))
    return out


def format_summary_csv(summary: Sequence[SummaryRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for s in summary:
        writer.writerow([s.algorithm, s.sweep_param, repr(float(s.param_value)), s.n_seeds,
                         repr(s.mean_revenue), repr(s.mean_sum_utility), repr(s.mean_iterations),
                         s.n_unconverged])
    return buf.getvalue()


def read_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))
