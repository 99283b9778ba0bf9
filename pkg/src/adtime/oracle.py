"""Brute-force ground truth for small instances.

:func:`oracle_solve` enumerates every feasible assignment and prices it
exactly; :func:`verify_equilibrium` refutes a reported strategy by checking
follower deviations on a time grid and leader deviations on a price grid.

Revenue separates by block once the assignment is fixed, so both routines
evaluate each (block, set of assigned followers) pair once and combine the
cached block values while enumerating assignments.
"""

from __future__ import annotations

import itertools
import time
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from adtime.model import Scenario, SolveReport
from adtime.primal import report_from_primal, solve_primal

MAX_PAIRS = 20
MAX_GRID_POINTS = 2_000_000
MIN_GRID_DENSITY = 100


class InstanceTooLarge(ValueError):
    """The instance exceeds what exhaustive enumeration is allowed to handle."""


def _row_options(scenario: Scenario, i: int) -> list[tuple[int, ...]]:
    """All feasible 0/1 rows for follower i, in lexicographic order."""
    m = scenario.m_blocks
    live = scenario.interested[i]
    budget = int(scenario.block_budget[i])
    rows = [bits for bits in itertools.product((0, 1), repeat=m)
            if sum(bits) <= budget and all(live[j] or not bits[j] for j in range(m))]
    return rows


def _best_assignment(scenario: Scenario,
                     block_value: Callable[[int, tuple[int, ...]], float]) -> tuple[float, np.ndarray, int]:
    """Max over feasible assignments of ``sum_j block_value(j, column_j)``.

    Assignments are visited in lexicographic order of their row-major
    vector and only a strictly better value (beyond rounding) replaces the
    incumbent, so ties resolve to the lexicographically smallest.
    """
    n, m = scenario.shape
    cache: list[dict[tuple[int, ...], float]] = [{} for _ in range(m)]

    def column_value(j: int, column: tuple[int, ...]) -> float:
        if column not in cache[j]:
            cache[j][column] = block_value(j, column) if any(column) else 0.0
        return cache[j][column]

    best_value, best_rows, count = -np.inf, None, 0
    for rows in itertools.product(*(_row_options(scenario, i) for i in range(n))):
        count += 1
        value = sum(column_value(j, tuple(r[j] for r in rows)) for j in range(m))
        if best_rows is None or value > best_value + 1e-12 * max(1.0, abs(best_value)):
            best_value, best_rows = value, rows
    assert best_rows is not None
    return float(best_value), np.array(best_rows, dtype=np.int64).reshape(n, m), count


def _check_size(scenario: Scenario) -> None:
    n, m = scenario.shape
    if n * m > MAX_PAIRS:
        raise InstanceTooLarge(f"enumeration needs N*M <= {MAX_PAIRS}, got {n}*{m}")


def oracle_solve(scenario: Scenario) -> SolveReport:
    """Globally optimal leader strategy by exhaustive enumeration (N*M <= 20)."""
    _check_size(scenario)
    start = time.perf_counter()

    def block_value(j: int, column: tuple[int, ...]) -> float:
        a = np.zeros(scenario.shape, dtype=np.int64)
        a[:, j] = column
        return solve_primal(scenario, a).objective

    _, assignment, count = _best_assignment(scenario, block_value)
    solution = solve_primal(scenario, assignment)
    return report_from_primal(scenario, "oracle", solution, iterations=count,
                              wall_time=time.perf_counter() - start)


@dataclass(frozen=True)
class EquilibriumCheck:
    """Largest violations found; ``leader_violation`` is None when not checked."""

    follower_violation: float
    leader_violation: float | None
    grid_revenue: float | None
    grid_density: int

    def holds(self, tol: float = 1e-4) -> bool:
        leader_ok = self.leader_violation is None or self.leader_violation <= tol
        return self.follower_violation <= tol and leader_ok


def follower_violation(scenario: Scenario, report: SolveReport, grid_density: int = 1000) -> float:
    """Largest utility gain any assigned follower gets by moving to a grid time."""
    a = np.asarray(report.assignment) == 1
    if not np.any(a):
        return 0.0
    lam, scale = scenario.lam[a], scenario.time_scale[a]
    p = np.asarray(report.prices, dtype=float)[a]
    t = np.asarray(report.times, dtype=float)[a]
    with np.errstate(divide="ignore"):
        reach = scale * np.maximum(np.log(np.where(p > 0, scenario.caps[a] / p, np.inf)), 0.0)
    reach = np.where(np.isfinite(reach), reach, 10.0 * scale)
    hi = 2.0 * (t + reach) + scale
    grid = np.linspace(0.0, 1.0, grid_density + 1)[None, :] * hi[:, None]

    def utility(x: np.ndarray, lam_: np.ndarray, scale_: np.ndarray, p_: np.ndarray) -> np.ndarray:
        return lam_ * -np.expm1(-x / scale_) - p_ * x

    on_grid = utility(grid, lam[:, None], scale[:, None], p[:, None]).max(axis=1)
    reported = utility(t, lam, scale, p)
    return float(max(0.0, np.max(on_grid - reported)))


def _grid_block_value(scenario: Scenario, j: int, column: tuple[int, ...], grid_density: int) -> float:
    rows = [i for i, bit in enumerate(column) if bit]
    caps = scenario.caps[rows, j]
    scale = scenario.time_scale[rows, j]
    axes = [np.linspace(c / grid_density, c, grid_density) for c in caps]
    mesh = np.meshgrid(*axes, indexing="ij")
    revenue = np.zeros(mesh[0].shape)
    used = np.zeros(mesh[0].shape)
    for p, c, s in zip(mesh, caps, scale):
        t = s * np.maximum(np.log(c / p), 0.0)
        revenue += p * t
        used += t
    feasible = used <= scenario.batch_duration[j] * (1 + 1e-12)
    return float(np.max(np.where(feasible, revenue, 0.0)))


def leader_violation(scenario: Scenario, report: SolveReport, grid_density: int = MIN_GRID_DENSITY
                     ) -> tuple[float, float]:
    """(violation, best grid revenue) over enumerated assignments and price grids.

    Each assigned pair's price ranges over ``grid_density`` points in
    (0, cap]; a grid strategy counts only if its best-response times fit
    every block's budget.
    """
    _check_size(scenario)
    n = scenario.n_followers
    if float(grid_density) ** n > MAX_GRID_POINTS:
        raise InstanceTooLarge(f"grid_density**N = {grid_density}**{n} exceeds {MAX_GRID_POINTS}")

    def block_value(j: int, column: tuple[int, ...]) -> float:
        return _grid_block_value(scenario, j, column, grid_density)

    best, _, _ = _best_assignment(scenario, block_value)
    return max(0.0, best - float(report.leader_revenue)), best


def verify_equilibrium(scenario: Scenario, report: SolveReport, grid_density: int = MIN_GRID_DENSITY,
                       check_leader: bool = True) -> EquilibriumCheck:
    """Refute the reported strategy profile by unilateral grid deviations.

    Followers are checked on ``10 * grid_density`` time points each; the
    leader check (exhaustive, so small instances only) uses
    ``grid_density`` prices per assigned pair.
    """
    if grid_density < MIN_GRID_DENSITY:
        raise ValueError(f"grid_density must be >= {MIN_GRID_DENSITY}")
    follower = follower_violation(scenario, report, 10 * grid_density)
    if not check_leader:
        return EquilibriumCheck(follower, None, None, grid_density)
    leader, grid_revenue = leader_violation(scenario, report, grid_density)
    return EquilibriumCheck(follower, leader, grid_revenue, grid_density)
