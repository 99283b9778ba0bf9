"""Generalized Benders decomposition for the leader's joint assignment/pricing problem.

Each iteration prices the current assignment (a lower bound), turns the
primal multipliers into one cut, and re-solves the master over assignments
(an upper bound).  Visited assignments, and every assignment contained in
one, are excluded from later masters: revenue can only grow when pairs are
added, so none of them can beat the best visited value.  The loop therefore
always terminates.

Two cut rules are available:

``"pricing"`` (default)
    ``sum_j beta_j T_j + sum_ij a_ij * max_p [p t(p) - beta_j t(p)]``: the
    time-budget Lagrangian maximized over every pair's price, which is linear
    in the binary assignment.  Exact at the generating assignment.
``"linking"``
    The Lagrangian with prices frozen at the primal optimum, so the
    assignment only enters through ``nu_ij * T_j * a_ij``.  Valid but weak:
    on binding instances it converges only by near-exhaustive enumeration.

Both rules separate by block.  With ``per_block`` (default) the master keeps
one bound per block and cut; otherwise each cut is summed over blocks into
a single bound, which needs many more iterations on binding instances.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from adtime.heuristic import p5_assignment
from adtime.master import BendersCut, MasterExhausted, solve_master
from adtime.model import Scenario, SolveReport
from adtime.primal import PrimalSolution, dual_value, report_from_primal, solve_primal

CUT_RULES = ("pricing", "linking")


@dataclass(frozen=True)
class GbdConfig:
    epsilon: float = 1e-6
    max_iterations: int = 100
    warm_start: bool = True
    cut_rule: str = "pricing"
    per_block: bool = True

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.cut_rule not in CUT_RULES:
            raise ValueError(f"unknown cut rule {self.cut_rule!r}; choose from {CUT_RULES}")


def make_cut(scenario: Scenario, solution: PrimalSolution, rule: str = "pricing") -> BendersCut:
    budget = scenario.batch_duration
    live = scenario.interested
    if rule == "pricing":
        coeff = dual_value(solution.beta[None, :], scenario.caps, scenario.time_scale)
        return BendersCut(solution.beta * budget, np.where(live, coeff, 0.0))
    if rule == "linking":
        p, t = solution.prices, solution.times
        block_time = t.sum(axis=0)
        constant = (
            np.sum(p * t, axis=0)
            - solution.beta * (block_time - budget)
            - np.sum(np.where(live, solution.gamma * (p - scenario.caps), 0.0), axis=0)
            - np.sum(solution.nu * t, axis=0)
        )
        return BendersCut(constant, solution.nu * budget[None, :])
    raise ValueError(f"unknown cut rule {rule!r}")


def _gap_closed(lb: float, ub: float, eps: float) -> bool:
    gap = ub - lb
    return abs(gap) < eps or gap / max(1.0, abs(ub)) < eps


def solve_gbd(scenario: Scenario, config: GbdConfig | None = None) -> SolveReport:
    """Epsilon-optimal leader strategy with its (LB, UB) trace.

    The returned assignment is the one with the best primal value seen.
    ``converged`` is False when ``max_iterations`` ran out first.
    """
    config = config or GbdConfig()
    start = time.perf_counter()
    if config.warm_start:
        assignment = p5_assignment(scenario)
    else:
        assignment = np.zeros(scenario.shape, dtype=np.int64)

    lower, upper = -np.inf, np.inf
    incumbent: PrimalSolution | None = None
    cuts: list[BendersCut] = []
    visited: list[np.ndarray] = []
    trace: list[tuple[float, float]] = []
    converged = False

    for iteration in range(1, config.max_iterations + 1):
        solution = solve_primal(scenario, assignment)
        if incumbent is None or solution.objective > lower:
            lower, incumbent = solution.objective, solution
        cuts.append(make_cut(scenario, solution, config.cut_rule))
        visited.append(assignment)

        try:
            master = solve_master(scenario, cuts, visited, exclude_subsets=True,
                                  per_block=config.per_block)
        except MasterExhausted:
            upper = lower
            trace.append((lower, upper))
            converged = True
            break
        # the master only ranges over unvisited assignments, so the incumbent
        # stays part of the certified bound
        upper = min(upper, max(master.delta, lower))
        trace.append((lower, upper))
        if _gap_closed(lower, upper, config.epsilon):
            converged = True
            break
        assignment = master.assignment

    assert incumbent is not None
    return report_from_primal(
        scenario, "gbd", incumbent,
        iterations=len(trace), bound_trace=trace, converged=converged,
        wall_time=time.perf_counter() - start,
    )


def bound_trace(report: SolveReport) -> list[tuple[float, float]]:
    return list(report.bound_trace)
