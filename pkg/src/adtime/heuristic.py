"""Low-complexity leader strategies.

The heuristic first assumes unlimited batch time, where every pair's revenue
is maximized independently at ``cap / e`` and is worth ``lambda / e``.  The
assignment therefore reduces to picking, per follower, its ``M_i`` largest
lambdas; prices are then recomputed with the real time budgets.
"""

from __future__ import annotations

import time

import numpy as np

from adtime.model import IntArray, NotParticipantError, Scenario, SolveReport
from adtime.primal import report_from_primal, solve_primal
from adtime.scenario import SplitMix64


def unconstrained_price(scenario: Scenario, i: int, j: int) -> float:
    """Revenue-maximizing price for pair (i, j) when time is unlimited (cap / e)."""
    scenario.check_index(i, j)
    if scenario.lam[i, j] == 0:
        raise NotParticipantError(f"follower {i} is not interested in block {j}")
    return float(scenario.alpha[j] * scenario.lam[i, j] / (scenario.t_design[i, j] * np.e))


def p5_assignment(scenario: Scenario) -> IntArray:
    """Each follower takes its ``M_i`` largest positive lambdas (ties to the lower block)."""
    a = np.zeros(scenario.shape, dtype=np.int64)
    for i in range(scenario.n_followers):
        row = scenario.lam[i]
        order = np.argsort(-row, kind="stable")
        picked = [j for j in order if row[j] > 0][: scenario.block_budget[i]]
        a[i, picked] = 1
    return a


def solve_heuristic(scenario: Scenario) -> SolveReport:
    start = time.perf_counter()
    solution = solve_primal(scenario, p5_assignment(scenario))
    return report_from_primal(scenario, "heuristic", solution, iterations=1,
                              wall_time=time.perf_counter() - start)


def random_assignment(scenario: Scenario, seed: int) -> IntArray:
    """Per follower, ``min(M_i, #interested)`` distinct interested blocks drawn uniformly.

    Followers are processed in index order, each shuffling its ascending list
    of interested blocks with one shared :class:`SplitMix64` stream.
    """
    rng = SplitMix64(seed)
    a = np.zeros(scenario.shape, dtype=np.int64)
    for i in range(scenario.n_followers):
        blocks = [int(j) for j in np.flatnonzero(scenario.lam[i] > 0)]
        k = min(int(scenario.block_budget[i]), len(blocks))
        rng.shuffle(blocks)
        a[i, blocks[:k]] = 1
    return a


def solve_random_baseline(scenario: Scenario, seed: int) -> SolveReport:
    start = time.perf_counter()
    solution = solve_primal(scenario, random_assignment(scenario, seed))
    return report_from_primal(scenario, "random", solution, iterations=1,
                              wall_time=time.perf_counter() - start)
