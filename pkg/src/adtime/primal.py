"""Revenue-maximizing prices for a fixed block assignment.

For a fixed assignment the leader problem separates by block.  In block j,
with a multiplier ``beta`` on the time budget, each assigned pair's price
solves ``log(cap / p) - 1 + beta / p = 0``, whose root is
``p = beta / W(e * beta / cap) = (cap / e) * exp(W)`` (principal Lambert W) and gives the time
``(T_design / alpha) * (1 - W(e * beta / cap))``.  The block's total time is
strictly decreasing in ``beta`` and vanishes at ``beta = max(cap)``, so the
budget-clearing multiplier is found by bisection on that bracket.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import lambertw

from adtime.model import FloatArray, Scenario, SolveReport, follower_utilities, pair_revenue_derivative

MAX_BISECTIONS = 200


@dataclass(frozen=True)
class PrimalSolution:
    """Optimal prices, times and multipliers for one assignment.

    ``beta`` prices the per-block time budget, ``gamma`` the price caps and
    ``nu`` the linking constraint that forces unassigned pairs to zero time.
    """

    assignment: NDArray[np.int64]
    prices: FloatArray
    times: FloatArray
    objective: float
    beta: FloatArray
    gamma: FloatArray
    nu: FloatArray
    kkt_residual: float


def price_response(beta: NDArray | float, caps: NDArray, scale: NDArray) -> tuple[FloatArray, FloatArray]:
    """Per-pair (price, time) maximizing ``p t(p) - beta t(p)`` over (0, cap].

    Pairs with ``cap == 0`` get price 0 and time 0.
    """
    caps = np.asarray(caps, dtype=float)
    beta = np.broadcast_to(np.asarray(beta, dtype=float), caps.shape)
    positive = caps > 0
    safe_caps = np.where(positive, caps, 1.0)
    w = lambertw(np.e * beta / safe_caps).real
    # beta / W(x) rewritten with W e^W = x, which stays exact as beta -> 0
    prices = np.where(w >= 1.0, safe_caps, np.minimum(safe_caps * np.exp(w - 1.0), safe_caps))
    times = np.asarray(scale) * np.maximum(0.0, 1.0 - w)
    return np.where(positive, prices, 0.0), np.where(positive, times, 0.0)


def dual_value(beta: NDArray | float, caps: NDArray, scale: NDArray) -> FloatArray:
    """Per-pair value of ``max_p [p t(p) - beta t(p)]`` (>= 0, decreasing in beta)."""
    prices, times = price_response(beta, caps, scale)
    beta = np.broadcast_to(np.asarray(beta, dtype=float), np.shape(caps))
    return np.maximum((prices - beta) * times, 0.0)


def _block_multipliers(caps: FloatArray, scale: FloatArray, active: NDArray[np.bool_],
                       budget: FloatArray) -> FloatArray:
    """Vectorized bisection for the budget-clearing beta of every block."""
    caps_a = np.where(active, caps, 0.0)
    scale_a = np.where(active, scale, 0.0)

    def total(beta: FloatArray) -> FloatArray:
        return price_response(beta[None, :], caps_a, scale_a)[1].sum(axis=0)

    binding = total(np.zeros(caps.shape[1])) > budget
    lo = np.zeros(caps.shape[1])
    hi = np.where(binding, caps_a.max(axis=0, initial=0.0), 0.0)
    for _ in range(MAX_BISECTIONS):
        if not np.any(binding & (hi - lo > 1e-15 * hi)):
            break
        mid = 0.5 * (lo + hi)
        over = total(mid) > budget
        lo = np.where(binding & over, mid, lo)
        hi = np.where(binding & ~over, mid, hi)
    # hi is always on the feasible side of the budget
    return hi


def solve_primal(scenario: Scenario, assignment: NDArray) -> PrimalSolution:
    """Price optimization at a fixed assignment (also the heuristic's repricing step).

    Unassigned pairs sit at their caps, which makes their time zero.  The
    objective is a valid lower bound on the leader's optimum.
    """
    a = scenario.check_assignment(assignment)
    active = a == 1
    caps, scale = scenario.caps, scenario.time_scale

    beta = _block_multipliers(caps, scale, active, scenario.batch_duration)
    prices, times = price_response(beta[None, :], caps, scale)
    prices = np.where(active, prices, caps)
    times = np.where(active, times, 0.0)
    objective = float(np.sum(prices * times))

    beta_m = np.broadcast_to(beta[None, :], caps.shape)
    interested = scenario.interested
    safe_caps = np.where(interested, caps, 1.0)
    at_cap = active & (prices >= caps)
    gamma = np.where(at_cap | ~active, scale * np.maximum(0.0, beta_m / safe_caps - 1.0), 0.0)
    nu = np.where(~active, np.maximum(0.0, caps - beta_m), 0.0)
    gamma = np.where(interested, gamma, 0.0)
    nu = np.where(interested, nu, 0.0)

    solution = PrimalSolution(a, prices, times, objective, beta, gamma, nu, 0.0)
    residual = kkt_residuals(scenario, a, solution)
    return PrimalSolution(a, prices, times, objective, beta, gamma, nu, residual)


def kkt_residuals(scenario: Scenario, assignment: NDArray, solution: PrimalSolution) -> float:
    """Largest violation of the primal's KKT system.

    Checks Lagrangian stationarity in every price, primal feasibility of the
    budget, cap and linking constraints, multiplier signs, and complementary
    slackness.  Times are recomputed as the best response to the prices.
    """
    a = np.asarray(assignment) == 1
    live = scenario.interested
    if not np.any(live):
        return 0.0
    caps, scale = scenario.caps, scenario.time_scale
    p = np.asarray(solution.prices, dtype=float)
    if np.any(live & (p <= 0)):
        return float("inf")
    safe_p = np.where(live, p, 1.0)
    safe_caps = np.where(live, caps, 1.0)
    log_ratio = np.log(safe_caps / safe_p)
    t = np.where(live, scale * log_ratio, 0.0)  # may be negative above the cap
    beta = np.broadcast_to(np.asarray(solution.beta, dtype=float)[None, :], caps.shape)
    gamma, nu = np.asarray(solution.gamma), np.asarray(solution.nu)
    budget = scenario.batch_duration

    # d/dp of  p t - beta t - gamma (p - cap) - nu (t - a T_j)
    grad = pair_revenue_derivative(safe_p, safe_caps, scale) + (beta + nu) * scale / safe_p - gamma
    stationarity = np.abs(np.where(live, grad, 0.0)).max()

    block_time = np.where(live, t, 0.0).sum(axis=0)
    link = np.where(live, t - a * budget[None, :], 0.0)
    primal = max(
        float(np.max(block_time - budget, initial=0.0)),
        float(np.max(np.where(live, p - caps, 0.0), initial=0.0)),
        float(np.max(link, initial=0.0)),
    )
    dual = float(max(0.0, -np.min(solution.beta), -np.min(gamma), -np.min(nu)))
    slack = max(
        float(np.max(np.abs(solution.beta * (block_time - budget)))),
        float(np.max(np.abs(np.where(live, gamma * (p - caps), 0.0)))),
        float(np.max(np.abs(nu * link))),
    )
    return float(max(stationarity, primal, dual, slack))


def report_from_primal(scenario: Scenario, algorithm: str, solution: PrimalSolution,
                       **extra: object) -> SolveReport:
    """Package a primal solve (prices, best-response times) as a :class:`SolveReport`."""
    utilities = follower_utilities(scenario, solution.prices, solution.assignment, solution.times)
    return SolveReport(
        algorithm=algorithm,
        assignment=solution.assignment,
        prices=solution.prices,
        times=solution.times,
        leader_revenue=solution.objective,
        follower_utilities=utilities,
        **extra,  # type: ignore[arg-type]
    )
