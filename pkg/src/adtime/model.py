"""Domain types and closed-form game primitives.

The leader (block manager) posts a unit price ``p[i, j]`` and an assignment
``a[i, j]`` for every follower ``i`` and block ``j``; each follower answers
with a rental time ``t[i, j]``.  Everything here is a pure function of its
inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]


class ScenarioError(ValueError):
    """A scenario (or a file describing one) violates an invariant.

    ``field`` names the offending entry, e.g. ``"alpha[3]"``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NotParticipantError(ValueError):
    """The follower has zero interest (lambda == 0) in the block."""


class InvalidPriceError(ValueError):
    """Non-positive price; the follower best response would be unbounded."""


def _first_bad(mask: NDArray) -> str:
    idx = np.argwhere(mask)[0]
    return "[" + "][".join(str(int(k)) for k in idx) + "]"


@dataclass(frozen=True, eq=False)
class Scenario:
    """One problem instance (a single time batch).

    Attributes:
        n_followers: number of advertising companies N.
        m_blocks: number of blocks M.
        batch_duration: length-M batch durations T_j.
        block_budget: length-N maximum number of blocks per follower M_i.
        lam: N x M maximum satisfaction values (serialized as ``lambda``).
        t_design: N x M design time constants, strictly positive.
        alpha: length-M vehicle densities, each >= 1.
    """

    n_followers: int
    m_blocks: int
    batch_duration: FloatArray
    block_budget: IntArray
    lam: FloatArray
    t_design: FloatArray
    alpha: FloatArray

    def __post_init__(self) -> None:
        n, m = self.n_followers, self.m_blocks
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ScenarioError("n_followers", "must be a positive integer")
        if not isinstance(m, (int, np.integer)) or m < 1:
            raise ScenarioError("m_blocks", "must be a positive integer")
        object.__setattr__(self, "n_followers", int(n))
        object.__setattr__(self, "m_blocks", int(m))

        shapes = {
            "batch_duration": (m,),
            "block_budget": (n,),
            "lambda": (n, m),
            "t_design": (n, m),
            "alpha": (m,),
        }
        attrs = {
            "batch_duration": "batch_duration",
            "block_budget": "block_budget",
            "lambda": "lam",
            "t_design": "t_design",
            "alpha": "alpha",
        }
        for name, attr in attrs.items():
            try:
                arr = np.array(getattr(self, attr), dtype=np.float64)
            except (TypeError, ValueError) as exc:
                raise ScenarioError(name, f"not numeric ({exc})") from None
            if arr.shape != shapes[name]:
                raise ScenarioError(name, f"expected shape {shapes[name]}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ScenarioError(name + _first_bad(~np.isfinite(arr)), "must be finite")
            if name == "block_budget":
                if np.any(arr != np.round(arr)):
                    raise ScenarioError(name + _first_bad(arr != np.round(arr)), "must be an integer")
                arr = arr.astype(np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)

        checks = [
            ("batch_duration", self.batch_duration <= 0, "must be > 0"),
            ("block_budget", (self.block_budget < 0) | (self.block_budget > m), "must lie in [0, m_blocks]"),
            ("lambda", self.lam < 0, "must be >= 0"),
            ("t_design", self.t_design <= 0, "must be > 0"),
            ("alpha", self.alpha < 1, "must be >= 1"),
        ]
        for name, bad, message in checks:
            if np.any(bad):
                raise ScenarioError(name + _first_bad(bad), message)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_followers, self.m_blocks)

    @property
    def interested(self) -> NDArray[np.bool_]:
        """Pairs that may ever be assigned (lambda > 0)."""
        return self.lam > 0

    @property
    def caps(self) -> FloatArray:
        """Participation price caps lambda * alpha / T_design for every pair."""
        return self.lam * self.alpha[None, :] / self.t_design

    @property
    def time_scale(self) -> FloatArray:
        """T_design / alpha: the follower's best-response time per unit of log price ratio."""
        return self.t_design / self.alpha[None, :]

    def replace(self, **changes: Any) -> "Scenario":
        kwargs = {
            "n_followers": self.n_followers,
            "m_blocks": self.m_blocks,
            "batch_duration": self.batch_duration,
            "block_budget": self.block_budget,
            "lam": self.lam,
            "t_design": self.t_design,
            "alpha": self.alpha,
        }
        kwargs.update(changes)
        return Scenario(**kwargs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.batch_duration, other.batch_duration)
            and np.array_equal(self.block_budget, other.block_budget)
            and np.array_equal(self.lam, other.lam)
            and np.array_equal(self.t_design, other.t_design)
            and np.array_equal(self.alpha, other.alpha)
        )

    __hash__ = None  # type: ignore[assignment]

    def check_index(self, i: int, j: int) -> None:
        if not (0 <= i < self.n_followers) or not (0 <= j < self.m_blocks):
            raise IndexError(f"pair ({i}, {j}) outside {self.n_followers}x{self.m_blocks} scenario")

    def check_assignment(self, assignment: NDArray) -> IntArray:
        """Validate binary values, per-follower budgets and lambda exclusion."""
        a = np.asarray(assignment)
        if a.shape != self.shape:
            raise ValueError(f"assignment shape {a.shape} != scenario shape {self.shape}")
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("assignment entries must be 0 or 1")
        a = a.astype(np.int64)
        over = a.sum(axis=1) > self.block_budget
        if np.any(over):
            raise ValueError(f"follower {int(np.argmax(over))} exceeds its block budget")
        if np.any((a == 1) & ~self.interested):
            i, j = np.argwhere((a == 1) & ~self.interested)[0]
            raise NotParticipantError(f"pair ({i}, {j}) has lambda = 0 and cannot be assigned")
        return a


@dataclass
class SolveReport:
    """Outcome of one leader-side solve.

    ``bound_trace`` holds (LB, UB) pairs and is empty for algorithms that are
    not decomposition based.  ``wall_time`` is in seconds.
    """

    algorithm: str
    assignment: IntArray
    prices: FloatArray
    times: FloatArray
    leader_revenue: float
    follower_utilities: FloatArray
    iterations: int = 1
    bound_trace: list[tuple[float, float]] = field(default_factory=list)
    wall_time: float = 0.0
    converged: bool = True

    @property
    def sum_utility(self) -> float:
        return float(np.sum(self.follower_utilities))

    @property
    def gap(self) -> float:
        """Final UB - LB, or 0 when no bounds were recorded."""
        if not self.bound_trace:
            return 0.0
        lb, ub = self.bound_trace[-1]
        return float(ub - lb)

    def recomputed_revenue(self) -> float:
        return float(np.sum(self.assignment * self.prices * self.times))

    def to_dict(self, include_timing: bool = True) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "leader_revenue": float(self.leader_revenue),
            "sum_utility": self.sum_utility,
            "follower_utilities": [float(u) for u in self.follower_utilities],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "gap": self.gap,
            "bound_trace": [[float(lb), float(ub)] for lb, ub in self.bound_trace],
            "wall_time": float(self.wall_time) if include_timing else None,
            "assignment": self.assignment.astype(int).tolist(),
            "prices": self.prices.tolist(),
            "times": self.times.tolist(),
        }


def satisfaction(scenario: Scenario, i: int, j: int, t: float) -> float:
    """lambda * (1 - exp(-alpha * t / T_design)) for pair (i, j)."""
    scenario.check_index(i, j)
    if t < 0:
        raise ValueError(f"negative time {t}")
    rate = scenario.alpha[j] / scenario.t_design[i, j]
    return float(scenario.lam[i, j] * -np.expm1(-rate * t))


def satisfaction_matrix(scenario: Scenario, times: NDArray) -> FloatArray:
    return scenario.lam * -np.expm1(-np.asarray(times) / scenario.time_scale)


def _check_dims(scenario: Scenario, *mats: NDArray) -> None:
    for mat in mats:
        if np.shape(mat) != scenario.shape:
            raise ValueError(f"matrix shape {np.shape(mat)} != scenario shape {scenario.shape}")


def follower_utility(scenario: Scenario, prices: NDArray, assignment: NDArray, times: NDArray,
                     i: int) -> float:
    """Satisfaction minus payment summed over the blocks follower i holds."""
    _check_dims(scenario, prices, assignment, times)
    if not 0 <= i < scenario.n_followers:
        raise IndexError(f"follower {i} out of range")
    return float(follower_utilities(scenario, prices, assignment, times)[i])


def follower_utilities(scenario: Scenario, prices: NDArray, assignment: NDArray,
                       times: NDArray) -> FloatArray:
    _check_dims(scenario, prices, assignment, times)
    a = np.asarray(assignment)
    t = np.asarray(times, dtype=float)
    terms = satisfaction_matrix(scenario, t) - np.asarray(prices) * t
    return np.where(a == 1, terms, 0.0).sum(axis=1)


def price_cap(scenario: Scenario, i: int, j: int) -> float:
    """Highest price at which follower i still rents time in block j."""
    scenario.check_index(i, j)
    return float(scenario.lam[i, j] * scenario.alpha[j] / scenario.t_design[i, j])


def follower_best_response(scenario: Scenario, i: int, j: int, p: float) -> float:
    """Rental time maximizing satisfaction minus payment at unit price ``p``."""
    scenario.check_index(i, j)
    if scenario.lam[i, j] == 0:
        raise NotParticipantError(f"follower {i} is not interested in block {j}")
    if not p > 0:
        raise InvalidPriceError(f"price must be positive, got {p}")
    cap = price_cap(scenario, i, j)
    if p >= cap:
        return 0.0
    return float(scenario.time_scale[i, j] * np.log(cap / p))


def best_response_times(scenario: Scenario, prices: NDArray, assignment: NDArray) -> FloatArray:
    """Vectorized best response; unassigned pairs get zero time."""
    a = np.asarray(assignment) == 1
    p = np.asarray(prices, dtype=float)
    if np.any(a & (p <= 0)):
        raise InvalidPriceError("assigned pairs need strictly positive prices")
    with np.errstate(divide="ignore", invalid="ignore"):
        t = scenario.time_scale * np.log(scenario.caps / p)
    return np.where(a & (p < scenario.caps), np.maximum(t, 0.0), 0.0)


def pair_revenue(price: NDArray | float, cap: NDArray | float, scale: NDArray | float) -> Any:
    """p * t*(p) for a single pair, ``scale`` being T_design / alpha."""
    return price * scale * np.log(cap / price)


def pair_revenue_derivative(price: NDArray | float, cap: NDArray | float, scale: NDArray | float) -> Any:
    """d/dp of :func:`pair_revenue` below the cap: ``scale * (log(cap / p) - 1)``."""
    return scale * (np.log(cap / price) - 1.0)


def leader_revenue(scenario: Scenario, prices: NDArray, assignment: NDArray) -> float:
    """Leader revenue when every assigned follower best-responds to ``prices``."""
    _check_dims(scenario, prices, assignment)
    a = np.asarray(assignment) == 1
    if np.any(a & ~scenario.interested):
        raise NotParticipantError("assignment selects a pair with lambda = 0")
    p = np.asarray(prices, dtype=float)
    caps = scenario.caps
    if np.any(a & ((p <= 0) | (p > caps))):
        raise InvalidPriceError("assigned prices must lie in (0, cap]")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = pair_revenue(p, caps, scenario.time_scale)
    return float(np.where(a, terms, 0.0).sum())
