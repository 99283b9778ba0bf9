"""Seeded scenario generation and JSON (de)serialization.

Random draws come from :class:`SplitMix64` rather than numpy so that a seed
maps to the same scenario in any language.  Draw order inside
:func:`generate` is part of the contract:

1. ``t_design`` row-major (i outer, j inner), each ``hi * (1 - u)`` with
   ``u = next_float()``, redrawn while below ``t_design_floor``;
2. ``lambda`` row-major, each ``lo + (hi - lo) * u``;
3. ``vehicles`` per block, ``next_int(lo, hi)``;
4. ``block_budget`` per follower, ``next_int(lo, hi)``.

``alpha[j] = 1 + alpha_scale * vehicles[j]``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from adtime.model import Scenario, ScenarioError

MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 (Steele, Lea & Flood 2014), the standard 64-bit mixer.

    state += 0x9E3779B97F4A7C15;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
    z ^= z >> 31.
    """

    GOLDEN = 0x9E3779B97F4A7C15
    MUL1 = 0xBF58476D1CE4E5B9
    MUL2 = 0x94D049BB133111EB

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + self.GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * self.MUL1) & MASK64
        z = ((z ^ (z >> 27)) * self.MUL2) & MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_int(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (inclusive), unbiased by rejection."""
        if hi < lo:
            raise ValueError(f"empty integer range [{lo}, {hi}]")
        span = hi - lo + 1
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return lo + x % span

    def shuffle(self, items: list[Any]) -> list[Any]:
        """Fisher-Yates in place (from the back), returns ``items``."""
        for k in range(len(items) - 1, 0, -1):
            r = self.next_int(0, k)
            items[k], items[r] = items[r], items[k]
        return items


@dataclass(frozen=True)
class GenSpec:
    """Parameters of the random experiment generator.

    ``t_design_range`` is (lo, hi]; draws below ``t_design_floor`` are redrawn
    so every design constant is strictly positive.  ``block_budget_range``
    defaults to ``(1, m_blocks)`` when left as None.
    """

    n_followers: int = 5
    m_blocks: int = 15
    t_design_range: tuple[float, float] = (0.0, 4.0)
    t_design_floor: float = 1e-3
    lambda_range: tuple[float, float] = (0.0, 10.0)
    vehicles_range: tuple[int, int] = (1, 30)
    alpha_scale: float = 1.0 / 15.0
    batch_duration: float = 2.0
    block_budget_range: tuple[int, int] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("t_design_range", "lambda_range", "vehicles_range", "block_budget_range"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(value))
        if self.n_followers < 1 or self.m_blocks < 1:
            raise ScenarioError("n_followers/m_blocks", "must be positive")
        lo, hi = self.t_design_range
        if not (0 <= lo < hi) or not (lo <= self.t_design_floor < hi):
            raise ScenarioError("t_design_range", "need 0 <= lo < hi and floor inside the range")
        lo, hi = self.lambda_range
        if not (0 <= lo < hi):
            raise ScenarioError("lambda_range", "need 0 <= lo < hi")
        lo, hi = self.vehicles_range
        if not (1 <= lo <= hi):
            raise ScenarioError("vehicles_range", "need 1 <= lo <= hi")
        if not self.alpha_scale > 0:
            raise ScenarioError("alpha_scale", "must be > 0 (alpha = 1 + scale * vehicles >= 1)")
        if not self.batch_duration > 0:
            raise ScenarioError("batch_duration", "must be > 0")
        lo, hi = self.budget_range
        if not (0 <= lo <= hi <= self.m_blocks):
            raise ScenarioError("block_budget_range", "need 0 <= lo <= hi <= m_blocks")

    @property
    def budget_range(self) -> tuple[int, int]:
        if self.block_budget_range is None:
            return (1, self.m_blocks)
        return self.block_budget_range

    def with_(self, **changes: Any) -> "GenSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GenSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ScenarioError(unknown[0], "unknown key in generator spec")
        return cls(**data)


def generate(spec: GenSpec) -> Scenario:
    """Draw one scenario; identical specs give identical scenarios."""
    rng = SplitMix64(spec.seed)
    n, m = spec.n_followers, spec.m_blocks

    _, t_hi = spec.t_design_range
    t_design = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            value = t_hi * (1.0 - rng.next_float())
            while value < spec.t_design_floor:
                value = t_hi * (1.0 - rng.next_float())
            t_design[i, j] = value

    lam_lo, lam_hi = spec.lambda_range
    lam = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            lam[i, j] = lam_lo + (lam_hi - lam_lo) * rng.next_float()

    v_lo, v_hi = spec.vehicles_range
    vehicles = np.array([rng.next_int(v_lo, v_hi) for _ in range(m)], dtype=float)
    b_lo, b_hi = spec.budget_range
    budget = [rng.next_int(b_lo, b_hi) for _ in range(n)]

    return Scenario(
        n_followers=n,
        m_blocks=m,
        batch_duration=np.full(m, float(spec.batch_duration)),
        block_budget=budget,
        lam=lam,
        t_design=t_design,
        alpha=1.0 + spec.alpha_scale * vehicles,
    )


SCENARIO_KEYS = ("n_followers", "m_blocks", "batch_duration", "block_budget", "lambda", "t_design", "alpha")


def to_dict(scenario: Scenario) -> dict[str, Any]:
    return {
        "n_followers": scenario.n_followers,
        "m_blocks": scenario.m_blocks,
        "batch_duration": scenario.batch_duration.tolist(),
        "block_budget": [int(b) for b in scenario.block_budget],
        "lambda": scenario.lam.tolist(),
        "t_design": scenario.t_design.tolist(),
        "alpha": scenario.alpha.tolist(),
    }


def from_dict(data: Any) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("<root>", "scenario must be a JSON object")
    unknown = sorted(set(data) - set(SCENARIO_KEYS))
    if unknown:
        raise ScenarioError(unknown[0], "unknown key")
    missing = [k for k in SCENARIO_KEYS if k not in data]
    if missing:
        raise ScenarioError(missing[0], "missing key")
    for key in ("n_followers", "m_blocks"):
        if isinstance(data[key], bool) or not isinstance(data[key], int):
            raise ScenarioError(key, "must be an integer")
    return Scenario(
        n_followers=data["n_followers"],
        m_blocks=data["m_blocks"],
        batch_duration=data["batch_duration"],
        block_budget=data["block_budget"],
        lam=data["lambda"],
        t_design=data["t_design"],
        alpha=data["alpha"],
    )


def dumps(scenario: Scenario) -> str:
    # float repr is the shortest string that round-trips to the same double
    return json.dumps(to_dict(scenario), indent=2) + "\n"


def save(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(dumps(scenario))


def _reject_constant(name: str) -> float:
    raise ScenarioError(name, "non-finite numbers are not allowed")


def load(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text(), parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"malformed JSON: {exc}") from None
    return from_dict(data)


def load_genspec(path: str | Path | None) -> GenSpec:
    if path is None:
        return GenSpec()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"malformed JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ScenarioError("<root>", "generator spec must be a JSON object")
    return GenSpec.from_dict(data)


def saturation_duration(scenario: Scenario) -> float:
    """Batch duration beyond which no block's time budget can bind."""
    return float(np.where(scenario.interested, scenario.time_scale, 0.0).sum(axis=0).max())
