"""Leader-follower pricing and time allocation for roadside advertising blocks.

A block manager (leader) prices and assigns advertising time in city blocks;
advertising companies (followers) answer with their utility-maximizing rental
times.  The package solves the leader's problem exactly by generalized
Benders decomposition, approximately by a one-shot heuristic, and by brute
force on small instances.
"""

from adtime.gbd import GbdConfig, solve_gbd
from adtime.heuristic import solve_heuristic, solve_random_baseline
from adtime.model import Scenario, ScenarioError, SolveReport
from adtime.oracle import oracle_solve, verify_equilibrium
from adtime.primal import solve_primal
from adtime.scenario import GenSpec, generate, load, save

__all__ = [
    "GbdConfig", "GenSpec", "Scenario", "ScenarioError", "SolveReport", "generate", "load",
    "oracle_solve", "save", "solve_gbd", "solve_heuristic", "solve_primal",
    "solve_random_baseline", "verify_equilibrium",
]
__version__ = "0.1.0"
