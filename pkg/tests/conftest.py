import sys

import numpy as np
import pytest

from adtime.model import Scenario


def make_scenario(lam, t_design=None, alpha=None, batch=10.0, budget=None) -> Scenario:
    """Small hand-built scenario; scalars broadcast over the lambda shape."""
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    n, m = lam.shape
    t_design = np.broadcast_to(np.asarray(1.0 if t_design is None else t_design, dtype=float), (n, m))
    alpha = np.broadcast_to(np.asarray(1.0 if alpha is None else alpha, dtype=float), (m,))
    batch = np.broadcast_to(np.asarray(batch, dtype=float), (m,))
    budget = np.broadcast_to(np.asarray(m if budget is None else budget), (n,))
    return Scenario(n, m, batch, budget, lam, t_design, alpha)


@pytest.fixture
def single_pair() -> Scenario:
    """N=1, M=1, lambda=e, alpha=1, T_design=1, T=10."""
    return make_scenario([[np.e]], batch=10.0, budget=1)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
