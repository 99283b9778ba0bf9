import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from adtime.heuristic import random_assignment
from adtime.model import leader_revenue, pair_revenue, pair_revenue_derivative
from adtime.primal import dual_value, kkt_residuals, price_response, solve_primal
from adtime.scenario import GenSpec, generate
from conftest import make_scenario


def random_cases(count, seed=0):
    rng = np.random.default_rng(seed)
    for k in range(count):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 8))
        T = float(rng.choice([0.05, 0.3, 1.0, 3.0, 50.0]))
        s = generate(GenSpec(n_followers=n, m_blocks=m, batch_duration=T, seed=int(rng.integers(2**63))))
        yield s, random_assignment(s, k)


def slsqp_block(caps, scale, budget):
    """Independent numerical optimum of one block's price problem."""
    def neg(p):
        return -np.sum(p * scale * np.log(caps / p))

    cons = [{"type": "ineq", "fun": lambda p: budget - np.sum(scale * np.log(caps / p))}]
    best = None
    for start in (caps / np.e, caps * 0.9, caps * 0.5):
        res = minimize(neg, start, method="SLSQP", bounds=[(c * 1e-6, c) for c in caps], constraints=cons,
                       options={"ftol": 1e-14, "maxiter": 500})
        if best is None or res.fun < best.fun:
            best = res
    return -best.fun


class TestExamples:
    def test_unconstrained_single_pair(self, single_pair):
        sol = solve_primal(single_pair, [[1]])
        assert sol.prices[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert sol.times[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert sol.objective == pytest.approx(1.0, abs=1e-12)
        assert sol.beta[0] == 0.0
        grid = np.linspace(1e-4, np.e, 200_001)
        assert np.max(pair_revenue(grid, np.e, 1.0)) == pytest.approx(1.0, abs=1e-8)

    def test_two_identical_followers_split_evenly(self):
        s = make_scenario([[np.e], [np.e]], batch=1.0, budget=1)
        sol = solve_primal(s, [[1], [1]])
        assert np.allclose(sol.times, 0.5, atol=1e-9)
        assert np.allclose(sol.prices, math.exp(0.5), atol=1e-9)
        assert sol.objective == pytest.approx(math.exp(0.5), abs=1e-9)
        assert sol.beta[0] == pytest.approx(0.5 * math.exp(0.5), abs=1e-9)
        assert sol.objective == pytest.approx(1.64872, abs=1e-5)
        assert sol.beta[0] == pytest.approx(0.82436, abs=1e-5)
        # constrained 2-D grid search over (t1, t2) with t1 + t2 <= 1
        t1, t2 = np.meshgrid(np.linspace(0, 1, 1001), np.linspace(0, 1, 1001))
        revenue = t1 * np.e * np.exp(-t1) + t2 * np.e * np.exp(-t2)
        assert np.max(np.where(t1 + t2 <= 1 + 1e-12, revenue, 0)) == pytest.approx(sol.objective, abs=1e-5)

    def test_empty_assignment(self):
        s = generate(GenSpec(n_followers=2, m_blocks=3, seed=1))
        sol = solve_primal(s, np.zeros((2, 3), dtype=int))
        assert sol.objective == 0.0
        assert np.array_equal(sol.prices, s.caps)
        assert not np.any(sol.times)
        assert kkt_residuals(s, np.zeros((2, 3)), sol) <= 1e-12


class TestKkt:
    def test_random_instances_certified(self):
        worst = max(solve_primal(s, a).kkt_residual for s, a in random_cases(200))
        assert worst <= 1e-6

    def test_perturbed_prices_fail(self):
        s = make_scenario([[np.e], [np.e]], batch=1.0, budget=1)
        sol = solve_primal(s, [[1], [1]])
        bad = type(sol)(sol.assignment, sol.prices * 1.1, sol.times, sol.objective, sol.beta, sol.gamma,
                        sol.nu, 0.0)
        assert kkt_residuals(s, sol.assignment, bad) > 1e-3

    def test_multipliers_nonnegative(self):
        for s, a in random_cases(50, seed=1):
            sol = solve_primal(s, a)
            assert np.all(sol.beta >= 0) and np.all(sol.gamma >= 0) and np.all(sol.nu >= 0)
            assert np.all(sol.nu[a == 1] == 0)


class TestProperties:
    def test_budget_and_stationarity(self):
        for s, a in random_cases(100, seed=2):
            sol = solve_primal(s, a)
            used = sol.times.sum(axis=0)
            T = s.batch_duration
            assert np.all(used <= T * (1 + 1e-8))
            binding = sol.beta > 0
            assert np.allclose(used[binding], T[binding], rtol=1e-8, atol=0)
            live = (a == 1) & (sol.prices < s.caps)
            beta = np.broadcast_to(sol.beta, s.shape)
            lhs = np.log(s.caps[live] / sol.prices[live])
            assert np.allclose(lhs, 1 - beta[live] / sol.prices[live], atol=1e-8)

    def test_price_ordering(self):
        for s, a in random_cases(100, seed=3):
            sol = solve_primal(s, a)
            on = a == 1
            assert np.all(sol.prices[on] >= s.caps[on] / np.e * (1 - 1e-12))
            assert np.all(sol.prices[on] <= s.caps[on])

    def test_dominates_scaled_unconstrained_prices(self):
        for s, a in random_cases(100, seed=4):
            sol = solve_primal(s, a)
            on = a == 1
            t = np.where(on, s.time_scale, 0.0)  # times at cap / e
            shrink = np.minimum(1.0, s.batch_duration / np.maximum(t.sum(axis=0), 1e-300))
            p = np.where(on, s.caps * np.exp(-shrink[None, :]), s.caps)
            assert sol.objective >= leader_revenue(s, p, a) - 1e-9

    def test_lambda_scaling(self):
        for s, a in random_cases(30, seed=5):
            c = 3.7
            base, scaled = solve_primal(s, a), solve_primal(s.replace(lam=s.lam * c), a)
            assert np.allclose(scaled.times, base.times, atol=1e-9)
            assert scaled.objective == pytest.approx(c * base.objective, rel=1e-9, abs=1e-12)
            assert np.allclose(scaled.prices, c * base.prices, rtol=1e-9)

    def test_matches_independent_nlp(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            k = int(rng.integers(1, 4))
            lam = rng.uniform(0.5, 10, (k, 1))
            s = make_scenario(lam, t_design=rng.uniform(0.2, 4, (k, 1)), alpha=rng.uniform(1, 3),
                              batch=rng.uniform(0.05, 3), budget=1)
            sol = solve_primal(s, np.ones((k, 1), dtype=int))
            ref = slsqp_block(s.caps[:, 0], s.time_scale[:, 0], s.batch_duration[0])
            assert sol.objective >= ref - 1e-7 * max(1, ref)
            assert sol.objective == pytest.approx(ref, rel=1e-5)

    def test_budget_envelope(self):
        # d objective / d T_j equals the budget multiplier
        for s, a in random_cases(40, seed=7):
            sol = solve_primal(s, a)
            h = 1e-5
            for j in range(s.m_blocks):
                T = s.batch_duration.copy()
                up, down = T.copy(), T.copy()
                up[j] += h * T[j]
                down[j] -= h * T[j]
                fd = (solve_primal(s.replace(batch_duration=up), a).objective
                      - solve_primal(s.replace(batch_duration=down), a).objective) / (2 * h * T[j])
                assert fd == pytest.approx(sol.beta[j], rel=1e-4, abs=1e-6)


def test_revenue_derivative_matches_central_differences():
    rng = np.random.default_rng(8)
    cap = rng.uniform(0.1, 50, 1000)
    scale = rng.uniform(0.01, 4, 1000)
    p = cap * rng.uniform(0.01, 0.999, 1000)
    h = 1e-5 * p
    fd = (pair_revenue(p + h, cap, scale) - pair_revenue(p - h, cap, scale)) / (2 * h)
    analytic = pair_revenue_derivative(p, cap, scale)
    assert np.max(np.abs(fd - analytic) / np.maximum(np.abs(analytic), scale)) <= 1e-6


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 20), st.floats(0.01, 20), st.floats(0.01, 4))
def test_price_response_maximizes_priced_revenue(beta, cap, scale):
    p, t = price_response(beta, np.array([cap]), np.array([scale]))
    grid = np.linspace(cap * 1e-4, cap, 20_001)
    values = (grid - beta) * scale * np.log(cap / grid)
    best = max(np.max(values), 0.0)
    got = dual_value(beta, np.array([cap]), np.array([scale]))[0]
    assert got >= best - 1e-9 * max(1, abs(best))
    assert got == pytest.approx(best, rel=1e-4, abs=1e-7)
    assert 0 < p[0] <= cap and t[0] >= 0
