"""Master problem: choose the assignment maximizing the accumulated Benders cuts.

Every cut bounds each block's revenue separately,

    R_j(a) <= constant_l[j] + sum_i coeff_l[i, j] * a[i, j],

and the master maximizes ``sum_j min_l`` of those bounds (``per_block``) or
the coarser ``min_l sum_j`` (one aggregated bound per cut), subject to
``sum_j a[i, j] <= block_budget[i]``, binary ``a``, ``a = 0`` where
lambda = 0, and ``a`` outside the excluded set.

Solved exactly by depth-first branch-and-bound.  With aggregated cuts the
node bound is, for every cut separately, the best completion under the row
budgets (per row, the largest remaining positive coefficients).  With
per-block cuts any choice of one cut per block gives a linear bound that the
same per-row greedy maximizes exactly; the choice starts from each block's
most pessimistic cut and is refined a few times at the greedy completion.
Among optimal assignments the lexicographically smallest row-major 0/1
vector is returned.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from numba import njit
from numpy.typing import NDArray

from adtime.model import FloatArray, IntArray, Scenario

BOUND_ROUNDS = 3


class MasterExhausted(RuntimeError):
    """Every feasible assignment is in the excluded set."""


@dataclass(frozen=True)
class BendersCut:
    """Per-block bounds ``R_j(a) <= constant[j] + sum_i coeff[i, j] * a[i, j]``."""

    constant: FloatArray
    coeff: FloatArray

    def block_values(self, assignment: NDArray) -> FloatArray:
        return np.asarray(self.constant, dtype=float) + np.sum(self.coeff * assignment, axis=0)

    def value(self, assignment: NDArray) -> float:
        """Bound on the total revenue."""
        return float(np.sum(self.block_values(assignment)))


@dataclass(frozen=True)
class MasterSolution:
    delta: float
    assignment: IntArray
    nodes_explored: int


def cuts_value(cuts: Sequence[BendersCut], assignment: NDArray, per_block: bool = True) -> float:
    """The master objective at ``assignment``."""
    if per_block:
        return float(np.sum(np.min([c.block_values(assignment) for c in cuts], axis=0)))
    return min(c.value(assignment) for c in cuts)


def cut_upper_bound(cuts: Sequence[BendersCut], partial: NDArray, block_budget: NDArray) -> float:
    """Admissible bound on the master value of any completion of ``partial``.

    ``partial`` holds 1 / 0 for fixed entries and -1 for free ones; pairs
    that can never be assigned should be passed as fixed zeros.  Each cut is
    maximized on its own (per row, the largest remaining positive
    coefficients within the remaining budget) and the smallest maximum is
    returned.  It bounds both master objectives, since
    ``sum_j min_l <= min_l sum_j``.
    """
    partial = np.asarray(partial)
    coeff = np.stack([np.asarray(c.coeff, dtype=float) for c in cuts])
    const = np.array([float(np.sum(c.constant)) for c in cuts])
    fixed_one = partial == 1
    free = partial == -1
    remaining = np.maximum(np.asarray(block_budget) - fixed_one.sum(axis=1), 0)
    base = const + (coeff * fixed_one).sum(axis=(1, 2))
    gains = -np.sort(-np.where(free, np.maximum(coeff, 0.0), 0.0), axis=2)
    csum = np.concatenate([np.zeros(gains.shape[:2] + (1,)), np.cumsum(gains, axis=2)], axis=2)
    take = np.minimum(remaining, gains.shape[2])
    best = np.take_along_axis(csum, np.broadcast_to(take[None, :, None], csum.shape[:2] + (1,)), axis=2)
    return float((base + best[..., 0].sum(axis=1)).min())


@njit(cache=True)
def _mixed_bound(coef, x, used, budget, fixed_sum, choice, pick, buf):
    """Exact row-budget maximum when block j is bounded by cut ``choice[j]`` alone.

    The maximizing completion is left in ``pick``.
    """
    n_rows, n_cols = pick.shape
    total = 0.0
    for j in range(n_cols):
        total += fixed_sum[choice[j], j]
    for i in range(n_rows):
        size = 0
        for j in range(n_cols):
            pick[i, j] = False
            v = i * n_cols + j
            if x[v] == -1 and coef[choice[j], v] > 0:
                buf[size] = coef[choice[j], v]
                size += 1
        room = budget[i] - used[i]
        if room <= 0 or size == 0:
            continue
        thr = 0.0
        if size > room:
            thr = np.sort(buf[:size])[size - room]
        taken = 0
        for j in range(n_cols):
            v = i * n_cols + j
            c = coef[choice[j], v]
            if x[v] == -1 and c > 0 and c >= thr and taken < room:
                pick[i, j] = True
                total += c
                taken += 1
    return total


@njit(cache=True)
def _bound(coef, sorted_vars, sorted_len, x, used, budget, fixed_sum, choice, pick, buf, rounds):
    n_cuts, n_groups = fixed_sum.shape
    bound = np.inf
    if n_groups == 1:
        for l in range(n_cuts):
            total = fixed_sum[l, 0]
            for i in range(budget.shape[0]):
                room = budget[i] - used[i]
                k = 0
                while room > 0 and k < sorted_len[l, i]:
                    v = sorted_vars[l, i, k]
                    if x[v] == -1:
                        total += coef[l, v]
                        room -= 1
                    k += 1
            if total < bound:
                bound = total
        return bound

    # per-block groups: start from the cut with the smallest optimistic block value
    n_rows, n_cols = pick.shape
    for j in range(n_cols):
        best = np.inf
        for l in range(n_cuts):
            value = fixed_sum[l, j]
            for i in range(n_rows):
                v = i * n_cols + j
                if x[v] == -1 and used[i] < budget[i] and coef[l, v] > 0:
                    value += coef[l, v]
            if value < best:
                best = value
                choice[j] = l
    for _ in range(rounds):
        value = _mixed_bound(coef, x, used, budget, fixed_sum, choice, pick, buf)
        if value < bound:
            bound = value
        # re-pick each block's cut at the completion just found
        changed = False
        for j in range(n_cols):
            best = np.inf
            best_l = choice[j]
            for l in range(n_cuts):
                value = fixed_sum[l, j]
                for i in range(n_rows):
                    if pick[i, j]:
                        value += coef[l, i * n_cols + j]
                if value < best:
                    best = value
                    best_l = l
            if best_l != choice[j]:
                changed = True
                choice[j] = best_l
        if not changed:
            break
    return bound


@njit(cache=True)
def _excluded_consistent(x, excluded, subsets):
    for e in range(excluded.shape[0]):
        ok = True
        for v in range(x.shape[0]):
            if x[v] != -1 and x[v] != excluded[e, v] and not (subsets and x[v] < excluded[e, v]):
                ok = False
                break
        if ok:
            return True
    return False


@njit(cache=True)
def _is_excluded(x, excluded, subsets):
    for e in range(excluded.shape[0]):
        hit = True
        for v in range(x.shape[0]):
            if x[v] != excluded[e, v] and not (subsets and x[v] < excluded[e, v]):
                hit = False
                break
        if hit:
            return True
    return False


@njit(cache=True)
def _lex_less(x, y):
    for v in range(x.shape[0]):
        if x[v] != y[v]:
            return x[v] < y[v]
    return False


@njit(cache=True)
def _search(const, coef, group_of, row_of, budget, x0, order, sorted_vars, sorted_len,
            n_cols, all_zero, excluded, subsets, tol, rounds):
    n_cuts, n_vars = coef.shape
    depth_max = order.shape[0]
    x = x0.copy()
    used = np.zeros(budget.shape[0], dtype=np.int64)
    fixed_sum = const.copy()
    for v in range(n_vars):
        if x[v] == 1:
            used[row_of[v]] += 1
            for l in range(n_cuts):
                fixed_sum[l, group_of[v]] += coef[l, v]

    choice = np.zeros(fixed_sum.shape[1], dtype=np.int64)
    pick = np.zeros((budget.shape[0], n_cols), dtype=np.bool_)
    buf = np.empty(n_cols)
    best_x = np.zeros(n_vars, dtype=np.int8)
    best_v = -np.inf
    found = False
    nodes = 0
    # stage[d]: 0 = untouched, 1 = first value tried, 2 = both tried
    stage = np.zeros(depth_max + 1, dtype=np.int8)
    first = np.zeros(depth_max + 1, dtype=np.int8)
    d = 0
    while d >= 0:
        if d == depth_max:
            nodes += 1
            value = 0.0
            for g in range(fixed_sum.shape[1]):
                low = np.inf
                for l in range(n_cuts):
                    if fixed_sum[l, g] < low:
                        low = fixed_sum[l, g]
                value += low
            if not _is_excluded(x, excluded, subsets):
                if (not found) or value > best_v + tol or (value >= best_v - tol and _lex_less(x, best_x)):
                    if (not found) or value > best_v:
                        best_v = value
                    best_x[:] = x
                    found = True
            d -= 1
            continue

        v = order[d]
        r = row_of[v]
        # undo the value currently applied at this depth
        if stage[d] > 0 and x[v] == 1:
            used[r] -= 1
            for l in range(n_cuts):
                fixed_sum[l, group_of[v]] -= coef[l, v]
        if stage[d] == 2:
            x[v] = -1
            stage[d] = 0
            d -= 1
            continue

        can_one = used[r] < budget[r]
        if stage[d] == 0:
            if all_zero[v] or not can_one:
                first[d] = 0
            else:
                first[d] = 1
            val = first[d]
            stage[d] = 1
        else:
            val = 1 - first[d]
            stage[d] = 2
            if val == 1:
                if not can_one:
                    x[v] = -1
                    stage[d] = 0
                    d -= 1
                    continue
                if all_zero[v]:
                    # the one-branch only duplicates zero-branch values unless
                    # some excluded assignment lives in this subtree
                    x[v] = 0
                    if not _excluded_consistent(x, excluded, subsets):
                        x[v] = -1
                        stage[d] = 0
                        d -= 1
                        continue

        x[v] = val
        if val == 1:
            used[r] += 1
            for l in range(n_cuts):
                fixed_sum[l, group_of[v]] += coef[l, v]
        nodes += 1
        if found:
            b = _bound(coef, sorted_vars, sorted_len, x, used, budget, fixed_sum, choice, pick,
                       buf, rounds)
            if b < best_v - tol:
                continue
        d += 1
        if d <= depth_max:
            stage[d] = 0
    return found, best_v, best_x, nodes


def _branch_order(coef: FloatArray, free: NDArray[np.bool_]) -> IntArray:
    spread = coef.max(axis=0) - coef.min(axis=0)
    top = coef.max(axis=0)
    idx = np.flatnonzero(free)
    keys = np.lexsort((idx, -top[idx], -spread[idx]))
    return idx[keys].astype(np.int64)


def solve_master(scenario: Scenario, cuts: Sequence[BendersCut],
                 excluded: Iterable[NDArray] = (), exclude_subsets: bool = False,
                 per_block: bool = True) -> MasterSolution:
    """Exact master solve; raises :class:`MasterExhausted` if nothing is left.

    With ``exclude_subsets`` every assignment contained in an excluded one is
    excluded as well (revenue is monotone in the assignment, so such subsets
    can never beat the assignment that contains them).
    """
    if not cuts:
        raise ValueError("master problem needs at least one cut")
    n, m = scenario.shape
    for c in cuts:
        if np.shape(c.coeff) != (n, m) or np.shape(c.constant) != (m,):
            raise ValueError(f"cut shapes {np.shape(c.constant)}, {np.shape(c.coeff)} "
                             f"do not match scenario shape {(n, m)}")
    coef = np.ascontiguousarray(np.stack([np.asarray(c.coeff, dtype=float).ravel() for c in cuts]))
    const = np.stack([np.asarray(c.constant, dtype=float) for c in cuts])
    if per_block:
        group_of = np.tile(np.arange(m, dtype=np.int64), n)
    else:
        const = const.sum(axis=1, keepdims=True)
        group_of = np.zeros(n * m, dtype=np.int64)
    budget = scenario.block_budget.astype(np.int64)
    free = (scenario.interested & (budget[:, None] > 0)).ravel()
    row_of = np.repeat(np.arange(n, dtype=np.int64), m)

    x0 = np.where(free, -1, 0).astype(np.int8)
    order = _branch_order(coef, free)
    n_cuts = coef.shape[0]
    sorted_vars = np.zeros((n_cuts, n, m), dtype=np.int64)
    sorted_len = np.zeros((n_cuts, n), dtype=np.int64)
    for l in range(n_cuts):
        for i in range(n):
            cols = np.flatnonzero(free[i * m:(i + 1) * m] & (coef[l, i * m:(i + 1) * m] > 0))
            cols = cols[np.argsort(-coef[l, i * m + cols], kind="stable")]
            sorted_vars[l, i, :cols.size] = i * m + cols
            sorted_len[l, i] = cols.size
    all_zero = np.all(coef == 0.0, axis=0)

    excl = [np.asarray(e).astype(np.int8).ravel() for e in excluded]
    excl_arr = np.array(excl, dtype=np.int8).reshape(len(excl), n * m)
    scale = float(np.max(np.abs(const).sum(axis=1) + np.abs(coef).sum(axis=1)))
    tol = 1e-11 * max(1.0, scale)

    found, _, best_x, nodes = _search(const, coef, group_of, row_of, budget, x0, order,
                                      sorted_vars, sorted_len, m, all_zero,
                                      excl_arr, exclude_subsets, tol, BOUND_ROUNDS)
    if not found:
        raise MasterExhausted("every feasible assignment has been excluded")
    assignment = best_x.reshape(n, m).astype(np.int64)
    return MasterSolution(cuts_value(cuts, assignment, per_block), assignment, int(nodes))
