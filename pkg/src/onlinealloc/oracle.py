"""Offline benchmarks: hindsight optimum, Lagrangian dual, perfect duals.

The exact optimum is a depth-first branch-and-bound over per-request action
choices. Nodes are pruned with Lagrangian bounds ``sum_s r*_s(mu) + mu.G``,
which upper-bound the LP relaxation of the remaining subproblem for any
``mu >= 0``; when cheap multipliers fail to prune, the node LP is solved and
its multipliers are inherited by the children.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .mirror import EUCLIDEAN, simulate
from .model import ArrivalSequence, DenseArrays, ProblemParams

__all__ = [
    "OfflineSolution",
    "NodeBudgetExceeded",
    "GridTooCoarse",
    "solve_opt",
    "solve_prefix_opt",
    "dual_value",
    "minimize_dual",
    "find_perfect_dual",
    "dual_grid",
]

DEFAULT_NODE_BUDGET = 1_000_000
DEFAULT_GRID_BUDGET = 250_000


class NodeBudgetExceeded(RuntimeError):
    pass


class GridTooCoarse(ValueError):
    pass


@dataclass(frozen=True)
class OfflineSolution:
    value: float
    actions: tuple[int, ...]
    method: str
    nodes: int = 0
    duals: np.ndarray | None = None


def _arrays(seq) -> DenseArrays:
    return seq.arrays if isinstance(seq, ArrivalSequence) else seq


def _group(arr: DenseArrays):
    """Collapse identical menus; returns ``(rows, counts)`` of representatives."""
    T = len(arr.n_actions)
    if T == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    flat = np.concatenate([arr.rewards, arr.consumption.reshape(T, -1),
                           arr.n_actions[:, None].astype(float)], axis=1)
    _, first, counts = np.unique(flat, axis=0, return_index=True, return_counts=True)
    order = np.argsort(first)
    return first[order], counts[order]


def _conj_matrix(arr: DenseArrays, mus: np.ndarray, rows=None) -> np.ndarray:
    """``r*_t(mu)`` for every (grid point, request): shape ``(K, len(rows))``."""
    rows = np.arange(len(arr.n_actions)) if rows is None else rows
    R = arr.rewards[rows]                     # (n, A)
    G = arr.consumption[rows]                 # (n, A, m)
    pad = np.arange(R.shape[1])[None, :] >= arr.n_actions[rows][:, None]
    out = np.empty((mus.shape[0], len(rows)))
    chunk = max(1, 2_000_000 // max(1, R.size))
    for lo in range(0, mus.shape[0], chunk):
        mu = mus[lo:lo + chunk]               # (k, m)
        s = R[None] - np.einsum("naj,kj->kna", G, mu)
        s[:, pad] = -np.inf
        out[lo:lo + chunk] = s.max(axis=2)
    return out


# ---------------------------------------------------------------------------
# LP relaxation
# ---------------------------------------------------------------------------


def _solve_lp(arr: DenseArrays, budget, rows=None, counts=None):
    """Fractional optimum with one variable per (menu type, action).

    Returns ``(value, resource multipliers)``.
    """
    budget = np.asarray(budget, dtype=float)
    if rows is None:
        rows, counts = _group(arr)
    if len(rows) == 0:
        return 0.0, np.zeros(budget.size)
    m = budget.size
    var_row, var_slot = [], []
    for k, t in enumerate(rows):
        for a in range(int(arr.n_actions[t])):
            var_row.append(k)
            var_slot.append(a)
    var_row = np.array(var_row)
    var_slot = np.array(var_slot)
    t_of = rows[var_row]
    c = -arr.rewards[t_of, var_slot]
    n = len(c)
    if n <= 2000:
        A_eq = np.zeros((len(rows), n))
        A_eq[var_row, np.arange(n)] = 1.0
    else:
        A_eq = sparse.csr_matrix((np.ones(n), (var_row, np.arange(n))), shape=(len(rows), n))
    b_eq = counts.astype(float)
    A_ub = arr.consumption[t_of, var_slot].T    # (m, n)
    res = linprog(c, A_ub=A_ub, b_ub=budget, A_eq=A_eq, b_eq=b_eq,
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP solve failed: {res.message}")
    duals = -np.asarray(res.ineqlin.marginals, dtype=float).reshape(m)
    return float(-res.fun), np.maximum(duals, 0.0)


# ---------------------------------------------------------------------------
# Branch and bound
# ---------------------------------------------------------------------------


class _BranchAndBound:
    def __init__(self, arr: DenseArrays, budget, node_budget: int):
        self.arr = arr
        self.T = len(arr.n_actions)
        self.budget = np.asarray(budget, dtype=float)
        self.node_budget = node_budget
        self.nodes = 0
        self.R = arr.rewards
        self.G = arr.consumption
        self.n = arr.n_actions
        # cheap multipliers with precomputed suffix sums of conjugates
        _, root_mu = _solve_lp(arr, self.budget)
        self.fixed_mus = np.vstack([np.zeros(self.budget.size), root_mu])
        conj = _conj_matrix(arr, self.fixed_mus)             # (2, T)
        self.suffix = np.concatenate([np.cumsum(conj[:, ::-1], axis=1)[:, ::-1],
                                      np.zeros((2, 1))], axis=1)
        self.best_value = -math.inf
        self.best_actions: list[int] = []
        self.order = [sorted(range(int(self.n[t])), key=lambda a: (-self.R[t, a], a))
                      for t in range(self.T)]

    def _lagrangian(self, t, rem, mu):
        if t >= self.T:
            return float(mu @ rem)
        conj = _conj_matrix(self.arr, mu[None, :], np.arange(t, self.T))[0]
        return float(conj.sum() + mu @ rem)

    def bound(self, t, rem, parent_mu) -> float:
        ub = float(np.min(self.suffix[:, t] + self.fixed_mus @ rem))
        if parent_mu is not None:
            ub = min(ub, self._lagrangian(t, rem, parent_mu))
        return ub

    def _dominated(self, value: float) -> bool:
        # LP values carry solver tolerance; only prune clear losers
        return value <= self.best_value - 1e-9 * (1.0 + abs(self.best_value))

    def solve(self):
        self._seed_incumbent()
        self._dfs(0, self.budget.copy(), 0.0, [], None)
        return self.best_value, self.best_actions

    def _seed_incumbent(self):
        for mu in self.fixed_mus:
            tr = simulate(self.arr, np.zeros_like(self.budget), mu, 0.0, EUCLIDEAN,
                          self.budget, np.full(self.budget.size, np.inf), algorithm="prd")
            slots = self._slots_from(tr)
            val = 0.0
            for t, a in enumerate(slots):
                val += self.R[t, a]
            if val > self.best_value:
                self.best_value, self.best_actions = val, slots

    def _slots_from(self, tr):
        idx = self.arr.index
        return [int(np.flatnonzero(idx[t] == tr.actions[t])[0]) for t in range(self.T)]

    def _dfs(self, t, rem, acc, chosen, parent_mu):
        self.nodes += 1
        if self.nodes > self.node_budget:
            raise NodeBudgetExceeded(f"exceeded {self.node_budget} nodes")
        if t == self.T:
            if acc > self.best_value:
                self.best_value, self.best_actions = acc, list(chosen)
            return
        if self._dominated(acc + self.bound(t, rem, parent_mu)):
            return
        if self.T - t > 2:
            lp_val, lp_mu = _solve_lp(self.arr.slice(t, self.T), rem)
            if self._dominated(acc + lp_val):
                return
            parent_mu = lp_mu
        for a in self.order[t]:
            g = self.G[t, a]
            if np.any(g > rem):
                continue
            chosen.append(a)
            self._dfs(t + 1, rem - g, acc + self.R[t, a], chosen, parent_mu)
            chosen.pop()


def solve_opt(seq, budget, method: str = "exact", node_budget: int = DEFAULT_NODE_BUDGET
              ) -> OfflineSolution:
    """Hindsight optimum of ``seq`` under total ``budget``.

    ``exact`` returns the integer optimum; ``lp_relaxation`` returns the
    fractional optimum (an upper bound) with a feasible rounding obtained by
    following the LP's resource prices.
    """
    arr = _arrays(seq)
    budget = np.asarray(budget, dtype=float).reshape(-1)
    if np.any(budget < 0):
        raise ValueError("budget must be nonnegative")
    T = len(arr.n_actions)
    if T == 0:
        return OfflineSolution(0.0, (), method)
    if method == "exact":
        bb = _BranchAndBound(arr, budget, node_budget)
        _, slots = bb.solve()
        value = 0.0
        for t, a in enumerate(slots):
            value += float(arr.rewards[t, a])
        actions = tuple(int(arr.index[t, a]) for t, a in enumerate(slots))
        return OfflineSolution(value, actions, "exact", bb.nodes)
    if method == "lp_relaxation":
        value, mu = _solve_lp(arr, budget)
        tr = simulate(arr, np.zeros_like(budget), mu, 0.0, EUCLIDEAN, budget,
                      np.full(budget.size, np.inf), algorithm="prd")
        return OfflineSolution(value, tuple(int(a) for a in tr.actions), "lp_relaxation",
                               duals=mu)
    raise ValueError(f"unknown method {method!r}")


def solve_prefix_opt(seq, rho, t: int, method: str = "exact") -> float:
    """``OPT_t``: optimum of the first ``t`` requests with budget ``rho * t``."""
    if t <= 0:
        return 0.0
    arr = _arrays(seq).slice(0, t)
    return solve_opt(arr, np.asarray(rho, dtype=float) * t, method).value


# ---------------------------------------------------------------------------
# Dual function
# ---------------------------------------------------------------------------


def dual_value(seq, mu, budget_rate, horizon: int | None = None) -> float:
    """Lagrangian dual ``sum_t r*_t(mu) + mu . rho * horizon``."""
    arr = _arrays(seq)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if np.any(mu < 0):
        raise ValueError("mu must be nonnegative")
    horizon = len(arr.n_actions) if horizon is None else horizon
    rows, counts = _group(arr)
    conj = _conj_matrix(arr, mu[None, :], rows)[0] if len(rows) else np.zeros(0)
    return float(conj @ counts + mu @ (np.asarray(budget_rate, dtype=float) * horizon))


def dual_grid(params: ProblemParams, resolution=None, grid_budget: int = DEFAULT_GRID_BUDGET
              ) -> np.ndarray:
    """Lexicographically ordered grid over ``[0, mu_max]`` (``mu_max/40`` steps by default)."""
    mu_max = params.mu_max
    res = mu_max / 40.0 if resolution is None else np.broadcast_to(
        np.asarray(resolution, dtype=float), mu_max.shape)
    if np.any(res <= 0):
        raise ValueError("grid resolution must be positive")
    counts = np.floor(mu_max / res + 1e-9).astype(np.int64) + 1
    total = int(np.prod(counts.astype(float)))
    if total > grid_budget:
        raise GridTooCoarse(f"grid has {total} points, budget is {grid_budget}")
    axes = [np.arange(c) * r for c, r in zip(counts, res)]
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, params.m)


def minimize_dual(seq, params: ProblemParams, grid_resolution=None,
                  grid_budget: int = DEFAULT_GRID_BUDGET):
    """Grid search for ``min D(mu)`` plus one round of half-step coordinate descent.

    Returns ``(mu, value)``.
    """
    arr = _arrays(seq)
    rows, counts = _group(arr)
    ctot = params.rho * params.T
    grid = dual_grid(params, grid_resolution, grid_budget)

    def D(mus):
        mus = np.atleast_2d(mus)
        base = _conj_matrix(arr, mus, rows) @ counts if len(rows) else np.zeros(len(mus))
        return base + mus @ ctot

    vals = D(grid)
    k = int(np.argmin(vals))
    best_mu, best_val = grid[k].copy(), float(vals[k])
    res = params.mu_max / 40.0 if grid_resolution is None else np.broadcast_to(
        np.asarray(grid_resolution, dtype=float), params.mu_max.shape)
    for j in range(params.m):
        for sgn in (-1.0, 1.0):
            cand = best_mu.copy()
            cand[j] = min(max(cand[j] + sgn * res[j] / 2.0, 0.0), params.mu_max[j])
            v = float(D(cand)[0])
            if v < best_val:
                best_mu, best_val = cand, v
    return best_mu, best_val


def find_perfect_dual(seq, params: ProblemParams, grid_resolution=None,
                      grid_budget: int = DEFAULT_GRID_BUDGET, budget=None):
    """Grid point whose greedy follower earns the most (ties: lowest lexicographic).

    Returns ``(mu_star, reward)``.
    """
    arr = _arrays(seq)
    budget = params.rho * len(arr.n_actions) if budget is None else np.asarray(budget, float)
    grid = dual_grid(params, grid_resolution, grid_budget)
    inf = np.full(params.m, np.inf)
    best_mu, best_r = None, -math.inf
    for mu in grid:
        tr = simulate(arr, params.rho, mu, 0.0, EUCLIDEAN, budget, inf, algorithm="prd")
        r = tr.total_reward
        if r > best_r:
            best_mu, best_r = mu, r
    return best_mu.copy(), float(best_r)
