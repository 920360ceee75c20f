"""Shared builders for the test suite."""

import itertools

import numpy as np

from onlinealloc.model import ArrivalRequest, ArrivalSequence


def seq_of(*menus, label=None):
    """Sequence from per-period menus of ``(reward, consumption)`` (void added)."""
    return ArrivalSequence(tuple(ArrivalRequest.from_menu(m, label=label) for m in menus))


def i0():
    """Three single-resource requests, rewards (2, 1, 3), consumptions (1, 1, 2), rho = 1."""
    return seq_of([(2, (1,))], [(1, (1,))], [(3, (2,))]), np.array([1.0])


def random_instance(rng, T_max=8, extra_max=2, m_max=2, T_min=1):
    """Small instance on a dyadic grid so every feasibility check is exact."""
    m = int(rng.integers(1, m_max + 1))
    T = int(rng.integers(T_min, T_max + 1))
    menus = []
    for _ in range(T):
        k = int(rng.integers(1, extra_max + 1))
        menus.append([(float(rng.integers(1, 9)) / 4,
                       tuple(float(x) for x in rng.integers(1, 5, size=m) / 4))
                      for _ in range(k)])
    rho = rng.integers(1, 5, size=m) / 8
    return seq_of(*menus), rho


def brute_force_opt(seq, budget):
    budget = np.asarray(budget, dtype=float)
    best = 0.0
    for prof in itertools.product(*[r.actions for r in seq.requests]):
        used = np.zeros(budget.size)
        value = 0.0
        for a in prof:
            used += a.consumption
            value += a.reward
        if np.all(used <= budget) and value > best:
            best = value
    return best
