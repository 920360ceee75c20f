import numpy as np
import pytest

from onlinealloc.instances import gen_lowerbound
from onlinealloc.model import compute_params
from onlinealloc.oracle import (GridTooCoarse, NodeBudgetExceeded, dual_grid, dual_value,
                                find_perfect_dual, minimize_dual, solve_opt, solve_prefix_opt)

from _util import brute_force_opt, i0, random_instance, seq_of


def test_i0_exact_optimum():
    seq, rho = i0()
    sol = solve_opt(seq, [3.0])
    assert sol.value == 5.0 and sol.actions == (1, 0, 1)
    assert solve_opt(seq, [3.0], "lp_relaxation").value == pytest.approx(5.0)


def test_zero_budget_is_all_void():
    seq, _ = i0()
    sol = solve_opt(seq, [0.0])
    assert sol.value == 0.0 and set(sol.actions) == {0}


def test_lower_bound_instance_two_optimum():
    seq, _ = gen_lowerbound(1000, 4.0, 2.0, "instance_two")
    assert solve_opt(seq, [1000.0], "lp_relaxation").value == pytest.approx(2000.0)


def test_dual_value_examples():
    seq, rho = i0()
    assert dual_value(seq, [0.0], rho) == 6.0
    assert dual_value(seq, [3.0], rho) == 9.0
    assert dual_value(seq, [1.0], rho) == 5.0
    with pytest.raises(ValueError):
        dual_value(seq, [-1.0], rho)


def test_minimize_dual_i0():
    seq, rho = i0()
    p = compute_params(seq, rho)
    mu, val = minimize_dual(seq, p, 0.1)
    assert 1.0 <= mu[0] <= 1.5 and val == pytest.approx(5.0)
    assert val <= 5 + (p.m + 1) * p.r_bar


def test_minimize_dual_void_only():
    seq = seq_of([(0.0, (0.5,))], [(0.0, (0.5,))])
    p = compute_params(seq, [1.0])
    mu, val = minimize_dual(seq, p)
    assert mu.tolist() == [0.0] and val == 0.0


def test_perfect_dual_i0():
    seq, rho = i0()
    p = compute_params(seq, rho)
    mu, reward = find_perfect_dual(seq, p, 0.1)
    # every point of the open interval (1, 1.5) earns OPT; the lowest grid point wins the tie
    assert 1.0 < mu[0] < 1.5 and reward == 5.0


def test_perfect_dual_ample_budget_is_zero():
    seq = seq_of([(1, (1,))], [(2, (1,))], [(0.5, (1,))])
    p = compute_params(seq, [1.0])
    mu, reward = find_perfect_dual(seq, p)
    assert mu.tolist() == [0.0] and reward == 3.5


def test_prefix_opt():
    seq, rho = i0()
    assert solve_prefix_opt(seq, rho, 0) == 0.0
    assert solve_prefix_opt(seq, rho, 1) == 2.0
    assert solve_prefix_opt(seq, rho, 2) == 3.0
    assert solve_prefix_opt(seq, rho, 3) == 5.0


def test_prefix_opt_monotone_on_repeated_arrivals():
    seq = seq_of(*[[(1, (1,)), (3, (2,))]] * 8)
    vals = [solve_prefix_opt(seq, [0.75], t) for t in range(9)]
    assert vals == sorted(vals)


def test_lp_bounds_exact_from_above():
    rng = np.random.default_rng(5)
    for _ in range(40):
        seq, rho = random_instance(rng)
        b = rho * len(seq)
        assert solve_opt(seq, b, "lp_relaxation").value >= solve_opt(seq, b).value - 1e-9


def test_exact_matches_brute_force_small_sample():
    rng = np.random.default_rng(11)
    for _ in range(30):
        seq, rho = random_instance(rng)
        assert solve_opt(seq, rho * len(seq)).value == brute_force_opt(seq, rho * len(seq))


def test_node_budget_enforced():
    rng = np.random.default_rng(3)
    seq, rho = random_instance(rng, T_min=8, T_max=8, extra_max=2, m_max=2)
    with pytest.raises(NodeBudgetExceeded):
        solve_opt(seq, rho * len(seq), node_budget=1)


def test_grid_budget_enforced():
    seq, rho = i0()
    p = compute_params(seq, rho)
    assert len(dual_grid(p)) == 41
    with pytest.raises(GridTooCoarse):
        dual_grid(p, 1e-6)


def test_unknown_method():
    seq, _ = i0()
    with pytest.raises(ValueError):
        solve_opt(seq, [1.0], "greedy")
