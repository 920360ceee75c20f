import csv
import io

import numpy as np
import pytest

from onlinealloc.instances import gen_stochastic, two_type_spec
from onlinealloc.mirror import (EUCLIDEAN, SHIFTED_ENTROPY, NonpositiveStepSize,
                                ReferenceFunction, RunTrajectory, depletion_profile, md_step,
                                run_mda, run_prd, slackness)
from onlinealloc.model import compute_params

from _util import i0, random_instance, seq_of


def test_md_step_examples():
    assert md_step(EUCLIDEAN, [1.0], [0.0], 0.5).tolist() == [1.0]
    assert md_step(EUCLIDEAN, [1.0], [1.0 - 2.0], 0.5).tolist() == [1.5]
    assert md_step(EUCLIDEAN, [0.2], [1.0], 0.5).tolist() == [0.0]
    with pytest.raises(NonpositiveStepSize):
        md_step(EUCLIDEAN, [1.0], [1.0], 0.0)


def test_md_step_entropy_and_clip():
    out = md_step(SHIFTED_ENTROPY, [1.0], [-1.0], 0.5)
    assert out[0] == pytest.approx(2.0 * np.exp(0.5) - 1.0)
    assert md_step(EUCLIDEAN, [3.9], [-1.0], 0.5, mu_max=[4.0]).tolist() == [4.0]


def _grid_argmin(h, mu_t, phi, eta, lo, hi, n):
    z = np.linspace(lo, hi, n)
    if h.kind == "euclidean":
        obj = phi * z + 0.5 * (z - mu_t) ** 2 / eta
    else:
        s = h.shift
        obj = phi * z + ((z + s) * np.log((z + s) / (mu_t + s)) - (z - mu_t)) / eta
    return z[np.argmin(obj)]


@pytest.mark.parametrize("h", [EUCLIDEAN, SHIFTED_ENTROPY])
def test_md_step_matches_grid_argmin(h):
    rng = np.random.default_rng(0)
    for _ in range(20):
        mu_t, phi, eta = rng.uniform(0, 3), rng.uniform(-2, 2), rng.uniform(0.05, 1)
        coarse = _grid_argmin(h, mu_t, phi, eta, 0.0, 4.0, 40001)
        fine = _grid_argmin(h, mu_t, phi, eta, max(0.0, coarse - 1e-3), min(4.0, coarse + 1e-3),
                            20001)
        got = md_step(h, [mu_t], [phi], eta, mu_max=[4.0])[0]
        assert abs(got - fine) <= 1e-6


@pytest.mark.parametrize("h", [EUCLIDEAN, SHIFTED_ENTROPY])
def test_strong_convexity_witness(h):
    rng = np.random.default_rng(1)
    mu_max = np.array([4.0, 2.0])
    sigma = h.sigma(mu_max)
    for _ in range(200):
        x, y = rng.uniform(0, mu_max), rng.uniform(0, mu_max)
        assert h.bregman(x, y) >= sigma / 2 * np.abs(x - y).sum() ** 2 - 1e-12


def test_reference_function_validation():
    with pytest.raises(ValueError):
        ReferenceFunction("cubic")
    with pytest.raises(ValueError):
        ReferenceFunction("shifted_entropy", 0.0)


def test_prd_examples():
    seq, rho = i0()
    tr = run_prd(seq, [1.2], rho)
    assert tr.actions.tolist() == [1, 0, 1] and tr.total_reward == 5.0
    assert run_prd(seq, [10.0], rho).total_reward == 0.0
    tr0 = run_prd(seq, [0.0], rho)
    assert tr0.actions.tolist() == [1, 1, 0] and tr0.total_reward == 3.0


def test_mda_examples():
    seq, rho = i0()
    assert run_mda(seq, [1.2], 0.0, rho=rho).total_reward == 5.0
    tr = run_mda(seq, [0.0], 0.5, rho=rho)
    assert tr.total_reward == 3.0 and tr.mu[:, 0].tolist() == [0.0, 0.0, 0.0]
    with pytest.raises(NonpositiveStepSize):
        run_mda(seq, [0.0], -1.0, rho=rho)


def test_mda_ample_budget_takes_everything():
    seq = seq_of(*[[(r, (1,))] for r in (1, 2, 0.5, 3, 1)])
    for eta in (0.01, 0.5, 2.0):
        assert run_mda(seq, [0.0], eta, rho=[1.0]).total_reward == 7.5


def test_mda_eta_zero_equals_prd_on_random_instances():
    rng = np.random.default_rng(2)
    for _ in range(50):
        seq, rho = random_instance(rng)
        p = compute_params(seq, rho)
        mu = rng.uniform(0, p.mu_max)
        a = run_prd(seq, mu, rho)
        b = run_mda(seq, mu, 0.0, rho=rho)
        assert a.actions.tolist() == b.actions.tolist()


def test_mda_iterates_stay_inside_without_clipping():
    rng = np.random.default_rng(3)
    for s in range(20):
        seq = gen_stochastic(two_type_spec(seed=s), int(rng.integers(50, 400)))
        p = compute_params(seq, [0.5])
        tr = run_mda(seq, [0.0], 1 / np.sqrt(len(seq)), rho=p.rho, mu_max=np.full(1, np.inf))
        assert np.all(tr.mu <= p.mu_max)


def test_depletion_and_stopping_time():
    seq, rho = i0()
    p = compute_params(seq, rho)
    prof = depletion_profile(run_prd(seq, [0.0], rho), p)
    assert prof.depletion.tolist() == [3] and prof.tau == 1
    zero = run_prd(seq, [0.0], rho, budget=[0.0])
    assert depletion_profile(zero, p).depletion.tolist() == [1]
    ample = seq_of(*[[(1, (1,))]] * 4)
    pa = compute_params(ample, [2.0])
    assert depletion_profile(run_prd(ample, [0.0], [2.0]), pa).tau == 4


def test_slackness_examples():
    seq, rho = i0()
    tr = run_prd(seq, [0.0], rho)
    assert slackness(tr).w.tolist() == [0.0, 0.0, 0.0]
    one = seq_of([(1, (1,))])
    assert slackness(run_prd(one, [0.0], [1.0]), mu=[2.0]).w.tolist() == [0.0]
    two = seq_of([(3, (2,))])
    w = slackness(run_prd(two, [0.0], [1.0], budget=[2.0]), mu=[1.5]).w
    assert w.tolist() == [-1.5]


def test_trajectory_csv_and_concat():
    seq, rho = i0()
    tr = run_mda(seq, [0.0], 0.5, rho=rho)
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["t", "action", "reward", "g_1", "mu_1", "G_1", "eta_t"]
    assert [r[1] for r in rows[1:]] == ["1", "1", "0"]
    both = RunTrajectory.concat("x", [tr, tr], rho, np.zeros(1))
    assert len(both) == 6 and both.total_reward == 6.0
