import math

import numpy as np
import pytest

from onlinealloc.instances import (BadWeights, DistributionSpec, ParameterViolation, Prediction,
                                   PredictionSpec, check_nondegeneracy, gen_lowerbound,
                                   gen_stochastic, make_prediction, random_l1_direction,
                                   read_prediction, two_type_spec, write_prediction)
from onlinealloc.mirror import run_prd
from onlinealloc.model import ArrivalRequest, compute_params
from onlinealloc.oracle import solve_opt

from _util import i0, seq_of


def test_single_support_is_constant():
    req = ArrivalRequest.from_menu([(1.0, (1.0,))])
    seq = gen_stochastic(DistributionSpec((req,), (1.0,), 3), 50)
    assert all(r == req for r in seq.requests)


def test_two_type_frequency_and_determinism():
    seq = gen_stochastic(two_type_spec(seed=42), 10 ** 4)
    frac = sum(r.label == "high" for r in seq.requests) / 10 ** 4
    assert abs(frac - 0.5) <= 0.02
    a = gen_stochastic(two_type_spec(seed=7), 200)
    assert a == gen_stochastic(two_type_spec(seed=7), 200)
    assert a != gen_stochastic(two_type_spec(seed=8), 200)


def test_bad_weights():
    req = ArrivalRequest.from_menu([(1.0, (1.0,))])
    with pytest.raises(BadWeights):
        DistributionSpec((req, req), (0.5, 0.6))
    with pytest.raises(BadWeights):
        DistributionSpec((), ())


def test_lower_bound_instances():
    seq, mu_hat = gen_lowerbound(10 ** 4, 4.0, 2.0, "instance_two")
    labels = [r.label for r in seq.requests]
    assert labels.index("gamma2") == 5000
    assert mu_hat[0] == pytest.approx(1 + 1 / math.log(10 ** 4))
    p = compute_params(seq, [1.0])
    opt = solve_opt(seq, p.budget, "lp_relaxation").value
    assert abs(opt - 2e4) <= 4 and abs(run_prd(seq, mu_hat, [1.0]).total_reward - 2e4) <= 4
    one, mu1 = gen_lowerbound(100, 4.0, 2.0, "instance_one")
    assert solve_opt(one, [100.0], "lp_relaxation").value == pytest.approx(100.0)
    assert run_prd(one, mu1, [1.0]).total_reward == 0.0


def test_lower_bound_precondition():
    with pytest.raises(ParameterViolation):
        gen_lowerbound(100, 2.0, 2.0)
    with pytest.raises(ValueError):
        gen_lowerbound(100, 4.0, 2.0, "instance_three")


def test_l1_direction_is_unit():
    rng = np.random.default_rng(0)
    for m in (1, 2, 5):
        assert np.abs(random_l1_direction(rng, m)).sum() == pytest.approx(1.0)


def test_prediction_accuracy_levels():
    seq = gen_stochastic(two_type_spec(seed=1), 10 ** 4)
    p = compute_params(seq, [0.5])
    perfect = make_prediction(seq, p, PredictionSpec())
    assert perfect.realized_distance == 0 and np.array_equal(perfect.mu_hat, perfect.mu_star)
    half = make_prediction(seq, p, PredictionSpec(0.5, 2.0, 0), mu_star=perfect.mu_star)
    assert half.realized_distance == pytest.approx(0.02)
    worst = make_prediction(seq, p, PredictionSpec(0.0, None, 0), mu_star=perfect.mu_star)
    boundary = p.mu_max[0] - perfect.mu_star[0] if worst.mu_hat[0] > perfect.mu_star[0] \
        else perfect.mu_star[0]
    assert worst.realized_distance == pytest.approx(min(p.kappa, boundary), rel=0.02)
    assert 0 <= worst.mu_hat[0] <= p.mu_max[0]


def test_prediction_never_exceeds_target():
    rng = np.random.default_rng(3)
    seq = seq_of(*[[(1, (1, 0.5)), (2, (0.5, 1))]] * 6)
    p = compute_params(seq, [0.4, 0.3])
    for s in range(30):
        a = float(rng.uniform(0, 2))
        pred = make_prediction(seq, p, PredictionSpec(a, None, s))
        assert pred.realized_distance <= p.kappa * p.T ** (-a) + 1e-12
        assert np.all(pred.mu_hat >= 0) and np.all(pred.mu_hat <= p.mu_max)


def test_prediction_sidecar_round_trip(tmp_path):
    pred = Prediction(np.array([0.25, 1.5]), accuracy_a=0.5, kappa=4.0, realized_distance=0.1)
    write_prediction(tmp_path / "p.pred", pred)
    lines = (tmp_path / "p.pred").read_text().splitlines()
    assert lines[0] == "2" and lines[1] == "0.25 1.5"
    back = read_prediction(tmp_path / "p.pred")
    assert back.mu_hat.tolist() == [0.25, 1.5] and back.kappa == 4.0


def test_nondegeneracy_examples():
    seq, rho = i0()
    assert check_nondegeneracy(seq, [1.2], zeta=0.0, rho=rho).spread.tolist() == [0]
    assert check_nondegeneracy(seq, [1.2], zeta=0.05, rho=rho).spread.tolist() == [0]
    knife = seq_of(*[[(1.0, (1.0,))]] * 200)
    rep = check_nondegeneracy(knife, [1.0], zeta=0.2, rho=[0.5], seed=1)
    assert rep.flagged and rep.spread[0] > 10
