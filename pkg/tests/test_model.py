import math

import numpy as np
import pytest

from onlinealloc.model import (Action, ArrivalRequest, ArrivalSequence, InstanceError,
                               InstanceValidationError, LengthMismatch, MissingVoidAction,
                               NonpositiveBudget, ResourceLedger, RewardExceedsBound,
                               best_response, compute_params, conjugate_value, format_instance,
                               parse_instance, read_instance, validate_instance, write_instance)

from _util import i0, seq_of


def test_validate_i0_params():
    seq, rho = i0()
    p = validate_instance(seq, rho, r_bar=3, g_bar=2, g_under=1)
    assert (p.r_bar, p.g_bar, p.g_under, p.alpha_star) == (3, 2, 1, 2)


def test_missing_void_reported_with_period():
    seq, rho = i0()
    reqs = list(seq.requests)
    reqs[1] = ArrivalRequest((Action(1, 1.0, (1.0,)),))
    with pytest.raises(InstanceValidationError) as err:
        validate_instance(ArrivalSequence(tuple(reqs)), rho)
    assert any(isinstance(e, MissingVoidAction) and e.t == 2 for e in err.value.errors)


def test_validation_collects_every_error():
    seq, _ = i0()
    with pytest.raises(InstanceValidationError) as err:
        validate_instance(seq, [0.0], T=4, r_bar=2.5)
    kinds = {type(e) for e in err.value.errors}
    assert {NonpositiveBudget, LengthMismatch, RewardExceedsBound} <= kinds


def test_lower_bound_pair_recovers_alpha():
    seq = seq_of([(1, (1,))], [(4, (2.5,))])
    p = validate_instance(seq, [1.0])
    assert p.alpha_star == 2.5


def test_best_response_examples():
    req = ArrivalRequest.from_menu([(2, (1,))])
    assert best_response(req, [0.5], [3.0]).index == 1
    assert best_response(req, [3.0], [3.0]).index == 0
    tie = ArrivalRequest.from_menu([(1, (1,))])
    assert best_response(tie, [1.0], [3.0]).index == 1


def test_best_response_skips_unaffordable_and_breaks_ties_by_index():
    req = ArrivalRequest.from_menu([(5, (3,)), (1, (1,)), (1, (1,))])
    assert best_response(req, [0.0], [2.0]).index == 2
    ledger = ResourceLedger(np.array([0.5]))
    assert best_response(req, [0.0], ledger).index == 0


def test_conjugate_examples():
    req = ArrivalRequest.from_menu([(2, (1,))])
    assert conjugate_value(req, [0.5]) == 1.5
    assert conjugate_value(req, [2.0]) == 0.0
    two = ArrivalRequest.from_menu([(1, (1, 0)), (3, (0, 2))])
    assert conjugate_value(two, [0.5, 1.0]) == 1.0


def test_compute_params_examples():
    seq, rho = i0()
    p = compute_params(seq, rho)
    assert p.mu_max.tolist() == [4.0] and p.kappa == 4.0
    seq2 = seq_of([(1, (2, 1)), (1, (1, 4))])
    assert compute_params(seq2, [1.0, 2.0]).alpha_star == 2.0
    assert compute_params(seq_of([(1, (0.5,))]), [1.0]).alpha_star == 1.0


def test_ledger_never_goes_negative():
    ledger = ResourceLedger(np.array([1.0, 1.0]))
    ledger.charge(np.array([1.0, 0.5]))
    assert not ledger.can_afford(np.array([0.5, 0.0]))
    with pytest.raises(ValueError):
        ledger.charge(np.array([0.5, 0.0]))


def test_text_round_trip(tmp_path):
    seq, rho = i0()
    path = tmp_path / "i0.txt"
    write_instance(path, seq, rho)
    back, rho2 = read_instance(path)
    assert back == seq and rho2.tolist() == rho.tolist()
    assert format_instance(back, rho2) == path.read_text()


def test_parse_comments_and_errors():
    text = "# tiny\n1 1\n1.0  # rate\n2\n0 0\n1 1\n"
    seq, rho = parse_instance(text)
    assert len(seq) == 1 and rho.tolist() == [1.0]
    with pytest.raises(MissingVoidAction):
        parse_instance("1 1\n1.0\n1\n1 1\n")
    with pytest.raises(InstanceError):
        parse_instance("1 2\n1.0\n1\n0 0\n")
    with pytest.raises(InstanceError):
        parse_instance("1 1\nx\n1\n0 0\n")


def test_dense_arrays_pad_menus():
    seq = seq_of([(1, (1,))], [(1, (1,)), (2, (1,))])
    arr = seq.arrays
    assert arr.rewards.shape == (2, 3)
    assert arr.n_actions.tolist() == [2, 3]
    assert math.isclose(arr.slice(1, 2).rewards[0, 2], 2.0)
