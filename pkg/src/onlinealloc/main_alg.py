"""Main Algorithm: blockwise SA with staged budget release, a reward-vs-OPT
hypothesis test at each block boundary, and a one-way switch to AA.

The test switches when the prefix optimum beats the collected reward by at
least ``L ln(T) sqrt(T)``. ``literal_pseudocode=True`` flips the branch to
the written if/else of the original listing (SA on a large gap), kept only
for auditing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .adversarial import AAConfig, run_aa
from .mirror import EUCLIDEAN, ReferenceFunction, RunTrajectory
from .model import ArrivalSequence, ProblemParams, compute_params
from .oracle import solve_opt
from .stochastic import TunerConfig, run_sa

__all__ = [
    "BlockTooSmall",
    "CONTINUE",
    "SWITCH",
    "MainConfig",
    "SwitchRecord",
    "default_L",
    "switch_threshold",
    "hypothesis_test",
    "run_main",
]

CONTINUE = "continue_stochastic"
SWITCH = "switch_adversarial"
EXACT_PREFIX_LIMIT = 12


class BlockTooSmall(ValueError):
    pass


def default_L(r_bar: float, m: int, delta: float, T: int) -> float:
    """Default test constant ``r_bar (1 + sqrt(2 delta^3)) + (m+1) r_bar / (delta ln T sqrt T)``."""
    return r_bar * (1.0 + math.sqrt(2.0 * delta ** 3)) + (m + 1) * r_bar / (
        delta * math.log(T) * math.sqrt(T))


@dataclass(frozen=True)
class MainConfig:
    delta: float = 0.1
    L: float | None = None
    aa_config: AAConfig = AAConfig()
    tuner: TunerConfig = TunerConfig()
    h: ReferenceFunction = EUCLIDEAN
    opt_method: str = "auto"
    literal_pseudocode: bool = False

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.L is not None and not self.L > 0:
            raise ValueError("L must be positive")
        if self.opt_method not in ("auto", "exact", "lp_relaxation"):
            raise ValueError(f"unknown opt method {self.opt_method!r}")


@dataclass
class SwitchRecord:
    switched: bool = False
    switch_time: int | None = None
    opt_prefix: float = 0.0
    reward_prefix: float = 0.0
    threshold: float = 0.0
    tests: list = field(default_factory=list)   # (t, opt_prefix, reward_prefix, decision)
    tail_aa_from: int | None = None


def switch_threshold(L: float, T: int) -> float:
    return L * math.log(T) * math.sqrt(T)


def hypothesis_test(opt_prefix: float, reward_prefix: float, L: float, T: int) -> str:
    if T < 2:
        raise ValueError("hypothesis test needs T >= 2")
    if opt_prefix >= reward_prefix + switch_threshold(L, T):
        return SWITCH
    return CONTINUE


def _prefix_opt(seq: ArrivalSequence, rho, n: int, method: str) -> tuple[float, str]:
    if n <= 0:
        return 0.0, "exact"
    if method == "auto":
        method = "exact" if n <= EXACT_PREFIX_LIMIT else "lp_relaxation"
    return solve_opt(seq.arrays.slice(0, n), rho * n, method).value, method


def run_main(seq: ArrivalSequence, mu_hat, config: MainConfig = MainConfig(), rho=None,
             params: ProblemParams | None = None) -> tuple[RunTrajectory, SwitchRecord]:
    params = compute_params(seq, rho) if params is None else params
    rho = params.rho
    T = len(seq)
    B = math.floor(config.delta * T)
    if B < 1:
        raise BlockTooSmall(f"floor(delta*T) = {B} < 1")
    L = default_L(params.r_bar, params.m, config.delta, T) if config.L is None else config.L
    threshold = switch_threshold(L, T) if T >= 2 else 0.0
    record = SwitchRecord(threshold=threshold)
    ledger = np.zeros(params.m)
    released = np.zeros(params.m)
    reward = 0.0
    parts: list[RunTrajectory] = []
    next_t = 1
    n_boundaries = math.ceil(1.0 / config.delta)
    # one initial step size for every block: 1/T of the full horizon by default
    tuner = config.tuner if config.tuner.eta_1 is not None else replace(config.tuner, eta_1=1.0 / T)
    for k in range(n_boundaries):
        t = k * B + 1
        if t > T:
            break
        opt_prefix, _ = _prefix_opt(seq, rho, t - 1, config.opt_method)
        decision = hypothesis_test(opt_prefix, reward, L, T) if T >= 2 else CONTINUE
        record.tests.append((t, opt_prefix, reward, decision))
        record.opt_prefix, record.reward_prefix = opt_prefix, reward
        run_block = decision == CONTINUE
        if config.literal_pseudocode:
            run_block = not run_block
        if not run_block:
            record.switched = True
            record.switch_time = t
            break
        block_len = min(B, T - t + 1)
        ledger = ledger + block_len * rho
        released = released + block_len * rho
        tr = run_sa(seq, mu_hat, config.h, tuner, rho=rho, budget=ledger,
                    params=params, lo=t - 1, hi=t - 1 + block_len, horizon=B)
        parts.append(tr)
        reward += tr.total_reward
        ledger = tr.remaining[-1].copy()
        next_t = t + block_len
    if next_t <= T:
        if not record.switched:
            record.tail_aa_from = next_t
        ledger = ledger + rho * (T - next_t + 1)
        released = released + rho * (T - next_t + 1)
        tr = run_aa(seq, mu_hat, rho=rho, budget=ledger, h=config.h, config=config.aa_config,
                    params=params, lo=next_t - 1, hi=T, horizon=T)
        parts.append(tr)
    if np.any(released > rho * T * (1 + 1e-12)):
        raise AssertionError("released more than the total budget")
    out = RunTrajectory.concat("main", parts, rho, np.zeros(params.m))
    out.meta["released"] = released
    out.meta["L"] = L
    return out, record
