"""Adversarial Arrival Algorithm: mirror descent from the prediction with a
deliberately slow constant step ``eta = c * eps(T) / T``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mirror import EUCLIDEAN, NonpositiveStepSize, ReferenceFunction, RunTrajectory, simulate
from .model import ProblemParams, compute_params

__all__ = ["HorizonTooSmall", "AAConfig", "epsilon", "aa_step_size", "run_aa"]


class HorizonTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class AAConfig:
    """``epsilon_fn`` is ``"inv_log"`` (``1/ln T``) or ``"power"`` (``T**-p``)."""

    epsilon_fn: str = "inv_log"
    p: float = 0.5
    c: float = 1.0

    def __post_init__(self):
        if self.epsilon_fn not in ("inv_log", "power"):
            raise ValueError(f"unknown epsilon function {self.epsilon_fn!r}")
        if self.epsilon_fn == "power" and not 0 < self.p < 1:
            raise ValueError("power exponent must lie in (0, 1)")


def epsilon(T: int, config: AAConfig = AAConfig()) -> float:
    if config.epsilon_fn == "inv_log":
        if T < 3:
            raise HorizonTooSmall("inv_log epsilon needs T >= 3")
        return 1.0 / math.log(T)
    return float(T) ** (-config.p)


def aa_step_size(T: int, config: AAConfig = AAConfig()) -> float:
    if not config.c > 0:
        raise NonpositiveStepSize("scaling constant c must be positive")
    return config.c * epsilon(T, config) / T


def run_aa(seq, mu_hat, rho=None, budget=None, h: ReferenceFunction = EUCLIDEAN,
           config: AAConfig = AAConfig(), params: ProblemParams | None = None, lo: int = 0,
           hi: int | None = None, horizon: int | None = None) -> RunTrajectory:
    """Run AA over ``seq[lo:hi]`` starting from ``budget`` (default ``rho * T``).

    ``horizon`` is the ``T`` in the step size (defaults to ``len(seq)``), so
    a mid-horizon hand-off keeps the full-horizon step.
    """
    params = compute_params(seq, rho) if params is None else params
    rho = params.rho if rho is None else np.asarray(rho, dtype=float)
    T = len(seq)
    horizon = T if horizon is None else horizon
    budget = rho * T if budget is None else np.asarray(budget, dtype=float)
    eta = aa_step_size(horizon, config)
    mu_hat = np.clip(np.asarray(mu_hat, dtype=float).reshape(-1), 0.0, params.mu_max)
    tr = simulate(seq, rho, mu_hat, eta, h, budget, params.mu_max, lo=lo, hi=hi, algorithm="aa")
    return tr
