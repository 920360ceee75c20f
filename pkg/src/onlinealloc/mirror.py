"""Mirror-descent machinery and the two baseline policies.

``run_prd`` follows a fixed dual vector; ``run_mda`` updates the dual by a
mirror-descent step on the subgradient ``rho - g_t(x_t)`` after each
request. Both (and every other policy in the package) funnel through
:func:`simulate`, which drives the compiled kernel.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .model import ArrivalSequence, DenseArrays, compute_params

__all__ = [
    "NonpositiveStepSize",
    "ReferenceFunction",
    "EUCLIDEAN",
    "SHIFTED_ENTROPY",
    "RunTrajectory",
    "DepletionProfile",
    "md_step",
    "simulate",
    "run_prd",
    "run_mda",
    "default_mda_eta",
    "depletion_profile",
    "slackness",
]


class NonpositiveStepSize(ValueError):
    pass


@dataclass(frozen=True)
class ReferenceFunction:
    """Separable reference function ``h`` for the Bregman geometry.

    ``euclidean`` is ``0.5 * sum(mu_j**2)``; ``shifted_entropy`` is
    ``sum((mu_j + s) * log(mu_j + s))`` with shift ``s > 0``.
    """

    kind: str = "euclidean"
    shift: float = 1.0

    def __post_init__(self):
        if self.kind not in ("euclidean", "shifted_entropy"):
            raise ValueError(f"unknown reference function {self.kind!r}")
        if self.kind == "shifted_entropy" and not self.shift > 0:
            raise ValueError("entropy shift must be positive")

    @property
    def code(self) -> int:
        return _kernels.EUCLIDEAN if self.kind == "euclidean" else _kernels.SHIFTED_ENTROPY

    def value(self, mu) -> float:
        mu = np.asarray(mu, dtype=float)
        if self.kind == "euclidean":
            return 0.5 * float(mu @ mu)
        z = mu + self.shift
        return float(np.sum(z * np.log(z)))

    def grad(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        if self.kind == "euclidean":
            return mu.copy()
        return np.log(mu + self.shift) + 1.0

    def bregman(self, x, y) -> float:
        """``V_h(x, y) = h(x) - h(y) - grad h(y) . (x - y)``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.value(x) - self.value(y) - float(self.grad(y) @ (x - y))

    def sigma(self, mu_max) -> float:
        """Strong-convexity modulus w.r.t. the 1-norm on ``[0, mu_max]``.

        For a separable ``h`` with ``h_j'' >= c_j`` the modulus is
        ``1 / sum(1/c_j)`` (Cauchy-Schwarz).
        """
        mu_max = np.asarray(mu_max, dtype=float)
        if self.kind == "euclidean":
            return 1.0 / mu_max.size
        return 1.0 / float(np.sum(mu_max + self.shift))

    def sigma_coordinate(self, mu_max) -> float:
        """Per-coordinate modulus on ``[0, mu_max_j]`` (recorded, unused)."""
        if self.kind == "euclidean":
            return 1.0
        return 1.0 / (float(np.max(mu_max)) + self.shift)


EUCLIDEAN = ReferenceFunction("euclidean")
SHIFTED_ENTROPY = ReferenceFunction("shifted_entropy", 1.0)


def md_step(h: ReferenceFunction, mu_t, phi_t, eta: float, mu_max=None) -> np.ndarray:
    """One mirror-descent step ``argmin_{mu >= 0} phi.mu + V_h(mu, mu_t)/eta``.

    Solved per coordinate, then clipped to ``[0, mu_max]`` when given.
    """
    if not eta > 0:
        raise NonpositiveStepSize(f"step size must be positive, got {eta}")
    mu_t = np.asarray(mu_t, dtype=float)
    phi_t = np.asarray(phi_t, dtype=float)
    if h.kind == "euclidean":
        out = mu_t - eta * phi_t
    else:
        out = (mu_t + h.shift) * np.exp(-eta * phi_t) - h.shift
    out = np.maximum(out, 0.0)
    if mu_max is not None:
        out = np.minimum(out, np.asarray(mu_max, dtype=float))
    return out


@dataclass
class RunTrajectory:
    """Per-step record of one run.

    ``mu[t]`` is the dual used to choose ``actions[t]``; ``remaining[t]`` is
    the ledger after step ``t``. Rows are 0-based; reported times are
    1-based.
    """

    algorithm: str
    rho: np.ndarray
    initial_budget: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    consumption: np.ndarray
    mu: np.ndarray
    remaining: np.ndarray
    eta: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def total_reward(self) -> float:
        return float(np.sum(self.rewards))

    @property
    def total_consumption(self) -> np.ndarray:
        return self.consumption.sum(axis=0)

    @classmethod
    def empty(cls, algorithm: str, rho, budget) -> "RunTrajectory":
        rho = np.asarray(rho, dtype=float)
        m = rho.size
        return cls(algorithm, rho, np.asarray(budget, dtype=float),
                   np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros((0, m)),
                   np.zeros((0, m)), np.zeros((0, m)), np.zeros(0))

    @classmethod
    def concat(cls, algorithm: str, parts: list["RunTrajectory"], rho, budget) -> "RunTrajectory":
        if not parts:
            return cls.empty(algorithm, rho, budget)
        return cls(
            algorithm, np.asarray(rho, dtype=float), np.asarray(budget, dtype=float),
            np.concatenate([p.actions for p in parts]),
            np.concatenate([p.rewards for p in parts]),
            np.concatenate([p.consumption for p in parts]),
            np.concatenate([p.mu for p in parts]),
            np.concatenate([p.remaining for p in parts]),
            np.concatenate([p.eta for p in parts]),
        )

    def to_csv(self, path=None) -> str:
        m = self.rho.size
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "action", "reward"]
                   + [f"g_{j + 1}" for j in range(m)]
                   + [f"mu_{j + 1}" for j in range(m)]
                   + [f"G_{j + 1}" for j in range(m)] + ["eta_t"])
        for t in range(len(self)):
            w.writerow([t + 1, int(self.actions[t]), repr(float(self.rewards[t]))]
                       + [repr(float(x)) for x in self.consumption[t]]
                       + [repr(float(x)) for x in self.mu[t]]
                       + [repr(float(x)) for x in self.remaining[t]]
                       + [repr(float(self.eta[t]))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _as_arrays(seq) -> DenseArrays:
    return seq.arrays if isinstance(seq, ArrivalSequence) else seq


def simulate(seq, rho, mu1, eta: float, h: ReferenceFunction, budget, mu_max,
             lo: int = 0, hi: int | None = None, algorithm: str = "mda") -> RunTrajectory:
    """Run the dual loop with a constant step size over ``seq[lo:hi]``.

    ``eta == 0`` freezes the dual (the PRD policy).
    """
    arr = _as_arrays(seq)
    hi = len(arr.n_actions) if hi is None else hi
    rho = np.asarray(rho, dtype=float)
    budget = np.asarray(budget, dtype=float)
    if hi <= lo:
        return RunTrajectory.empty(algorithm, rho, budget)
    slots, mu_used, rem, _, _ = _kernels.dual_segment(
        arr.rewards, arr.consumption, arr.n_actions, rho,
        np.asarray(mu1, dtype=float), budget, float(eta), h.code, float(h.shift),
        np.asarray(mu_max, dtype=float), lo, hi)
    return trajectory_from_slots(arr, lo, slots, mu_used, rem, np.full(hi - lo, float(eta)),
                                 algorithm, rho, budget)


def trajectory_from_slots(arr: DenseArrays, lo: int, slots, mu_used, rem, eta, algorithm,
                          rho, budget) -> RunTrajectory:
    rows = np.arange(lo, lo + len(slots))
    return RunTrajectory(
        algorithm=algorithm, rho=rho, initial_budget=budget,
        actions=arr.index[rows, slots].astype(np.int64),
        rewards=arr.rewards[rows, slots].copy(),
        consumption=arr.consumption[rows, slots].copy(),
        mu=mu_used, remaining=rem, eta=np.asarray(eta, dtype=float),
    )


def _mu_max_for(seq, rho) -> np.ndarray:
    return compute_params(seq, rho).mu_max


def run_prd(seq: ArrivalSequence, mu_hat, rho, budget=None) -> RunTrajectory:
    """Follow the fixed dual ``mu_hat``: greedy best response every step."""
    rho = np.asarray(rho, dtype=float).reshape(-1)
    budget = rho * len(seq) if budget is None else np.asarray(budget, dtype=float)
    mu_hat = np.asarray(mu_hat, dtype=float).reshape(-1)
    return simulate(seq, rho, mu_hat, 0.0, EUCLIDEAN, budget, np.full(rho.size, np.inf),
                    algorithm="prd")


def default_mda_eta(T: int, scale: float = 1.0) -> float:
    return scale / math.sqrt(T)


def run_mda(seq: ArrivalSequence, mu_1, eta: float | None, h: ReferenceFunction = EUCLIDEAN,
            rho=None, budget=None, mu_max=None) -> RunTrajectory:
    """Mirror Descent Algorithm with constant step ``eta`` (default ``1/sqrt(T)``).

    ``eta == 0`` is accepted and reproduces :func:`run_prd`.
    """
    if rho is None:
        raise ValueError("rho is required")
    rho = np.asarray(rho, dtype=float).reshape(-1)
    T = len(seq)
    eta = default_mda_eta(T) if eta is None else float(eta)
    if eta < 0:
        raise NonpositiveStepSize(f"step size must be nonnegative, got {eta}")
    budget = rho * T if budget is None else np.asarray(budget, dtype=float)
    mu_max = _mu_max_for(seq, rho) if mu_max is None else np.asarray(mu_max, dtype=float)
    mu_1 = np.clip(np.asarray(mu_1, dtype=float).reshape(-1), 0.0, mu_max)
    return simulate(seq, rho, mu_1, eta, h, budget, mu_max, algorithm="mda")


@dataclass(frozen=True)
class DepletionProfile:
    depletion: np.ndarray  # per resource, 1-based
    tau: int               # stopping time, 1-based


def depletion_profile(traj: RunTrajectory, params) -> DepletionProfile:
    """Per-resource depletion times and the stopping time ``tau_A``.

    Depletion of ``j`` is the first step after which ``remaining_j < g_under``
    (``T`` if never). ``tau_A`` is the first step where cumulative use of some
    resource plus ``g_bar`` reaches ``rho_j * T`` (``T`` if never).
    """
    T = params.T
    m = params.m
    dep = np.full(m, T, dtype=np.int64)
    below = traj.remaining < params.g_under
    for j in range(m):
        hits = np.flatnonzero(below[:, j])
        if hits.size:
            dep[j] = hits[0] + 1
    cum = np.cumsum(traj.consumption, axis=0)
    hit = np.any(cum + params.g_bar >= params.rho * T, axis=1)
    idx = np.flatnonzero(hit)
    tau = int(idx[0] + 1) if idx.size else T
    return DepletionProfile(dep, tau)


@dataclass(frozen=True)
class Slackness:
    w: np.ndarray
    running: np.ndarray
    total_to_tau: float


def slackness(traj: RunTrajectory, mu=None, tau: int | None = None) -> Slackness:
    """Complementary-slackness terms ``w_t = mu_t . (rho - g_t(x_t))``.

    ``mu`` defaults to the run's own dual series; a single vector is
    broadcast over all steps. ``tau`` (1-based, default full length) bounds
    the reported sum.
    """
    if len(traj) == 0:
        raise ValueError("trajectory is empty")
    mus = traj.mu if mu is None else np.broadcast_to(np.asarray(mu, dtype=float), traj.mu.shape)
    w = np.einsum("tj,tj->t", mus, traj.rho - traj.consumption)
    running = np.cumsum(w)
    tau = len(traj) if tau is None else tau
    return Slackness(w, running, float(running[tau - 1]))
