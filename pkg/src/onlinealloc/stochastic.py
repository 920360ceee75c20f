"""Stochastic Arrival Algorithm: mirror descent with a parameter-free step size.

At every step the tuner looks for a step size ``eta`` close to the fixed
point ``eta = theta(eta) / sqrt(alpha * Phi(eta) + beta)``, where ``theta`` and
``Phi`` are statistics of a *replayed* constant-step run over the requests
seen so far. The live dual is then re-derived by replaying the whole history
with the new step size.

Replays are memoized per step size and extended incrementally; a replay can
never look past the requests the live run has already received.
"""

from __future__ import annotations

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mirror import (EUCLIDEAN, NonpositiveStepSize, ReferenceFunction, RunTrajectory,
                     trajectory_from_slots)
from .model import ArrivalSequence, DenseArrays, ProblemParams, compute_params

log = logging.getLogger(__name__)

__all__ = [
    "InvalidBracket",
    "ReplayStats",
    "TunerConfig",
    "ReplayCache",
    "replay_stats",
    "rfb",
    "rfb_with_count",
    "rfb_iteration_bound",
    "schedule_constant",
    "tune_step",
    "run_sa",
]

INF = math.inf


class InvalidBracket(ValueError):
    pass


@dataclass(frozen=True)
class ReplayStats:
    theta: float
    phi_sum: float


@dataclass(frozen=True)
class TunerConfig:
    """``eta_1=None`` means ``1/T``. ``k_cap`` bounds the doubling loop over k."""

    eta_1: float | None = None
    k_cap: int = 8
    last_finite: bool = True

    def ks(self):
        k = 2
        while k <= self.k_cap:
            yield k
            k *= 2

    def initial(self, T: int) -> float:
        eta = 1.0 / T if self.eta_1 is None else float(self.eta_1)
        if not eta > 0:
            raise NonpositiveStepSize("initial step size must be positive")
        return eta


class _Replay:
    __slots__ = ("mu", "rem", "theta", "phi", "slots", "mu_used", "remaining", "n")

    def __init__(self, mu0, rem0):
        self.mu = np.array(mu0, dtype=float)
        self.rem = np.array(rem0, dtype=float)
        self.theta = [0.0]   # theta[s] for prefix length s
        self.phi = [0.0]
        self.slots: list[np.ndarray] = []
        self.mu_used: list[np.ndarray] = []
        self.remaining: list[np.ndarray] = []
        self.n = 0


class ReplayCache:
    """Constant-step replays of the requests received so far, keyed by step size.

    ``available`` is the number of requests the live run has seen; asking
    for a longer replay is an error. Entries are evicted least recently used
    beyond ``capacity`` and recomputed from scratch on a later miss.
    """

    def __init__(self, arr: DenseArrays, rho, mu_hat, h: ReferenceFunction, budget, mu_max,
                 lo: int = 0, capacity: int = 64):
        self.arr = arr
        self.rho = np.asarray(rho, dtype=float)
        self.mu_hat = np.asarray(mu_hat, dtype=float)
        self.h = h
        self.budget = np.asarray(budget, dtype=float)
        self.mu_max = np.asarray(mu_max, dtype=float)
        self.lo = lo
        self.capacity = capacity
        self.available = 0
        self._entries: OrderedDict[float, _Replay] = OrderedDict()
        self.misses = 0

    def _entry(self, eta: float) -> _Replay:
        if not eta > 0:
            raise NonpositiveStepSize(f"step size must be positive, got {eta}")
        e = self._entries.get(eta)
        if e is None:
            self.misses += 1
            e = _Replay(self.mu_hat, self.budget)
            self._entries[eta] = e
            if len(self._entries) > self.capacity:
                self._entries.popitem(last=False)
        else:
            self._entries.move_to_end(eta)
        return e

    def _extend(self, eta: float, n: int) -> _Replay:
        if n > self.available:
            raise IndexError(f"replay of {n} steps requested, only {self.available} received")
        e = self._entry(eta)
        if n > e.n:
            slots, mu_used, rem, phi_sq, mu_next = _kernels.dual_segment(
                self.arr.rewards, self.arr.consumption, self.arr.n_actions, self.rho,
                e.mu, e.rem, float(eta), self.h.code, float(self.h.shift), self.mu_max,
                self.lo + e.n, self.lo + n)
            dist = np.abs(mu_used - self.mu_hat).sum(axis=1)
            th = e.theta[-1]
            ph = e.phi[-1]
            for d, p in zip(dist.tolist(), phi_sq.tolist()):
                th = d if d > th else th
                ph += p
                e.theta.append(th)
                e.phi.append(ph)
            e.mu = mu_next
            e.rem = rem[-1].copy()
            e.slots.append(slots)
            e.mu_used.append(mu_used)
            e.remaining.append(rem)
            e.n = n
        return e

    def stats(self, eta: float, t_prime: int) -> tuple[float, float]:
        """``(theta_{t'}, Phi_{t'})`` for the replay with step ``eta``."""
        if t_prime <= 0:
            return 0.0, 0.0
        e = self._extend(eta, t_prime)
        return e.theta[t_prime], e.phi[t_prime]

    def mu_after(self, eta: float, n: int) -> np.ndarray:
        """Dual after ``n`` replayed updates, i.e. ``mu_{n+1}(mu_hat, eta)``."""
        if n <= 0:
            return self.mu_hat.copy()
        e = self._extend(eta, n)
        if e.n == n:
            return e.mu.copy()
        # longer replay cached: recover mu_{n+1} as the dual used at step n+1
        flat = np.concatenate(e.mu_used)
        return flat[n].copy()

    def trajectory(self, eta: float, n: int) -> RunTrajectory:
        e = self._extend(eta, n)
        slots = np.concatenate(e.slots)[:n] if e.slots else np.zeros(0, dtype=np.int64)
        mu_used = np.concatenate(e.mu_used)[:n] if e.mu_used else np.zeros((0, self.rho.size))
        rem = np.concatenate(e.remaining)[:n] if e.remaining else np.zeros((0, self.rho.size))
        return trajectory_from_slots(self.arr, self.lo, slots, mu_used, rem,
                                     np.full(n, float(eta)), "replay", self.rho, self.budget)


def replay_stats(seq_prefix, mu_hat, eta: float, h: ReferenceFunction = EUCLIDEAN, rho=None,
                 budget=None, mu_max=None) -> ReplayStats:
    """``theta`` and ``Phi`` of a fresh constant-step replay over ``seq_prefix``."""
    arr = seq_prefix.arrays if isinstance(seq_prefix, ArrivalSequence) else seq_prefix
    n = len(arr.n_actions)
    rho = np.asarray(rho, dtype=float)
    budget = rho * n if budget is None else budget
    if mu_max is None:
        mu_max = compute_params(seq_prefix, rho).mu_max if n else np.full(rho.size, np.inf)
    cache = ReplayCache(arr, rho, mu_hat, h, budget, mu_max)
    cache.available = n
    th, ph = cache.stats(float(eta), n)
    return ReplayStats(th, ph)


# ---------------------------------------------------------------------------
# Root-finding bisection
# ---------------------------------------------------------------------------


def rfb_iteration_bound(eta_lo: float, eta_hi: float) -> int:
    if eta_hi <= 2 * eta_lo:
        return 2
    return math.ceil(math.log2(math.log(eta_hi / eta_lo) / math.log(2))) + 2


def rfb_with_count(eta_lo: float, eta_hi: float, t_prime: int, alpha: float, beta: float,
                   stats) -> tuple[float, int]:
    """Root-finding bisection; returns ``(result, loop iterations)``.

    ``stats(eta, t_prime)`` must return ``(theta, Phi)``.
    """
    if not 0 < eta_lo <= eta_hi:
        raise InvalidBracket(f"need 0 < eta_lo <= eta_hi, got [{eta_lo}, {eta_hi}]")

    def psi(eta):
        th, ph = stats(eta, t_prime)
        return th / math.sqrt(alpha * ph + beta), th

    psi_hi, _ = psi(eta_hi)
    if eta_hi <= psi_hi:
        return INF, 0
    psi_lo, _ = psi(eta_lo)
    if eta_lo > psi_lo:
        return eta_lo, 0
    it = 0
    while eta_hi > 2 * eta_lo:
        it += 1
        mid = math.sqrt(eta_hi * eta_lo)
        if mid <= psi(mid)[0]:
            eta_lo = mid
        else:
            eta_hi = mid
    psi_hi, th_hi = psi(eta_hi)
    _, th_lo = psi(eta_lo)
    if th_hi <= th_lo * psi_hi / eta_hi:
        return eta_hi, it
    return eta_lo, it


def rfb(eta_lo: float, eta_hi: float, t_prime: int, alpha: float, beta: float, stats) -> float:
    return rfb_with_count(eta_lo, eta_hi, t_prime, alpha, beta, stats)[0]


def schedule_constant(k: int, t: int, T: int) -> float:
    """``2k + ln(60 T ln^2(6t))`` (natural logarithms)."""
    return 2 * k + math.log(60.0 * T * math.log(6.0 * t) ** 2)


def tune_step(t: int, eta_t: float, T: int, tuner: TunerConfig, stats, g_bar: float,
              rho_bar: float) -> float:
    """Next step size from the doubling-k search; keeps ``eta_t`` if every search diverges."""
    if t < 1 or not eta_t > 0:
        raise ValueError("tune_step needs t >= 1 and eta_t > 0")
    out = eta_t
    found = False
    for k in tuner.ks():
        t_k = t // (2 * k)
        C = schedule_constant(k, t, T)
        alpha = 32.0 ** 2 * C
        beta = (32.0 * C * (g_bar + rho_bar)) ** 2
        eta_hi = eta_t * 2.0 ** (2 ** k)
        res = rfb(eta_t, eta_hi, t_k, alpha, beta, stats)
        log.debug("%d %d %r %r %r", t, k, eta_t, eta_hi, res)
        if res < INF:
            if not found or tuner.last_finite:
                out = res
            found = True
    return out


# ---------------------------------------------------------------------------
# Full run
# ---------------------------------------------------------------------------


def run_sa(seq, mu_hat, h: ReferenceFunction = EUCLIDEAN, tuner: TunerConfig | None = None,
           rho=None, budget=None, params: ProblemParams | None = None, lo: int = 0,
           hi: int | None = None, horizon: int | None = None) -> RunTrajectory:
    """Stochastic Arrival Algorithm over ``seq[lo:hi]``.

    ``horizon`` is the ``T`` used in the schedule constant and the default
    initial step size (defaults to the segment length). ``params`` supplies
    the bounds ``g_bar``, ``rho_bar`` and ``mu_max``.
    """
    tuner = TunerConfig() if tuner is None else tuner
    arr = seq.arrays if isinstance(seq, ArrivalSequence) else seq
    hi = len(arr.n_actions) if hi is None else hi
    n = hi - lo
    if params is None:
        params = compute_params(seq, rho)
    rho = params.rho if rho is None else np.asarray(rho, dtype=float)
    budget = rho * n if budget is None else np.asarray(budget, dtype=float)
    if n <= 0:
        return RunTrajectory.empty("sa", rho, budget)
    horizon = n if horizon is None else horizon
    mu_max = params.mu_max
    mu_hat = np.clip(np.asarray(mu_hat, dtype=float).reshape(-1), 0.0, mu_max)
    cache = ReplayCache(arr, rho, mu_hat, h, budget, mu_max, lo=lo)
    eta = tuner.initial(horizon)
    mu = mu_hat.copy()
    rem = budget.copy()
    slots = np.empty(n, dtype=np.int64)
    mu_used = np.empty((n, rho.size))
    rem_out = np.empty((n, rho.size))
    etas = np.empty(n)
    no_clip = np.full(rho.size, np.inf)
    for i in range(n):
        s, _, r, _, _ = _kernels.dual_segment(arr.rewards, arr.consumption, arr.n_actions, rho,
                                              mu, rem, 0.0, h.code, float(h.shift), no_clip,
                                              lo + i, lo + i + 1)
        slots[i] = s[0]
        mu_used[i] = mu
        rem = r[0]
        rem_out[i] = rem
        etas[i] = eta
        t = i + 1
        cache.available = t
        eta = tune_step(t, eta, horizon, tuner, cache.stats, params.g_bar, params.rho_bar)
        mu = cache.mu_after(eta, t)
    traj = trajectory_from_slots(arr, lo, slots, mu_used, rem_out, etas, "sa", rho, budget)
    traj.meta["replay_misses"] = cache.misses
    return traj
