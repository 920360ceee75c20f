"""Seeded instance and prediction generators plus prediction diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import ArrivalRequest, ArrivalSequence, ProblemParams, compute_params
from .oracle import find_perfect_dual

__all__ = [
    "BadWeights",
    "ParameterViolation",
    "DistributionSpec",
    "PredictionSpec",
    "Prediction",
    "NondegeneracyReport",
    "gen_stochastic",
    "gen_lowerbound",
    "two_type_spec",
    "random_l1_direction",
    "make_prediction",
    "check_nondegeneracy",
    "follow_duals",
    "write_prediction",
    "read_prediction",
]


class BadWeights(ValueError):
    pass


class ParameterViolation(ValueError):
    pass


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & (2 ** 64 - 1)))


@dataclass(frozen=True)
class DistributionSpec:
    support: tuple[ArrivalRequest, ...]
    weights: tuple[float, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.support:
            raise BadWeights("support must be nonempty")
        if len(self.weights) != len(self.support):
            raise BadWeights("one weight per support point")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise BadWeights("weights must be nonnegative and sum to 1")

    def with_seed(self, seed: int) -> "DistributionSpec":
        return DistributionSpec(self.support, self.weights, seed)


def gen_stochastic(spec: DistributionSpec, T: int) -> ArrivalSequence:
    """``T`` i.i.d. draws from ``spec`` by inverse CDF on a PCG64 stream."""
    u = _rng(spec.seed).random(T)
    cdf = np.cumsum(spec.weights)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    return ArrivalSequence(tuple(spec.support[i] for i in idx))


def two_type_spec(high=1.0, low=0.4, p_high=0.5, seed=0) -> DistributionSpec:
    """Two single-resource request types with unit consumption.

    With budget rate ``p_high`` the budget exactly covers the expected number
    of high-value requests, so it binds and low-value requests only fill the
    slack left by a short run of high-value ones.
    """
    return DistributionSpec(
        (ArrivalRequest.from_menu([(high, (1.0,))], label="high"),
         ArrivalRequest.from_menu([(low, (1.0,))], label="low")),
        (p_high, 1.0 - p_high), seed)


def gen_lowerbound(T: int, r_bar: float, alpha_star: float, which: str = "instance_two"):
    """Two-arrival benchmark on which no algorithm serves both arrival models.

    Returns ``(sequence, mu_hat)``; the budget rate is 1. Following ``mu_hat``
    rejects the cheap arrival and accepts the expensive one.
    """
    if T < 3 or not r_bar / alpha_star > 1 + 1 / math.log(T):
        raise ParameterViolation("need r_bar/alpha_star > 1 + 1/ln(T)")
    shift = math.floor((alpha_star - 1) / alpha_star * T)
    if which == "instance_two" and shift < 1:
        raise ParameterViolation("phase shift rounds to zero periods")
    g1 = ArrivalRequest.from_menu([(1.0, (1.0,))], label="gamma1")
    g2 = ArrivalRequest.from_menu([(float(r_bar), (float(alpha_star),))], label="gamma2")
    if which == "instance_one":
        reqs = (g1,) * T
    elif which == "instance_two":
        reqs = (g1,) * shift + (g2,) * (T - shift)
    else:
        raise ValueError(f"unknown lower-bound instance {which!r}")
    return ArrivalSequence(reqs), np.array([1.0 + 1.0 / math.log(T)])


# ---------------------------------------------------------------------------
# Predictions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PredictionSpec:
    accuracy_a: float = math.inf
    kappa: float | None = None      # defaults to ||mu_max||_1
    direction_seed: int = 0


@dataclass(frozen=True)
class Prediction:
    mu_hat: np.ndarray
    mu_star: np.ndarray | None = None
    accuracy_a: float | None = None
    kappa: float | None = None
    realized_distance: float | None = None
    effective_a: float | None = None
    epsilon_ratio: float | None = None


def random_l1_direction(rng: np.random.Generator, m: int) -> np.ndarray:
    """Uniform point on the unit 1-norm sphere (exponential spacings, random signs)."""
    e = rng.exponential(size=m)
    signs = rng.choice(np.array([-1.0, 1.0]), size=m)
    return signs * e / e.sum()


def _max_step(mu: np.ndarray, u: np.ndarray, mu_max: np.ndarray) -> float:
    steps = [math.inf]
    for j in range(mu.size):
        if u[j] > 0:
            steps.append((mu_max[j] - mu[j]) / u[j])
        elif u[j] < 0:
            steps.append(mu[j] / -u[j])
    return max(0.0, min(steps))


def make_prediction(seq: ArrivalSequence, params: ProblemParams, spec: PredictionSpec,
                    grid_resolution=None, mu_star=None, epsilon: float | None = None
                    ) -> Prediction:
    """Perturb the perfect dual by ``kappa * T**-a`` along a seeded random direction.

    The displacement is shortened to stay inside ``[0, mu_max]``; the realized
    distance and the accuracy it actually corresponds to are recorded.
    """
    if mu_star is None:
        mu_star, _ = find_perfect_dual(seq, params, grid_resolution)
    mu_star = np.asarray(mu_star, dtype=float)
    kappa = params.kappa if spec.kappa is None else float(spec.kappa)
    T = params.T
    target = 0.0 if math.isinf(spec.accuracy_a) else kappa * T ** (-spec.accuracy_a)
    u = random_l1_direction(_rng(spec.direction_seed), params.m)
    d = min(target, _max_step(mu_star, u, params.mu_max))
    mu_hat = np.clip(mu_star + d * u, 0.0, params.mu_max)
    dist = float(np.abs(mu_hat - mu_star).sum())
    eff = math.inf if dist == 0 else -math.log(dist / kappa) / math.log(T)
    eps_ratio = None if epsilon is None else dist / epsilon
    return Prediction(mu_hat, mu_star, spec.accuracy_a, kappa, dist, eff, eps_ratio)


def write_prediction(path, pred: Prediction) -> None:
    mu = np.asarray(pred.mu_hat, dtype=float)
    meta = [pred.accuracy_a, pred.kappa, pred.realized_distance]
    lines = [str(mu.size), " ".join(repr(float(x)) for x in mu),
             " ".join("nan" if v is None else repr(float(v)) for v in meta)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_prediction(path) -> Prediction:
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    m = int(lines[0])
    mu = np.array([float(x) for x in lines[1].split()])
    if mu.size != m:
        raise ValueError(f"prediction file declares m={m} but lists {mu.size} values")
    meta = [float(x) for x in lines[2].split()] if len(lines) > 2 else []
    meta = [None if math.isnan(v) else v for v in meta] + [None] * (3 - len(meta))
    return Prediction(mu, accuracy_a=meta[0], kappa=meta[1], realized_distance=meta[2])


# ---------------------------------------------------------------------------
# Non-degeneracy diagnostic
# ---------------------------------------------------------------------------


def follow_duals(seq: ArrivalSequence, rho, mus, budget=None) -> np.ndarray:
    """Greedy play with a per-step dual series; returns remaining budget after each step."""
    arr = seq.arrays
    rho = np.asarray(rho, dtype=float)
    rem = rho * len(seq) if budget is None else np.array(budget, dtype=float)
    out = np.empty((len(seq), rho.size))
    for t in range(len(seq)):
        n = arr.n_actions[t]
        R = arr.rewards[t, :n]
        G = arr.consumption[t, :n]
        ok = np.all(G <= rem, axis=1)
        score = np.where(ok, R - G @ mus[t], -np.inf)
        best = np.flatnonzero(score == score.max())
        a = best[np.argmax(R[best])]          # higher reward, then lower slot
        rem = rem - G[a]
        out[t] = rem
    return out


def _depletion(rem: np.ndarray, g_under: float, T: int) -> np.ndarray:
    below = rem < g_under
    dep = np.full(rem.shape[1], T, dtype=np.int64)
    for j in range(rem.shape[1]):
        hits = np.flatnonzero(below[:, j])
        if hits.size:
            dep[j] = hits[0] + 1
    return dep


@dataclass(frozen=True)
class NondegeneracyReport:
    zeta: float
    reference: np.ndarray      # depletion times following mu_hat
    spread: np.ndarray         # max |difference| per resource over samples
    flagged: bool


def check_nondegeneracy(seq: ArrivalSequence, mu_hat, zeta: float | None = None,
                        n_samples: int = 20, seed: int = 0, rho=None,
                        params: ProblemParams | None = None,
                        flag_fraction: float = 0.05) -> NondegeneracyReport:
    """Sample dual sequences in the 1-norm ``zeta``-ball around ``mu_hat``.

    Reports how far each resource's depletion time moves. Sampling can only
    refute non-degeneracy, never certify it.
    """
    params = compute_params(seq, rho) if params is None else params
    mu_hat = np.asarray(mu_hat, dtype=float)
    zeta = 0.05 * float(params.mu_max.min()) if zeta is None else float(zeta)
    if zeta < 0:
        raise ValueError("zeta must be nonnegative")
    T, m = len(seq), params.m
    ref = _depletion(follow_duals(seq, params.rho, np.tile(mu_hat, (T, 1))), params.g_under, T)
    spread = np.zeros(m, dtype=np.int64)
    if zeta > 0:
        rng = _rng(seed)
        for _ in range(n_samples):
            e = rng.exponential(size=(T, m))
            signs = rng.choice(np.array([-1.0, 1.0]), size=(T, m))
            radius = zeta * rng.random(T) ** (1.0 / m)
            mus = np.maximum(mu_hat + signs * e / e.sum(axis=1, keepdims=True) * radius[:, None], 0)
            dep = _depletion(follow_duals(seq, params.rho, mus), params.g_under, T)
            spread = np.maximum(spread, np.abs(dep - ref))
    return NondegeneracyReport(zeta, ref, spread, bool(np.any(spread > flag_fraction * T)))
