"""Domain types for online resource allocation instances.

An instance is a sequence of requests. Each request is a finite menu of
actions, every action carrying a scalar reward and a consumption vector over
``m`` resources. Action index 0 is always the void action (no reward, no
consumption), so declining a request is always feasible.

Besides the value objects this module holds the two primitives every
algorithm shares: the greedy best response under shadow prices and the
conjugate (best opportunity-cost-adjusted reward) of a request.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Action",
    "ArrivalRequest",
    "ArrivalSequence",
    "ProblemParams",
    "ResourceLedger",
    "InstanceError",
    "MissingVoidAction",
    "RewardExceedsBound",
    "ConsumptionOutOfRange",
    "NonpositiveBudget",
    "LengthMismatch",
    "EmptyInstance",
    "InstanceValidationError",
    "best_response",
    "conjugate_value",
    "compute_params",
    "validate_instance",
    "read_instance",
    "write_instance",
    "parse_instance",
    "format_instance",
]


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class InstanceError(ValueError):
    """Base class for malformed instances."""


class MissingVoidAction(InstanceError):
    def __init__(self, t: int):
        super().__init__(f"request {t} has no void action (index 0)")
        self.t = t


class RewardExceedsBound(InstanceError):
    def __init__(self, t: int, index: int):
        super().__init__(f"request {t}, action {index}: reward exceeds r_bar")
        self.t, self.index = t, index


class ConsumptionOutOfRange(InstanceError):
    def __init__(self, t: int, index: int):
        super().__init__(f"request {t}, action {index}: consumption outside [g_under, g_bar]")
        self.t, self.index = t, index


class NonpositiveBudget(InstanceError):
    def __init__(self, j: int):
        super().__init__(f"budget rate rho[{j}] must be > 0")
        self.j = j


class LengthMismatch(InstanceError):
    pass


class EmptyInstance(InstanceError):
    pass


class InstanceValidationError(InstanceError):
    """Raised by :func:`validate_instance` with every problem found."""

    def __init__(self, errors: list[InstanceError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


# ---------------------------------------------------------------------------
# Value objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Action:
    index: int
    reward: float
    consumption: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "consumption", tuple(float(c) for c in self.consumption))
        object.__setattr__(self, "reward", float(self.reward))
        if self.index < 0:
            raise InstanceError("action index must be nonnegative")
        if self.reward < 0 or any(c < 0 for c in self.consumption):
            raise InstanceError("rewards and consumptions must be nonnegative")
        if self.index == 0 and (self.reward != 0 or any(self.consumption)):
            raise InstanceError("the void action must have zero reward and consumption")

    @classmethod
    def void(cls, m: int) -> "Action":
        return cls(0, 0.0, (0.0,) * m)


@dataclass(frozen=True)
class ArrivalRequest:
    actions: tuple[Action, ...]
    label: str | None = None

    def __post_init__(self):
        acts = tuple(sorted(self.actions, key=lambda a: a.index))
        if not acts:
            raise InstanceError("a request needs at least one action")
        idx = [a.index for a in acts]
        if len(set(idx)) != len(idx):
            raise InstanceError("action indices must be distinct")
        if len({len(a.consumption) for a in acts}) != 1:
            raise InstanceError("all actions must have the same resource dimension")
        object.__setattr__(self, "actions", acts)

    @classmethod
    def from_menu(cls, menu: Iterable[tuple[float, Sequence[float]]], label: str | None = None,
                  add_void: bool = True) -> "ArrivalRequest":
        """Build a request from ``(reward, consumption)`` pairs.

        Indices are assigned in order starting at 1; the void action is
        prepended unless ``add_void`` is False (then the first pair must be
        the void action and gets index 0).
        """
        menu = [(float(r), tuple(float(x) for x in g)) for r, g in menu]
        if add_void:
            m = len(menu[0][1])
            acts = [Action.void(m)] + [Action(i + 1, r, g) for i, (r, g) in enumerate(menu)]
        else:
            acts = [Action(i, r, g) for i, (r, g) in enumerate(menu)]
        return cls(tuple(acts), label)

    @property
    def m(self) -> int:
        return len(self.actions[0].consumption)

    @property
    def has_void(self) -> bool:
        return self.actions[0].index == 0

    def rewards(self) -> np.ndarray:
        return np.array([a.reward for a in self.actions])

    def consumptions(self) -> np.ndarray:
        return np.array([a.consumption for a in self.actions], dtype=float)


@dataclass(frozen=True)
class ArrivalSequence:
    """Ordered requests plus a dense array view used by the kernels.

    The arrays pad every menu to the widest one; ``n_actions[t]`` says how
    many leading slots are real. Slot order is ascending action index.
    """

    requests: tuple[ArrivalRequest, ...]

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))

    def __len__(self) -> int:
        return len(self.requests)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return ArrivalSequence(self.requests[item])
        return self.requests[item]

    @property
    def T(self) -> int:
        return len(self.requests)

    @property
    def m(self) -> int:
        if not self.requests:
            raise EmptyInstance("empty arrival sequence")
        return self.requests[0].m

    @cached_property
    def arrays(self) -> "DenseArrays":
        return DenseArrays.from_requests(self.requests)


@dataclass(frozen=True)
class DenseArrays:
    rewards: np.ndarray      # (T, A)
    consumption: np.ndarray  # (T, A, m)
    n_actions: np.ndarray    # (T,)
    index: np.ndarray        # (T, A) action index per slot, -1 for padding

    @classmethod
    def from_requests(cls, requests: Sequence[ArrivalRequest]) -> "DenseArrays":
        T = len(requests)
        if T == 0:
            return cls(np.zeros((0, 1)), np.zeros((0, 1, 1)), np.zeros(0, dtype=np.int64),
                       np.zeros((0, 1), dtype=np.int64))
        m = requests[0].m
        A = max(len(r.actions) for r in requests)
        R = np.zeros((T, A))
        G = np.zeros((T, A, m))
        n = np.zeros(T, dtype=np.int64)
        idx = np.full((T, A), -1, dtype=np.int64)
        for t, req in enumerate(requests):
            k = len(req.actions)
            n[t] = k
            R[t, :k] = req.rewards()
            G[t, :k] = req.consumptions()
            idx[t, :k] = [a.index for a in req.actions]
        for arr in (R, G, n, idx):
            arr.setflags(write=False)
        return cls(R, G, n, idx)

    def slice(self, lo: int, hi: int) -> "DenseArrays":
        return DenseArrays(self.rewards[lo:hi], self.consumption[lo:hi],
                           self.n_actions[lo:hi], self.index[lo:hi])


@dataclass(frozen=True)
class ProblemParams:
    m: int
    T: int
    rho: np.ndarray
    r_bar: float
    g_bar: float
    g_under: float
    alpha_star: float

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float).reshape(-1)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        if rho.size != self.m:
            raise LengthMismatch(f"rho has {rho.size} entries, expected m={self.m}")

    @property
    def rho_under(self) -> float:
        return float(self.rho.min())

    @property
    def rho_bar(self) -> float:
        return float(self.rho.max())

    @property
    def mu_max(self) -> np.ndarray:
        return self.r_bar / self.rho + 1.0

    @property
    def kappa(self) -> float:
        return float(np.sum(self.mu_max))

    @property
    def budget(self) -> np.ndarray:
        """Total budget rho * T."""
        return self.rho * self.T


@dataclass
class ResourceLedger:
    """Remaining budget for a single run. Mutable; never shared between runs."""

    remaining: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        self.remaining = np.array(self.remaining, dtype=float).reshape(-1)

    def can_afford(self, consumption) -> bool:
        return bool(np.all(np.asarray(consumption) <= self.remaining))

    def charge(self, consumption) -> None:
        c = np.asarray(consumption, dtype=float)
        if not np.all(c <= self.remaining):
            raise ValueError("consumption exceeds remaining budget")
        self.remaining = self.remaining - c

    def release(self, amount) -> None:
        self.remaining = self.remaining + np.asarray(amount, dtype=float)


# ---------------------------------------------------------------------------
# Shared primitives
# ---------------------------------------------------------------------------


def best_response(request: ArrivalRequest, mu, remaining) -> Action:
    """Greedy action under shadow prices ``mu`` among affordable actions.

    Maximizes ``reward - mu . consumption``; ties go to the higher reward,
    then to the lower index. The void action is always affordable.
    """
    mu = np.asarray(mu, dtype=float)
    rem = remaining.remaining if isinstance(remaining, ResourceLedger) else np.asarray(remaining, dtype=float)
    best = None
    best_key = None
    for a in request.actions:
        g = np.asarray(a.consumption)
        if not np.all(g <= rem):
            continue
        score = a.reward - float(mu @ g)
        key = (score, a.reward, -a.index)
        if best_key is None or key > best_key:
            best, best_key = a, key
    if best is None:
        raise MissingVoidAction(-1)
    return best


def conjugate_value(request: ArrivalRequest, mu) -> float:
    """Best adjusted reward ``max_x r(x) - mu . g(x)`` ignoring budgets."""
    mu = np.asarray(mu, dtype=float)
    scores = request.rewards() - request.consumptions() @ mu
    return float(max(scores.max(), 0.0) if request.has_void else scores.max())


def compute_params(seq: ArrivalSequence, rho, T: int | None = None) -> ProblemParams:
    """Scan every action to derive the instance bounds and alpha*."""
    if len(seq) == 0:
        raise EmptyInstance("cannot derive parameters of an empty instance")
    rho = np.asarray(rho, dtype=float).reshape(-1)
    T = len(seq) if T is None else int(T)
    arr = seq.arrays
    r_bar = float(arr.rewards.max())
    valid = (arr.index > 0)
    if valid.any():
        norms = arr.consumption.max(axis=2)[valid]
        g_bar = float(norms.max())
        g_under = float(norms.min())
        ratios = arr.consumption[valid] / rho
        alpha = max(float(ratios.max()), 1.0)
    else:
        g_bar = g_under = 1.0
        alpha = 1.0
    if g_under <= 0:
        # an action that consumes nothing still needs a positive g_under
        pos = arr.consumption.max(axis=2)[valid]
        pos = pos[pos > 0]
        g_under = float(pos.min()) if pos.size else g_bar if g_bar > 0 else 1.0
        if g_bar <= 0:
            g_bar = g_under
    return ProblemParams(m=seq.m, T=T, rho=rho, r_bar=r_bar, g_bar=g_bar,
                         g_under=g_under, alpha_star=alpha)


def validate_instance(seq: ArrivalSequence, rho, T: int | None = None, *,
                      r_bar: float | None = None, g_bar: float | None = None,
                      g_under: float | None = None) -> ProblemParams:
    """Check an instance and return its derived parameters.

    Explicit bounds are checked when given; otherwise they are derived from
    the data (and trivially hold). Raises :class:`InstanceValidationError`
    carrying every problem found.
    """
    errors: list[InstanceError] = []
    rho = np.asarray(rho, dtype=float).reshape(-1)
    for j, r in enumerate(rho):
        if not r > 0:
            errors.append(NonpositiveBudget(j))
    if T is not None and T != len(seq):
        errors.append(LengthMismatch(f"sequence has {len(seq)} requests, T={T}"))
    if len(seq) == 0:
        errors.append(EmptyInstance("no requests"))
    for t, req in enumerate(seq.requests, start=1):
        if not req.has_void:
            errors.append(MissingVoidAction(t))
        if req.m != rho.size:
            errors.append(LengthMismatch(f"request {t} has m={req.m}, rho has {rho.size}"))
            continue
        for a in req.actions:
            if a.index == 0:
                continue
            if r_bar is not None and a.reward > r_bar:
                errors.append(RewardExceedsBound(t, a.index))
            norm = max(a.consumption) if a.consumption else 0.0
            if (g_bar is not None and norm > g_bar) or (g_under is not None and norm < g_under):
                errors.append(ConsumptionOutOfRange(t, a.index))
    if errors:
        raise InstanceValidationError(errors)
    params = compute_params(seq, rho, T)
    if r_bar is not None or g_bar is not None or g_under is not None:
        params = ProblemParams(
            m=params.m, T=params.T, rho=params.rho,
            r_bar=params.r_bar if r_bar is None else float(r_bar),
            g_bar=params.g_bar if g_bar is None else float(g_bar),
            g_under=params.g_under if g_under is None else float(g_under),
            alpha_star=params.alpha_star,
        )
    return params


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_instance(text: str) -> tuple[ArrivalSequence, np.ndarray]:
    """Parse the line-oriented instance format into ``(sequence, rho)``."""
    try:
        return _parse_instance(text)
    except InstanceError:
        raise
    except (ValueError, IndexError) as exc:
        raise InstanceError(f"malformed instance: {exc}") from None


def _parse_instance(text: str) -> tuple[ArrivalSequence, np.ndarray]:
    lines = list(_tokens(text))
    if len(lines) < 2:
        raise InstanceError("instance needs a header line and a rho line")
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise InstanceError("unexpected end of instance file")
        item = lines[pos]
        pos += 1
        return item

    lineno, head = take()
    try:
        m, T = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise InstanceError(f"line {lineno}: expected 'm T'") from None
    lineno, rho_tok = take()
    if len(rho_tok) != m:
        raise LengthMismatch(f"line {lineno}: expected {m} budget rates")
    rho = np.array([float(x) for x in rho_tok])
    requests = []
    for t in range(1, T + 1):
        lineno, cnt = take()
        n = int(cnt[0])
        acts = []
        for i in range(n):
            lineno, row = take()
            if len(row) != m + 1:
                raise LengthMismatch(f"line {lineno}: expected reward and {m} consumptions")
            vals = [float(x) for x in row]
            if i == 0 and (vals[0] != 0 or any(vals[1:])):
                raise MissingVoidAction(t)
            acts.append(Action(i, vals[0], tuple(vals[1:])))
        requests.append(ArrivalRequest(tuple(acts)))
    if pos != len(lines):
        raise LengthMismatch(f"trailing content after {T} requests")
    return ArrivalSequence(tuple(requests)), rho


def format_instance(seq: ArrivalSequence, rho) -> str:
    rho = np.asarray(rho, dtype=float).reshape(-1)
    out = io.StringIO()
    out.write(f"{rho.size} {len(seq)}\n")
    out.write(" ".join(repr(float(x)) for x in rho) + "\n")
    for req in seq.requests:
        out.write(f"{len(req.actions)}\n")
        for a in req.actions:
            out.write(" ".join(repr(v) for v in (a.reward, *a.consumption)) + "\n")
    return out.getvalue()


def read_instance(path) -> tuple[ArrivalSequence, np.ndarray]:
    return parse_instance(Path(path).read_text(encoding="ascii"))


def write_instance(path, seq: ArrivalSequence, rho) -> None:
    Path(path).write_text(format_instance(seq, rho), encoding="ascii")
