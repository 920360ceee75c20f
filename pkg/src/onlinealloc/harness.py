"""Experiment runner, metrics and CSV reports."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .adversarial import AAConfig, run_aa
from .instances import (DistributionSpec, PredictionSpec, gen_lowerbound, gen_stochastic,
                        make_prediction, read_prediction, two_type_spec)
from .main_alg import MainConfig, run_main
from .mirror import EUCLIDEAN, SHIFTED_ENTROPY, ReferenceFunction, run_mda, run_prd
from .model import ArrivalRequest, ArrivalSequence, ProblemParams, compute_params, read_instance
from .oracle import solve_opt
from .stochastic import TunerConfig, run_sa

__all__ = [
    "ConfigError",
    "DegenerateBaselines",
    "ExperimentConfig",
    "MetricsRecord",
    "REPORT_COLUMNS",
    "gap",
    "run_algorithm",
    "run_experiment",
    "regret_study",
    "RegretRow",
    "fit_loglog_slope",
    "emit_report",
    "parse_report",
    "gap_histogram",
    "emit_histogram",
    "gap_study",
    "GapInstanceFamily",
]

ALGORITHMS = ("prd", "mda", "sa", "aa", "main")
EXACT_LIMIT = 12
REPORT_COLUMNS = ["trial", "T", "alg", "opt", "opt_method", "reward", "regret",
                  "comp_shortfall", "gap", "switched", "switch_time", "runtime_ms"]


class ConfigError(ValueError):
    pass


class DegenerateBaselines(ValueError):
    pass


def gap(r_main: float, r_prd: float, r_mda: float) -> float:
    """Position of ``r_main`` between the worse and the better baseline (may leave [0, 1])."""
    lo, hi = min(r_prd, r_mda), max(r_prd, r_mda)
    if hi == lo:
        raise DegenerateBaselines("PRD and MDA rewards coincide; GAP is undefined")
    return (r_main - lo) / (hi - lo)


def _ref_fn(name: str) -> ReferenceFunction:
    if name in ("euclidean", "l2"):
        return EUCLIDEAN
    if name in ("shifted_entropy", "entropy"):
        return SHIFTED_ENTROPY
    raise ConfigError(f"unknown reference function {name!r}")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a batch of trials.

    The instance comes from ``instance`` (a file, identical for every trial)
    or from ``generator`` with per-trial seed ``seed + trial``. The
    prediction is ``mu_hat`` when given, else synthesized with accuracy
    ``a`` around the instance's perfect dual.
    """

    alg: str = "prd"
    instance: str | None = None
    generator: str | None = None
    T: int = 1000
    rho: float | None = None
    mu_hat: Sequence[float] | str | None = None
    a: float = math.inf
    eta: float | None = None
    eta_1: float | None = None
    delta: float = 0.1
    L: float | None = None
    epsilon_fn: str = "inv_log"
    c: float = 1.0
    ref_fn: str = "euclidean"
    trials: int = 1
    seed: int = 0
    opt_method: str = "auto"
    literal_pseudocode: bool = False
    with_gap: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.alg not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.alg!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if (self.instance is None) == (self.generator is None):
            raise ConfigError("give exactly one of instance or generator")
        if self.instance is not None and not Path(self.instance).exists():
            raise ConfigError(f"instance file {self.instance} does not exist")
        if self.opt_method not in ("auto", "exact", "lp_relaxation"):
            raise ConfigError(f"unknown opt method {self.opt_method!r}")
        _ref_fn(self.ref_fn)


@dataclass
class MetricsRecord:
    trial: int
    T: int
    alg: str
    opt: float
    opt_method: str
    reward: float
    regret: float
    comp_shortfall: float
    gap: float | None = None
    switched: bool | None = None
    switch_time: int | None = None
    runtime_ms: float = 0.0
    extra: dict = field(default_factory=dict, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def _instance_for(config: ExperimentConfig, trial: int):
    seed = config.seed + trial
    if config.instance is not None:
        seq, rho = read_instance(config.instance)
        return seq, rho, None
    gen = config.generator
    if gen == "two_type":
        rho = 0.5 if config.rho is None else config.rho
        spec = two_type_spec(p_high=0.5, seed=seed)
        return gen_stochastic(spec, config.T), np.array([rho]), None
    if gen in ("lowerbound_one", "lowerbound_two"):
        which = "instance_one" if gen.endswith("one") else "instance_two"
        seq, mu_hat = gen_lowerbound(config.T, 4.0, 2.0, which)
        return seq, np.array([1.0]), mu_hat
    raise ConfigError(f"unknown generator {gen!r}")


def _resolve_mu_hat(config, seq, params, default_mu, trial):
    mu = config.mu_hat
    if isinstance(mu, str):
        p = Path(mu)
        if p.exists():
            return read_prediction(p).mu_hat
        try:
            return np.array([float(x) for x in mu.replace(",", " ").split()])
        except ValueError:
            raise ConfigError(f"--mu-hat {mu!r} is neither a file nor numbers") from None
    if mu is not None:
        return np.asarray(mu, dtype=float)
    if default_mu is not None:
        return default_mu
    pred = make_prediction(seq, params, PredictionSpec(config.a, None, config.seed + trial))
    return pred.mu_hat


def run_algorithm(alg: str, seq: ArrivalSequence, mu_hat, params: ProblemParams, *,
                  eta=None, h: ReferenceFunction = EUCLIDEAN, tuner: TunerConfig = TunerConfig(),
                  aa_config: AAConfig = AAConfig(), main_config: MainConfig | None = None):
    """Run one algorithm; returns ``(trajectory, switch record or None)``."""
    rho = params.rho
    if alg == "prd":
        return run_prd(seq, mu_hat, rho), None
    if alg == "mda":
        mu_1 = np.zeros(params.m) if mu_hat is None else mu_hat
        return run_mda(seq, mu_1, eta, h, rho=rho, mu_max=params.mu_max), None
    if alg == "sa":
        return run_sa(seq, mu_hat, h, tuner, rho=rho, params=params), None
    if alg == "aa":
        return run_aa(seq, mu_hat, rho=rho, h=h, config=aa_config, params=params), None
    if alg == "main":
        cfg = main_config or MainConfig(h=h, tuner=tuner, aa_config=aa_config)
        return run_main(seq, mu_hat, cfg, params=params)
    raise ConfigError(f"unknown algorithm {alg!r}")


def _opt(seq, params, method):
    if method == "auto":
        method = "exact" if len(seq) <= EXACT_LIMIT else "lp_relaxation"
    return solve_opt(seq, params.budget, method).value, method


def run_experiment(config: ExperimentConfig) -> list[MetricsRecord]:
    h = _ref_fn(config.ref_fn)
    tuner = TunerConfig(eta_1=config.eta_1)
    aa_cfg = AAConfig(epsilon_fn=config.epsilon_fn, c=config.c)
    main_cfg = MainConfig(delta=config.delta, L=config.L, aa_config=aa_cfg, tuner=tuner, h=h,
                          opt_method=config.opt_method,
                          literal_pseudocode=config.literal_pseudocode)
    records = []
    for trial in range(config.trials):
        seq, rho, default_mu = _instance_for(config, trial)
        params = compute_params(seq, rho)
        mu_hat = _resolve_mu_hat(config, seq, params, default_mu, trial)
        start = time.perf_counter()
        traj, rec = run_algorithm(config.alg, seq, mu_hat, params, eta=config.eta, h=h,
                                  tuner=tuner, aa_config=aa_cfg, main_config=main_cfg)
        runtime = (time.perf_counter() - start) * 1000.0
        opt, method = _opt(seq, params, config.opt_method)
        reward = traj.total_reward
        g = None
        if config.with_gap:
            r_prd = run_prd(seq, mu_hat, params.rho).total_reward
            r_mda = run_mda(seq, np.zeros(params.m), config.eta, h, rho=params.rho,
                            mu_max=params.mu_max).total_reward
            try:
                g = gap(reward, r_prd, r_mda)
            except DegenerateBaselines:
                g = None
        records.append(MetricsRecord(
            trial=trial, T=len(seq), alg=config.alg, opt=opt, opt_method=method,
            reward=reward, regret=opt - reward,
            comp_shortfall=opt / params.alpha_star - reward, gap=g,
            switched=None if rec is None else rec.switched,
            switch_time=None if rec is None else rec.switch_time,
            runtime_ms=round(runtime, 3)))
    return records


# ---------------------------------------------------------------------------
# Regret scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegretRow:
    T: int
    mean: float
    std: float


def fit_loglog_slope(Ts, means) -> float | None:
    """Least-squares slope of ``log(mean)`` on ``log(T)``; None unless all means are positive."""
    means = np.asarray(means, dtype=float)
    if np.any(means <= 0):
        return None
    x = np.log(np.asarray(Ts, dtype=float))
    y = np.log(means)
    return float(np.polyfit(x, y, 1)[0])


def regret_study(dist_spec: DistributionSpec, algorithm: str | Callable, T_list, trials: int,
                 rho, opt_method: str = "auto", **alg_kwargs):
    """Mean and spread of ``OPT - reward`` per horizon against a fixed distribution.

    ``algorithm`` is a tag from :data:`ALGORITHMS` (predictions via
    ``mu_hat``) or a callable ``(seq, params, seed) -> reward``. Trial ``i``
    draws its instance with seed ``dist_spec.seed + i``. Returns
    ``(rows, slope, all_zero)``.
    """
    Ts = list(T_list)
    if Ts != sorted(Ts):
        raise ValueError("T_list must be ascending")
    rows = []
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    mu_hat = alg_kwargs.pop("mu_hat", None)
    for T in Ts:
        regrets = []
        for i in range(trials):
            seed = dist_spec.seed + i
            seq = gen_stochastic(dist_spec.with_seed(seed), T)
            params = compute_params(seq, rho)
            if callable(algorithm):
                reward = float(algorithm(seq, params, seed))
            else:
                mu = mu_hat(seq, params, seed) if callable(mu_hat) else mu_hat
                reward = run_algorithm(algorithm, seq, mu, params, **alg_kwargs)[0].total_reward
            opt, _ = _opt(seq, params, opt_method)
            regrets.append(opt - reward)
        rows.append(RegretRow(T, float(np.mean(regrets)), float(np.std(regrets))))
    means = [r.mean for r in rows]
    all_zero = all(mm == 0 for mm in means)
    return rows, (None if all_zero else fit_loglog_slope(Ts, means)), all_zero


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_report(records: Sequence[MetricsRecord], path=None, format: str = "csv") -> str:
    if format != "csv":
        raise ConfigError(f"unsupported report format {format!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in sorted(records, key=lambda r: (r.trial, r.alg)):
        w.writerow([_fmt(getattr(r, c)) for c in REPORT_COLUMNS])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_report(source) -> list[MetricsRecord]:
    """Inverse of :func:`emit_report`; ``source`` is a path or the CSV text."""
    text = source if isinstance(source, str) and "\n" in source else Path(source).read_text()
    types = {f.name: f.type for f in fields(MetricsRecord)}
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        kw = {}
        for c in REPORT_COLUMNS:
            v = row[c]
            t = types[c]
            if v == "":
                kw[c] = None
            elif "bool" in str(t):
                kw[c] = v == "1"
            elif c in ("trial", "T", "switch_time"):
                kw[c] = int(v)
            elif c in ("alg", "opt_method"):
                kw[c] = v
            else:
                kw[c] = float(v)
        out.append(MetricsRecord(**kw))
    return out


GAP_EDGES = [round(0.1 * i, 1) for i in range(11)]


def gap_histogram(gaps) -> list[tuple[float, float, int]]:
    """Counts over ``[0, 0.1), ..., [0.9, 1.0]`` plus underflow and overflow bins."""
    gaps = [g for g in gaps if g is not None]
    bins = [(-math.inf, 0.0, 0)]
    bins += [(GAP_EDGES[i], GAP_EDGES[i + 1], 0) for i in range(10)]
    bins += [(1.0, math.inf, 0)]
    counts = [0] * 12
    for g in gaps:
        if g < 0:
            counts[0] += 1
        elif g > 1:
            counts[11] += 1
        else:
            counts[1 + min(int(g * 10), 9)] += 1
    return [(lo, hi, c) for (lo, hi, _), c in zip(bins, counts)]


def emit_histogram(gaps, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_lo", "bin_hi", "count"])
    for lo, hi, c in gap_histogram(gaps):
        w.writerow([_fmt(lo), _fmt(hi), c])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------------------
# GAP study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapInstanceFamily:
    """Random single-resource demand mixes standing in for sales data.

    Each instance draws ``n_types`` customer values in ``[0.1, 1]``, mixture
    weights from a flat Dirichlet and a budget rate in ``rho_range``; every
    accepted customer uses one unit. ``drift`` in ``[0, 1]`` tilts the mix
    toward the high-value types over the horizon (0 keeps it i.i.d.).
    """

    T: int = 2000
    n_types: int = 4
    rho_range: tuple[float, float] = (0.3, 0.7)
    drift: float = 0.0

    def sample(self, seed: int) -> tuple[ArrivalSequence, np.ndarray]:
        rng = np.random.Generator(np.random.PCG64(seed))
        values = np.sort(rng.uniform(0.1, 1.0, self.n_types))
        w = rng.dirichlet(np.ones(self.n_types))
        rho = float(rng.uniform(*self.rho_range))
        reqs = [ArrivalRequest.from_menu([(float(v), (1.0,))]) for v in values]
        tilt = np.linspace(-self.drift, self.drift, self.T)[:, None] * np.linspace(-1, 1, self.n_types)
        probs = w * np.exp(tilt)
        cdf = np.cumsum(probs / probs.sum(axis=1, keepdims=True), axis=1)
        u = rng.random(self.T)
        idx = np.minimum((u[:, None] >= cdf).sum(axis=1), self.n_types - 1)
        return ArrivalSequence(tuple(reqs[i] for i in idx)), np.array([rho])


def gap_study(family: GapInstanceFamily, levels, n_instances: int, seed: int = 0,
              main_config: MainConfig = MainConfig(), out_dir=None):
    """MainALG GAP against PRD and MDA for predictions of each accuracy level.

    Returns ``{level: [gap or None, ...]}``; writes per-level reports and
    histograms to ``out_dir`` when given.
    """
    results = {}
    for a in levels:
        gaps, records = [], []
        for i in range(n_instances):
            s = seed + i
            seq, rho = family.sample(s)
            params = compute_params(seq, rho)
            pred = make_prediction(seq, params, PredictionSpec(a, None, s))
            t0 = time.perf_counter()
            traj, rec = run_main(seq, pred.mu_hat, main_config, params=params)
            runtime = (time.perf_counter() - t0) * 1000.0
            r_prd = run_prd(seq, pred.mu_hat, params.rho).total_reward
            r_mda = run_mda(seq, np.zeros(params.m), None, main_config.h, rho=params.rho,
                            mu_max=params.mu_max).total_reward
            try:
                g = gap(traj.total_reward, r_prd, r_mda)
            except DegenerateBaselines:
                g = None
            gaps.append(g)
            opt, method = _opt(seq, params, "auto")
            records.append(MetricsRecord(
                trial=i, T=len(seq), alg="main", opt=opt, opt_method=method,
                reward=traj.total_reward, regret=opt - traj.total_reward,
                comp_shortfall=opt / params.alpha_star - traj.total_reward, gap=g,
                switched=rec.switched, switch_time=rec.switch_time,
                runtime_ms=round(runtime, 3)))
        results[a] = gaps
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            tag = "inf" if math.isinf(a) else repr(float(a))
            emit_report(records, out / f"gap_a{tag}.csv")
            emit_histogram(gaps, out / f"gap_hist_a{tag}.csv")
    return results
