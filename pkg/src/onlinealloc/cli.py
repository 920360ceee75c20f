"""Command-line entry point: ``onlinealloc {run,regret,gap-study,gen,validate}``."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .harness import (ConfigError, ExperimentConfig, GapInstanceFamily, emit_histogram,
                      emit_report, gap_study, regret_study)
from .instances import (PredictionSpec, gen_lowerbound, gen_stochastic, make_prediction,
                        two_type_spec, write_prediction)
from .main_alg import MainConfig
from .adversarial import AAConfig
from .harness import _ref_fn
from .model import InstanceError, compute_params, read_instance, validate_instance, write_instance
from .oracle import NodeBudgetExceeded
from .stochastic import TunerConfig

EXIT_OK, EXIT_CONFIG, EXIT_INSTANCE, EXIT_SOLVER = 0, 2, 3, 4

log = logging.getLogger("onlinealloc")


class ConfigParseError(ConfigError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; keys are flag names without dashes prefix."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(path, lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        if not key:
            raise ConfigParseError(path, lineno, "empty key")
        out[key.replace("-", "_")] = value
    return out


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _level(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    p.add_argument("--instance")
    p.add_argument("--generator", choices=["two_type", "lowerbound_one", "lowerbound_two"])
    p.add_argument("--T", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--alg", choices=["prd", "mda", "sa", "aa", "main"])
    p.add_argument("--mu-hat", help="prediction file or inline numbers")
    p.add_argument("--a", type=_level, help="prediction accuracy when --mu-hat is absent")
    p.add_argument("--eta", type=float)
    p.add_argument("--eta-1", type=float, help="initial SA step size (default 1/T)")
    p.add_argument("--delta", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--epsilon-fn", choices=["inv_log", "power"])
    p.add_argument("--c", type=float)
    p.add_argument("--ref-fn", choices=["euclidean", "shifted_entropy"])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--opt-method", choices=["auto", "exact", "lp_relaxation"])
    p.add_argument("--literal-pseudocode", action="store_true", default=None)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onlinealloc",
                                     description="Online resource allocation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one algorithm over trials and report metrics")
    _add_common(run)
    run.add_argument("--gap", action="store_true", help="also compute GAP against PRD and MDA")
    run.add_argument("--histogram", help="write GAP histogram bins here")
    reg = sub.add_parser("regret", help="regret scaling study on the two-type family")
    _add_common(reg)
    reg.add_argument("--T-list", default="100,1000,10000")
    gs = sub.add_parser("gap-study", help="MainALG GAP at several prediction accuracies")
    _add_common(gs)
    gs.add_argument("--levels", default="0,0.5,inf")
    gs.add_argument("--instances", type=int, default=100)
    gen = sub.add_parser("gen", help="write a generated instance (and prediction) to disk")
    _add_common(gen)
    val = sub.add_parser("validate", help="check an instance file and print its parameters")
    _add_common(val)
    val.add_argument("--r-bar", type=float)
    val.add_argument("--g-bar", type=float)
    val.add_argument("--g-under", type=float)
    return parser


DEFAULTS = dict(T=1000, alg="prd", a=math.inf, delta=0.1, epsilon_fn="inv_log", c=1.0,
                ref_fn="euclidean", trials=1, seed=0, opt_method="auto",
                literal_pseudocode=False)
TYPES = dict(T=int, rho=float, a=_level, eta=float, eta_1=float, delta=float, L=float, c=float,
             trials=int, seed=int, instances=int,
             literal_pseudocode=lambda v: v.lower() in ("1", "true", "yes", "on"))


def merged_options(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if args.config:
        try:
            file_opts = read_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        for key, value in file_opts.items():
            if not hasattr(args, key) or key == "config":
                raise ConfigError(f"{args.config}: unknown key {key!r}")
            try:
                opts[key] = TYPES.get(key, str)(value)
            except ValueError:
                raise ConfigError(f"{args.config}: bad value for {key!r}: {value!r}") from None
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command"):
            opts[key] = value
    return opts


def _experiment(opts: dict, **over) -> ExperimentConfig:
    fields = ExperimentConfig.__dataclass_fields__
    kw = {k: v for k, v in opts.items() if k in fields}
    kw.update(over)
    return ExperimentConfig(**kw)


def _main_config(opts: dict) -> MainConfig:
    return MainConfig(delta=opts["delta"], L=opts.get("L"),
                      aa_config=AAConfig(epsilon_fn=opts["epsilon_fn"], c=opts["c"]),
                      tuner=TunerConfig(eta_1=opts.get("eta_1")), h=_ref_fn(opts["ref_fn"]),
                      opt_method=opts["opt_method"],
                      literal_pseudocode=bool(opts["literal_pseudocode"]))


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(opts) -> int:
    from .harness import run_experiment
    cfg = _experiment(opts, with_gap=bool(opts.get("gap") or opts.get("histogram")))
    records = run_experiment(cfg)
    _write(emit_report(records, format=opts["format"]), opts.get("out"))
    if opts.get("histogram"):
        emit_histogram([r.gap for r in records], opts["histogram"])
    return EXIT_OK


def cmd_regret(opts) -> int:
    Ts = [int(x) for x in str(opts["T_list"]).replace(",", " ").split()]
    rho = 0.5 if opts.get("rho") is None else opts["rho"]
    kw = {}
    if opts["alg"] == "mda":
        kw = dict(eta=opts.get("eta"), h=_ref_fn(opts["ref_fn"]))
    if opts.get("mu_hat"):
        kw["mu_hat"] = np.array(_floats(opts["mu_hat"]))
    elif opts["alg"] != "mda":
        a = opts["a"]
        kw["mu_hat"] = lambda seq, params, seed: make_prediction(
            seq, params, PredictionSpec(a, None, seed)).mu_hat
    rows, slope, zero = regret_study(two_type_spec(seed=opts["seed"]), opts["alg"], Ts,
                                     opts["trials"], [rho], **kw)
    lines = ["T,mean_regret,std_regret"] + [f"{r.T},{r.mean!r},{r.std!r}" for r in rows]
    _write("\n".join(lines) + "\n", opts.get("out"))
    print("slope: " + ("exact-zero" if zero else "undefined" if slope is None else f"{slope:.4f}"),
          file=sys.stderr)
    return EXIT_OK


def cmd_gap_study(opts) -> int:
    levels = [_level(x) for x in str(opts["levels"]).replace(",", " ").split()]
    out = opts.get("out") or "gap_study"
    res = gap_study(GapInstanceFamily(T=opts["T"]), levels, opts["instances"], seed=opts["seed"],
                    main_config=_main_config(opts), out_dir=out)
    for a, gaps in res.items():
        vals = [g for g in gaps if g is not None]
        mean = float(np.mean(vals)) if vals else float("nan")
        print(f"a={a}: mean GAP {mean:.4f} over {len(vals)} instances "
              f"({len(gaps) - len(vals)} not applicable)")
    return EXIT_OK


def cmd_gen(opts) -> int:
    gen = opts.get("generator")
    if gen is None:
        raise ConfigError("gen needs --generator")
    if not opts.get("out"):
        raise ConfigError("gen needs --out")
    T = opts["T"]
    mu_hat = None
    if gen == "two_type":
        seq = gen_stochastic(two_type_spec(seed=opts["seed"]), T)
        rho = np.array([0.5 if opts.get("rho") is None else opts["rho"]])
    else:
        seq, mu_hat = gen_lowerbound(T, 4.0, 2.0, "instance_one" if gen.endswith("one")
                                     else "instance_two")
        rho = np.array([1.0])
    write_instance(opts["out"], seq, rho)
    params = compute_params(seq, rho)
    if mu_hat is None:
        pred = make_prediction(seq, params, PredictionSpec(opts["a"], None, opts["seed"]))
    else:
        from .instances import Prediction
        pred = Prediction(mu_hat)
    write_prediction(str(opts["out"]) + ".pred", pred)
    return EXIT_OK


def cmd_validate(opts) -> int:
    if not opts.get("instance"):
        raise ConfigError("validate needs --instance")
    seq, rho = read_instance(opts["instance"])
    p = validate_instance(seq, rho, r_bar=opts.get("r_bar"), g_bar=opts.get("g_bar"),
                          g_under=opts.get("g_under"))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["m", "T", "rho", "r_bar", "g_bar", "g_under", "alpha_star"])
    w.writerow([p.m, p.T, " ".join(repr(float(x)) for x in p.rho), repr(p.r_bar), repr(p.g_bar),
                repr(p.g_under), repr(p.alpha_star)])
    return EXIT_OK


COMMANDS = {"run": cmd_run, "regret": cmd_regret, "gap-study": cmd_gap_study, "gen": cmd_gen,
            "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s %(levelname)s %(message)s")
    try:
        opts = merged_options(args)
        return COMMANDS[args.command](opts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstanceError as exc:
        print(f"instance error: {exc}", file=sys.stderr)
        return EXIT_INSTANCE
    except NodeBudgetExceeded as exc:
        print(f"solver budget exceeded: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
