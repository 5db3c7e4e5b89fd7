"""Command line front end: ``rankdist {solve,sample,concentrate,partition,fit,synth}``.

Every run writes its outputs plus a ``<prefix>.manifest.json`` recording the
merged parameters, seed, input digest and output digests.  Parameter
precedence is command-line flag, then config file, then built-in default.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import CardinalitySpectrum, Direction, EnergiaConstraint
from .equilibrium import cumulative_curve, solve_equilibrium
from .errors import (
    CapExceededError,
    DataError,
    DegenerateError,
    DimensionError,
    DomainError,
    FitError,
    SolverError,
)
from .io import (
    RunManifest,
    default_output_dir,
    file_digest,
    ingest_catalog,
    read_spectrum,
    write_catalog,
    write_csv,
    write_json,
    write_svg,
)
from .partition import partition_saddle
from .rankfit import build_ranks, curve_points, fit_rank_curve, synthetic_prices
from .sampler import (
    ChainConfig,
    concentration_experiment,
    ensemble_stats,
    make_rng,
    sample_counts,
)

logger = logging.getLogger("rankdist")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
SAMPLING_COMMANDS = {"sample", "concentrate", "synth"}

DEFAULTS = {
    "solve": {"spectrum": None, "n": None, "energia": None, "ratio": None,
              "direction": "at_least", "svg": False},
    "sample": {"spectrum": None, "n": None, "energia": None, "ratio": None,
               "direction": "at_least", "k": 1000, "burn_in": 50, "thinning": 5,
               "seed": 0, "epsilon": 0.05, "start": "warm"},
    "concentrate": {"n_grid": [64, 128, 256, 512], "ratio": 1.2, "epsilon": 0.05,
                    "k": 2000, "burn_in": 50, "thinning": 5, "seed": 0, "s_ratio": 1.0,
                    "workers": 1},
    "partition": {"spectrum": None, "n": None, "betas": [0.3]},
    "fit": {"catalog": None, "mode": "cumulative", "normalize": True,
            "user_transform": None, "svg": False},
    "synth": {"c1": -1.2, "c2": 1.2, "alpha": 2.0, "gamma": 1.5, "n": 2000,
              "noise": 0.0, "seed": 0},
}
_NOT_PARAMS = {"out", "config", "error_json", "prefix", "command", "verbose"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _pair(text):
    vals = _float_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected ALPHA,GAMMA")
    return vals


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False, argument_default=S)
    common.add_argument("--out", help="output directory (default $RANKDIST_OUTPUT_DIR or .)")
    common.add_argument("--prefix", help="output file prefix (default: subcommand name)")
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--error-json", action="store_true", help="print errors as JSON on stderr")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="rankdist", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rankdist {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, argument_default=S)

    def constraint_args(p):
        p.add_argument("--spectrum", help="file with one cardinality per line or a JSON array")
        p.add_argument("--n", type=int, help="dictionary length N")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--energia", type=float, help="energia bound E")
        g.add_argument("--ratio", type=float, help="E as a multiple of N*mean(w)")
        p.add_argument("--direction", choices=["at_least", "at_most"])

    def chain_args(p):
        p.add_argument("--k", type=int, help="number of recorded samples")
        p.add_argument("--burn-in", type=int, help="burn-in sweeps")
        p.add_argument("--thinning", type=int, help="sweeps between samples")
        p.add_argument("--seed", type=int)
        p.add_argument("--epsilon", type=float, help="head cut: only l >= epsilon*s enters D")

    p = add("solve", "solve for (beta, nu) and emit the occupation curve")
    constraint_args(p)
    p.add_argument("--svg", action="store_true", help="also write a static SVG chart")

    p = add("sample", "sample uniform feasible compositions")
    constraint_args(p)
    chain_args(p)
    p.add_argument("--start", choices=["warm", "corner"])

    p = add("concentrate", "concentration experiment over an N grid")
    p.add_argument("--n-grid", type=_int_list)
    p.add_argument("--ratio", type=float)
    p.add_argument("--s-ratio", type=float, help="s = round(s_ratio * N)")
    p.add_argument("--workers", type=int)
    chain_args(p)

    p = add("partition", "exact vs saddle-point log Z over a beta grid")
    p.add_argument("--spectrum")
    p.add_argument("--n", type=int)
    p.add_argument("--betas", type=_float_list)

    p = add("fit", "fit the rank curve to a price catalog")
    p.add_argument("--catalog")
    p.add_argument("--mode", choices=["cumulative", "rank"])
    p.add_argument("--no-normalize", dest="normalize", action="store_false")
    p.add_argument("--user-transform", type=_pair, metavar="ALPHA,GAMMA",
                   help="fit user cardinalities instead of raw prices")
    p.add_argument("--svg", action="store_true")

    p = add("synth", "generate a synthetic catalog from the rank curve")
    for name in ("c1", "c2", "alpha", "gamma", "noise"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    return parser


def _load_config(path):
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def merge_params(command, cli: dict, config: dict) -> dict:
    """Defaults, then config (top level, then per-command section), then flags."""
    params = dict(DEFAULTS[command])
    for source in (config, config.get(command, {})):
        for key, value in source.items():
            key = key.replace("-", "_")
            if key in params:
                params[key] = value
    for key, value in cli.items():
        if key not in _NOT_PARAMS:
            params[key] = value
    return params


def _require(params, *names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise UsageError("missing required parameter(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _constraint(params, spec):
    n = int(params["n"])
    if params.get("energia") is not None:
        energia = float(params["energia"])
    elif params.get("ratio") is not None:
        energia = float(params["ratio"]) * n * spec.mean
    else:
        raise UsageError("one of --energia or --ratio is required")
    return n, EnergiaConstraint(energia, Direction.parse(params["direction"]))


class _Run:
    def __init__(self, command, params, out_dir, prefix, input_path=None):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.prefix = prefix
        try:
            digest = file_digest(input_path) if input_path else None
        except OSError as exc:
            raise DataError(f"cannot read input {input_path}: {exc}") from exc
        self.manifest = RunManifest(
            subcommand=command,
            parameters=params,
            seed=params.get("seed"),
            input_digest=digest,
        )

    def path(self, suffix):
        return self.out / f"{self.prefix}{suffix}"

    def done(self, *paths):
        for p in paths:
            self.manifest.record_output(p)
        return self.manifest.write(self.path(".manifest.json"))


def cmd_solve(params, run):
    _require(params, "spectrum", "n")
    spec = read_spectrum(params["spectrum"])
    n, constraint = _constraint(params, spec)
    eq = solve_equilibrium(spec, n, constraint)
    curve = cumulative_curve(spec, eq)
    record = {**eq.to_record(), "energia": constraint.energia,
              "direction": constraint.direction.value, "s": spec.s}
    outs = [
        write_json(run.path(".json"), record),
        write_csv(run.path("_curve.csv"), ["l", "omega", "occupation", "phi"],
                  ((l + 1, w, o, p) for l, (w, o, p) in
                   enumerate(zip(spec.values, curve.occupations, curve.phi)))),
    ]
    if params.get("svg"):
        outs.append(write_svg(run.path("_curve.svg"), {"phi": (spec.values, curve.phi)},
                              title="cumulative occupation", xlabel="w", ylabel="phi"))
    run.done(*outs)
    print(f"beta={eq.beta:.6g} nu={eq.nu:.6g} branch={eq.branch.value} "
          f"residual={eq.residual_norm:.3g}")


def cmd_sample(params, run):
    _require(params, "spectrum", "n")
    spec = read_spectrum(params["spectrum"])
    n, constraint = _constraint(params, spec)
    config = ChainConfig(int(params["burn_in"]), int(params["thinning"]), int(params["seed"]))
    start = params.get("start", "warm")
    samples = sample_counts(spec, n, constraint, config, int(params["k"]),
                            make_rng(config.seed, 0), start=start)
    try:
        eq = solve_equilibrium(spec, n, constraint)
        phi = cumulative_curve(spec, eq).phi
        stats = ensemble_stats(samples, phi, float(params["epsilon"])).to_record()
        stats["equilibrium"] = eq.to_record()
    except (DomainError, DegenerateError) as exc:
        # feasible set without an interior equilibrium: report means only
        logger.info("no equilibrium curve: %s", exc)
        stats = {"n": n, "s": spec.s, "sample_count": int(samples.shape[0]),
                 "equilibrium": None}
    stats["mean_cumulative"] = np.cumsum(samples, axis=1).mean(axis=0) if len(samples) else []
    header = ["sample"] + [f"n_{i + 1}" for i in range(spec.s)]
    outs = [
        write_csv(run.path("_samples.csv"), header,
                  ([r] + row for r, row in enumerate(samples.tolist()))),
        write_json(run.path("_stats.json"), stats),
    ]
    run.done(*outs)
    print(f"{samples.shape[0]} samples written")


def cmd_concentrate(params, run):
    config = ChainConfig(int(params["burn_in"]), int(params["thinning"]), int(params["seed"]))
    s_ratio = float(params["s_ratio"])
    family = None if s_ratio == 1.0 else _Family(s_ratio)
    result = concentration_experiment(
        family, [int(n) for n in params["n_grid"]], float(params["ratio"]),
        float(params["epsilon"]), int(params["k"]), config, workers=int(params["workers"]),
    )
    rows = []
    for n, stats in result:
        for q, d in stats.deviation_quantiles.items():
            rows.append((n, q, d, stats.phi_max_error))
    outs = [
        write_csv(run.path(".csv"), ["N", "quantile", "D", "phi_max_error"], rows),
        write_json(run.path(".json"), result.to_record()),
    ]
    run.done(*outs)
    print(f"slope={result.slope:.6g} (bound 0.75 + eps)")


class _Family:
    def __init__(self, s_ratio):
        self.s_ratio = s_ratio

    def __call__(self, n):
        return CardinalitySpectrum.uniform_grid(max(1, round(self.s_ratio * n)))


def cmd_partition(params, run):
    _require(params, "n")
    n = int(params["n"])
    spec = read_spectrum(params["spectrum"]) if params.get("spectrum") else \
        CardinalitySpectrum.uniform_grid(n)
    rows = []
    for beta in params["betas"]:
        r = partition_saddle(spec, n, float(beta))
        rows.append((r.beta, r.n, r.exact_log, r.saddle_log, r.rel_gap))
    out = write_csv(run.path(".csv"), ["beta", "N", "exact_log", "saddle_log", "rel_gap"], rows)
    run.done(out)
    print(f"{len(rows)} beta values written")


def cmd_fit(params, run):
    _require(params, "catalog")
    records = ingest_catalog(params["catalog"])
    prices = np.array([r.cardinality for r in records])
    if params.get("user_transform"):
        from .rankfit import user_cardinalities

        a, g = params["user_transform"]
        prices = user_cardinalities(prices, a, g)
    ranked = build_ranks(prices)
    fit = fit_rank_curve(ranked, normalize=bool(params["normalize"]), mode=params["mode"])
    x, y = curve_points(ranked, fit.mode)
    y = y / fit.count_scale
    theory = fit.predict(x)
    outs = [
        write_json(run.path(".json"), fit.to_record()),
        write_csv(run.path("_curve.csv"), ["omega", "empirical", "theoretical"],
                  zip(x, y, theory)),
    ]
    if params.get("svg"):
        outs.append(write_svg(run.path("_curve.svg"),
                              {"empirical": (x, y), "theoretical": (x, theory)},
                              title=f"rank fit, sigma={fit.sigma:.6f}", xlabel="price",
                              ylabel="fraction"))
    run.done(*outs)
    print(f"sigma={fit.sigma:.6g} alpha={fit.alpha:.6g} gamma={fit.gamma:.6g} "
          f"inflection={fit.inflection_omega:.6g} converged={fit.converged}")


def cmd_synth(params, run):
    rng = make_rng(int(params["seed"]), 0)
    n = int(params["n"])
    prices = synthetic_prices(float(params["c1"]), float(params["c2"]), float(params["alpha"]),
                              float(params["gamma"]), n, float(params["noise"]), rng)
    width = len(str(n))
    out = write_catalog(run.path(".csv"), [f"item{i:0{width}d}" for i in range(1, n + 1)], prices)
    run.done(out)
    print(f"{n} items written to {out}")


COMMANDS = {
    "solve": cmd_solve,
    "sample": cmd_sample,
    "concentrate": cmd_concentrate,
    "partition": cmd_partition,
    "fit": cmd_fit,
    "synth": cmd_synth,
}
_INPUT_KEYS = ("spectrum", "catalog")


def _exit_code(exc):
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, (SolverError, DegenerateError, FitError)):
        return EXIT_NUMERIC
    if isinstance(exc, (DataError, DomainError, DimensionError, CapExceededError, OSError,
                        ValueError)):
        return EXIT_DATA
    raise exc


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    error_json = "--error-json" in argv
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        cli = vars(args)
        command = cli["command"]
        logging.basicConfig(level=logging.INFO if cli.get("verbose") else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if command in SAMPLING_COMMANDS and os.environ.get("CI") and "seed" not in cli:
            raise UsageError(f"--seed is mandatory for '{command}' when CI is set")
        params = merge_params(command, cli, _load_config(cli.get("config")))
        input_path = next((params[k] for k in _INPUT_KEYS if params.get(k)), None)
        out_dir = cli.get("out") or default_output_dir()
        run = _Run(command, params, out_dir, cli.get("prefix") or command, input_path)
        COMMANDS[command](params, run)
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        code = _exit_code(exc)
        if error_json:
            print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                              "exit_code": code}), file=sys.stderr)
        else:
            print(f"rankdist: error: {exc}", file=sys.stderr)
        return code
