"""Command-line front end.

Subcommands: simulate-log, feedback, beauty, fit, ingest.  Every run takes
a JSON config (--config), an output directory (--out) and writes there a
manifest.json that can itself be passed back as --config to replay the run
byte for byte.  Exit codes: 0 success, 2 configuration error, 3 numerical
failure.
"""

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .calibration import (comparison_table, compute_moments, fit_parameters,
                          ingest_price_dividend_csv, moment_loss)
from .beauty import (format_solution, pareto_faked_equilibrium,
                     truthful_equilibrium, welfare_comparison)
from .config import (load_config, parse_contest, parse_feedback, parse_fit,
                     parse_market, parse_simulate, parse_targets,
                     write_manifest)
from .errors import ConfigError, NumericError
from .feedback import diligence_sweep, run_feedback
from .equilibrium import simulate_path


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.paths is not None:
        cfg["n_paths"] = args.paths
    return cfg


def cmd_simulate_log(cfg, args):
    spec, horizon, dt, n_paths, seed, write_paths = parse_simulate(cfg)
    out = _outdir(args)
    write_manifest(out, "simulate-log", cfg)

    def one(p):
        return simulate_path(spec, horizon, dt, seed, p)

    if args.parallel > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            # executor.map preserves ordering, so the reduction is
            # deterministic regardless of scheduling
            paths = pool.map(_simulate_star,
                             [(spec, horizon, dt, seed, p) for p in range(n_paths)])
            report = _consume_paths(paths, out, write_paths)
    else:
        report = _consume_paths(map(one, range(n_paths)), out, write_paths)

    with open(out / "summary.txt", "w") as fp:
        fp.write(f"paths={n_paths} horizon_years={horizon:.17g} dt={dt:.17g} "
                 f"seed={seed}\n")
        for name, value in report.as_dict().items():
            fp.write(f"{name}={value:.17g}\n")
    return 0


def _simulate_star(packed):
    spec, horizon, dt, seed, p = packed
    return simulate_path(spec, horizon, dt, seed, p)


def _consume_paths(paths, out, write_paths):
    def gen():
        for p, path in enumerate(paths):
            if p < write_paths:
                with open(out / f"path_{p:03d}.csv", "w") as fp:
                    path.write_csv(fp)
            yield path

    return compute_moments(gen())


def cmd_feedback(cfg, args):
    config = parse_feedback(cfg)
    out = _outdir(args)
    write_manifest(out, "feedback", cfg)
    sweep = cfg.get("seed_sweep", 0)
    if isinstance(sweep, bool) or not isinstance(sweep, int) or sweep < 0:
        raise ConfigError("seed_sweep: expected a nonnegative integer")
    if sweep:
        seeds = list(range(config.seed, config.seed + sweep))
        diligence_values = cfg.get("diligence_values", [0, config.n_diligent])
        if (not isinstance(diligence_values, list) or not diligence_values
                or not all(isinstance(v, int) and not isinstance(v, bool)
                           and 0 <= v <= config.n_agents
                           for v in diligence_values)):
            raise ConfigError("diligence_values: expected a list of counts "
                              "between 0 and n_agents")
        if args.parallel > 1:
            with ProcessPoolExecutor(max_workers=args.parallel) as pool:
                table = diligence_sweep(config, diligence_values, seeds,
                                        map_fn=pool.map)
        else:
            table = diligence_sweep(config, diligence_values, seeds)
        with open(out / "sweep.txt", "w") as fp:
            fp.write("n_diligent,seed,log_ratio_range,n_jumps\n")
            for n_dil in diligence_values:
                for seed, row in zip(seeds, table[n_dil]):
                    fp.write(f"{n_dil},{seed},{row['log_ratio_range']:.17g},"
                             f"{row['n_jumps']}\n")
            for n_dil in diligence_values:
                mean_range = sum(r["log_ratio_range"] for r in table[n_dil]) \
                    / len(seeds)
                fp.write(f"mean_range[n_diligent={n_dil}]={mean_range:.17g}\n")
        return 0
    result = run_feedback(config)
    with open(out / "series.csv", "w") as fp:
        result.write_csv(fp)
    with open(out / "metrics.txt", "w") as fp:
        for key, value in result.metrics.items():
            fp.write(f"{key}={value:.17g}\n" if isinstance(value, float)
                     else f"{key}={value}\n")
    return 0


def cmd_beauty(cfg, args):
    spec = parse_contest(cfg)
    out = _outdir(args)
    write_manifest(out, "beauty", cfg)
    with open(out / "contest.txt", "w") as fp:
        fp.write(format_solution(spec) + "\n")
    if cfg.get("csv", False):
        truthful = truthful_equilibrium(spec)
        faked = pareto_faked_equilibrium(spec)
        report = welfare_comparison(spec)
        with open(out / "contest.csv", "w") as fp:
            fp.write("agent,gamma,alpha,variance,p,theta,objective,"
                     "alpha_faked,theta_faked,objective_faked,improved\n")
            for j in range(spec.n_agents):
                fp.write(",".join([
                    str(j),
                    format(spec.risk_aversion[j], ".17g"),
                    format(spec.mean_belief[j], ".17g"),
                    format(spec.belief_variance[j], ".17g"),
                    format(truthful.weights[j], ".17g"),
                    format(truthful.holdings[j], ".17g"),
                    format(truthful.objectives[j], ".17g"),
                    format(faked.professed[j], ".17g"),
                    format(faked.holdings[j], ".17g"),
                    format(faked.objectives[j], ".17g"),
                    str(bool(report.improved[j])),
                ]) + "\n")
    return 0


def cmd_fit(cfg, args):
    problem = parse_fit(cfg)
    targets = parse_targets(cfg)
    out = _outdir(args)
    write_manifest(out, "fit", cfg)
    result = fit_parameters(problem, targets)
    with open(out / "fit_result.json", "w") as fp:
        json.dump({
            "values": {k: result.values[k] for k in sorted(result.values)},
            "loss": result.loss,
            "n_evaluations": result.n_evaluations,
            "converged": result.converged,
            "moments": result.report.as_dict(),
        }, fp, indent=2, sort_keys=True)
        fp.write("\n")
    with open(out / "comparison.txt", "w") as fp:
        fp.write(comparison_table(result.report, targets) + "\n")
        fp.write(f"\nloss={result.loss:.17g}\n")
    return 0


def cmd_ingest(cfg, args):
    csv_path = cfg.get("csv")
    if not isinstance(csv_path, str):
        raise ConfigError("csv: missing required field")
    min_years = cfg.get("min_years", 10.0)
    out = _outdir(args)
    write_manifest(out, "ingest", cfg)
    report = ingest_price_dividend_csv(csv_path, min_years=min_years)
    with open(out / "targets.json", "w") as fp:
        payload = report.targets.as_dict()
        payload["provenance"] = report.targets.provenance
        payload["n_rows"] = report.n_rows
        payload["first_date"] = report.first_date
        payload["last_date"] = report.last_date
        json.dump(payload, fp, indent=2, sort_keys=True)
        fp.write("\n")
    return 0


_COMMANDS = {
    "simulate-log": (cmd_simulate_log, "simulate equilibrium paths and report moments"),
    "feedback": (cmd_feedback, "run the mistaken-beliefs feedback simulator"),
    "beauty": (cmd_beauty, "solve the one-period professed-beliefs contest"),
    "fit": (cmd_fit, "search parameters to match target moments"),
    "ingest": (cmd_ingest, "compute empirical targets from a price/dividend CSV"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="beliefmkt",
        description="asset-market equilibrium engine with heterogeneous beliefs")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config or manifest")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--paths", type=int, default=None,
                       help="override number of Monte Carlo paths")
        p.add_argument("--parallel", type=int, default=1,
                       help="worker processes (default 1: sequential)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        declared = cfg.pop("subcommand", None)
        if declared is not None and declared != args.subcommand:
            raise ConfigError(
                f"config is for subcommand '{declared}', not '{args.subcommand}'")
        cfg = _apply_overrides(cfg, args)
        return _COMMANDS[args.subcommand][0](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
