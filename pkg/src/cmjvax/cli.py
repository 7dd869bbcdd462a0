"""Command-line interface.

Subcommands: simulate, estimate, optimize, infer, ingest, coverage.
All randomness flows from --seed (or the config's seed); rerunning any
command with the same seed produces byte-identical data files, whatever
--threads is set to.  Exit codes: 0 success, 2 config error,
3 infeasible policy, 4 explosion-rate abort.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import backend_name
from .config import ExperimentConfig, parse_config_file
from .errors import CmjvaxError, ConfigError, ExplosionRateError
from .estimate import (alpha_ids, run_coupled, write_cdf_csv, write_estimates_csv,
                       write_meta_json)
from .functionals import evaluate_batch, parse_functional
from .inference import (borel_tanner_table, gamma_coverage, mean_outbreak_size,
                        mle_offspring_mean)
from .ingest import (filter_outbreaks, read_sizes_csv, read_weekly_csv,
                     segment_outbreaks, size_records, write_outbreaks_csv,
                     write_sizes_csv)
from .policy import PolicyQuery, optimal_policy
from .tree import simulate_batch, tree_to_json
from .vaccination import precedes

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_EXPLOSION = 4


def _fmt(x: float) -> str:
    return repr(float(x))


def _resolve_seed(cfg: ExperimentConfig, args) -> int:
    if args.seed is not None:
        return args.seed
    if cfg.seed is not None:
        return cfg.seed
    raise ConfigError("no seed given: pass --seed or set seed in the config")


def _out_dir(cfg, args) -> Path:
    out = args.out
    if out is None and cfg is not None and cfg.output_dir:
        out = cfg.output_dir
    if out is None:
        out = "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_simulate(args) -> int:
    cfg = parse_config_file(args.config)
    seed = _resolve_seed(cfg, args)
    out = _out_dir(cfg, args)
    batch = simulate_batch(cfg.law, cfg.initials, cfg.caps, cfg.n, seed,
                           threads=args.threads)
    alive = np.ones(int(batch.offsets[-1]), dtype=np.bool_)
    births = evaluate_batch(batch, alive, parse_functional("Ninf"))
    extinction = evaluate_batch(batch, alive, parse_functional("T"))
    with open(out / "summary.csv", "w", encoding="utf-8") as fh:
        fh.write("replicate,births,extinction_time,censored\n")
        for i in range(batch.n):
            fh.write(f"{i},{int(births[i])},{_fmt(extinction[i])},"
                     f"{str(bool(batch.censored[i])).lower()}\n")
    if args.dump_trees:
        with open(out / "trees.jsonl", "w", encoding="utf-8") as fh:
            for i in range(batch.n):
                fh.write(tree_to_json(batch.tree(i)) + "\n")
    ncens = int(np.count_nonzero(batch.censored))
    print(f"simulated {batch.n} replicates ({ncens} censored) "
          f"-> {out / 'summary.csv'}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = parse_config_file(args.config)
    if cfg.functional is None:
        raise ConfigError("estimate needs a functional in the config")
    if not cfg.alphas:
        raise ConfigError("estimate needs an [[alphas]] array in the config")
    seed = _resolve_seed(cfg, args)
    out = _out_dir(cfg, args)
    dists = run_coupled(cfg.law, cfg.initials, cfg.caps, cfg.functional,
                        cfg.alphas, cfg.n, seed, threads=args.threads)
    scale = cfg.value_scale()
    if scale != 1.0:
        dists = [type(d)(samples=d.samples * scale,
                         meta={**d.meta, "units": cfg.units}) for d in dists]

    write_estimates_csv(out / "estimates.csv", dists, cfg.quantiles)
    write_cdf_csv(out / "cdf.csv", dists)
    write_meta_json(out / "meta.json", dists, extra={
        "seed": seed, "version": __version__, "backend": backend_name(),
    })
    ids = alpha_ids(len(cfg.alphas))
    with open(out / "precedes.csv", "w", encoding="utf-8") as fh:
        fh.write("alpha_lo,alpha_hi,precedes\n")
        for i, ai in enumerate(cfg.alphas):
            for j, aj in enumerate(cfg.alphas):
                if i == j:
                    continue
                fh.write(f"{ids[i]},{ids[j]},"
                         f"{str(precedes(ai, aj)).lower()}\n")
    print(f"estimated {len(dists)} coverage functions -> {out}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = parse_config_file(args.config)
    if cfg.functional is None or cfg.family is None or cfg.target is None:
        raise ConfigError("optimize needs functional, [family], and [target]")
    seed = _resolve_seed(cfg, args)
    out = _out_dir(cfg, args)
    query = PolicyQuery(
        family=cfg.family["kind"],
        functional=cfg.functional,
        target=cfg.target["type"],
        bound=cfg.target["bound"],
        p=cfg.target["p"],
        z=cfg.target["z"],
        ramp_delay=cfg.family["M"],
        ramp_rate=cfg.family["p0"],
        value_scale=cfg.value_scale(),
    )
    result = optimal_policy(query, cfg.law, cfg.caps, cfg.n, seed,
                            resolution=cfg.family["resolution"],
                            threads=args.threads)
    payload = {
        "feasible": result.feasible,
        "optimal_index": result.optimal_index,
        "achieved_value": result.achieved_value,
        "family": cfg.family,
        "target": cfg.target,
        "functional": str(cfg.functional),
        "units": cfg.units,
        "n": cfg.n,
        "seed": seed,
    }
    with open(out / "policy.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "grid.csv", "w", encoding="utf-8") as fh:
        fh.write("index,value\n")
        for index, value in result.grid:
            fh.write(f"{_fmt(index)},{_fmt(value)}\n")
    if not result.feasible:
        print("no policy in the family meets the bound; full grid written "
              f"to {out / 'grid.csv'}")
        return EXIT_INFEASIBLE
    print(f"optimal index {result.optimal_index:.6g} achieving "
          f"{result.achieved_value:.6g} -> {out / 'policy.json'}")
    return EXIT_OK


def cmd_infer(args) -> int:
    records = read_sizes_csv(args.sizes)
    m_hat = mle_offspring_mean(records)
    out = _out_dir(None, args)
    print(f"records: {len(records)} (sum a = {sum(r.a for r in records)}, "
          f"sum n = {sum(r.n for r in records)})")
    print(f"offspring mean MLE: {m_hat!r}")
    print(f"mean outbreak size (excluding initials): {mean_outbreak_size(m_hat)!r}")
    table = borel_tanner_table(1, m_hat)
    path = out / "borel_tanner.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,pmf\n")
        for k, p in table:
            fh.write(f"{k},{_fmt(p)}\n")
    print(f"fitted total-size pmf (a=1, {len(table)} rows) -> {path}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    series = read_weekly_csv(args.cases)
    out = _out_dir(None, args)
    records = []
    for s in series:
        records.extend(segment_outbreaks(s, gap_limit=args.gap_limit))
    kept, dropped = filter_outbreaks(records, initial_cases=args.initial_cases,
                                     max_duration_weeks=args.max_duration)
    write_outbreaks_csv(out / "outbreaks.csv", records)
    write_sizes_csv(out / "sizes.csv", size_records(kept))
    print(f"{len(records)} outbreaks from {len(series)} provinces; "
          f"kept {len(kept)} "
          f"(dropped {dropped['initial_cases']} by initial cases, "
          f"{dropped['duration']} by duration) -> {out}")
    return EXIT_OK


def cmd_coverage(args) -> int:
    hi = float("inf") if args.hi in ("inf", "Inf") else float(args.hi)
    value = gamma_coverage(args.mean, args.shape, args.lo, hi)
    print(f"{value!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmjvax",
        description="Branching-process outbreak simulation under time-dependent "
                    "vaccination: coupled pruning, quantile estimation, and "
                    "optimal coverage search.")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides the config seed)")
    parser.add_argument("--threads", type=int, default=1,
                        help="replicate worker threads (never changes output)")
    parser.add_argument("--out", type=str, default=None,
                        help="output directory (default: out)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate unvaccinated replicates")
    p.add_argument("config")
    p.add_argument("--dump-trees", action="store_true",
                   help="also write trees.jsonl")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate",
                       help="coupled Monte-Carlo estimates for listed coverages")
    p.add_argument("config")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("optimize", help="search a coverage family for the "
                                        "smallest policy meeting a bound")
    p.add_argument("config")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("infer", help="offspring-mean MLE from an a,n size CSV")
    p.add_argument("sizes")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("ingest", help="segment weekly case counts into outbreaks")
    p.add_argument("cases")
    p.add_argument("--gap-limit", type=int, default=3)
    p.add_argument("--initial-cases", type=int, default=1)
    p.add_argument("--max-duration", type=int, default=9)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("coverage", help="gamma lifetime interval probability")
    p.add_argument("mean", type=float)
    p.add_argument("shape", type=float)
    p.add_argument("lo", type=float)
    p.add_argument("hi")
    p.set_defaults(func=cmd_coverage)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExplosionRateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXPLOSION
    except CmjvaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
