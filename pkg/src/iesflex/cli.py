"""
Command-line front end.

Subcommands::

    iesflex cluster   --profiles days.csv --days 10 --output demand.csv
    iesflex plan      --config run.yaml [--export-cbf]
    iesflex evaluate  --config run.yaml --solution out/solution.csv [--samples N]
    iesflex export    --config run.yaml --output program.cbf
    iesflex desk      --output fixture/

Exit codes:

    0  success
    1  unexpected internal error
    2  configuration, ingestion or reformulation error
    3  model infeasible
    4  solver stopped at a node, time or iteration limit
    5  solution file missing or unreadable
    6  dimension mismatch

``IESFLEX_THREADS`` caps the thread pools of the numerical libraries
(default 1, which makes repeated runs byte-identical).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .config import RunConfig, load_inputs, load_run_config, write_run_config
from .conic import INFEASIBLE, OPTIMAL, UNBOUNDED, export_cbf, solve_misocp
from .exceptions import (ConfigurationError, DegenerateMomentsError, DimensionError,
                         DomainError, IesFlexError, IngestionError, ReformulationError,
                         RegionError, SolutionLoadError)

logger = logging.getLogger("iesflex")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4
EXIT_SOLUTION = 5
EXIT_DIMENSION = 6


def _exit_code(exc):
    if isinstance(exc, DimensionError):
        return EXIT_DIMENSION
    if isinstance(exc, SolutionLoadError):
        return EXIT_SOLUTION
    if isinstance(exc, (ConfigurationError, IngestionError, ReformulationError, DomainError,
                        RegionError, DegenerateMomentsError)):
        return EXIT_CONFIG
    return EXIT_INTERNAL


def _threads():
    raw = os.environ.get("IESFLEX_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"IESFLEX_THREADS={raw!r} is not an integer",
                                 "IESFLEX_THREADS") from None
    if n < 1:
        raise ConfigurationError("IESFLEX_THREADS must be >= 1", "IESFLEX_THREADS")
    return n


def _resolve_config(args):
    overrides = dict(mode=args.mode, epsilon=args.epsilon, enable_p2hh=args.enable_p2hh,
                     enable_boiler=args.enable_boiler, seed=args.seed,
                     samples=getattr(args, "samples", None), output=args.output)
    if args.config:
        return load_run_config(args.config, **overrides)
    missing = [n for n in ("parameters", "demand", "wind") if getattr(args, n) is None]
    if missing:
        raise ConfigurationError("give --config or all of --parameters/--demand/--wind",
                                 missing[0])
    base = dict(parameters=args.parameters, demand=args.demand, wind=args.wind)
    base.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**base)


def _bb_params(cfg):
    try:
        return cfg.bb_params()
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc), "solver") from None


def _header(cfg):
    return [cfg.provenance(), f"mode={cfg.mode} scenario={cfg.scenario_label}"]


def _write_summary(path, header, entries):
    """Plain ``key: value`` text, one entry per line."""
    with open(path, "w") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for k, v in entries:
            if isinstance(v, float):
                v = repr(v)
            fh.write(f"{k}: {v}\n")
    return path


def _compile(cfg):
    from .reformulate import compile_program

    inst, scen, mode = load_inputs(cfg)
    prog = compile_program(inst, mode, cfg.enable_p2hh, cfg.enable_boiler)
    return inst, scen, prog


def cmd_cluster(args):
    from .scenarios import cluster_representative_days, ingest_demand

    electric, heat = ingest_demand(args.profiles)
    profiles = np.stack([electric, heat], axis=1)
    days = cluster_representative_days(profiles, args.days, args.seed or 0)
    header = [f"iesflex {__version__} input={os.path.basename(args.profiles)} "
              f"days={args.days} seed={args.seed or 0}"]
    days.to_csv(args.output, header)
    print(f"wrote {args.output}: {days.n_days} representative days")
    return EXIT_OK


def cmd_plan(args):
    cfg = _resolve_config(args)
    params = _bb_params(cfg)
    inst, scen, prog = _compile(cfg)
    os.makedirs(cfg.output, exist_ok=True)
    header = _header(cfg)
    audit = prog.meta["audit"]
    audit.to_csv(os.path.join(cfg.output, "audit.csv"), header)
    if args.export_cbf:
        export_cbf(prog, os.path.join(cfg.output, "program.cbf"), header)
    sol = solve_misocp(prog, params)
    entries = [("status", sol.status), ("message", sol.message), ("scenario", cfg.scenario_label),
               ("mode", cfg.mode), ("epsilon", float(prog.meta["epsilon"])),
               ("safety_factor", float(prog.meta["factor"]))]
    entries += [(k, v) for k, v in prog.counts().items()]
    summary = os.path.join(cfg.output, "summary.txt")
    if sol.status in (INFEASIBLE, UNBOUNDED) or sol.x is None:
        _write_summary(summary, header, entries)
        print(f"plan: {sol.status} ({sol.message})", file=sys.stderr)
        return EXIT_INFEASIBLE if sol.status in (INFEASIBLE, UNBOUNDED) else EXIT_LIMIT
    from .evaluate import AffinePolicySolution

    policy = AffinePolicySolution.from_vector(prog, sol.x, inst)
    policy.to_csv(os.path.join(cfg.output, "solution.csv"), header)
    entries += [("annualized_cost_usd", float(sol.objective)), ("lower_bound", float(sol.bound)),
                ("nodes", sol.nodes)]
    entries += [(k, float(v)) for k, v in policy.capacities.items()]
    _write_summary(summary, header, entries)
    print(f"plan: {sol.status} cost={sol.objective:.6g} n_cells={policy.n_cells} "
          f"-> {cfg.output}")
    return EXIT_OK if sol.status == OPTIMAL else EXIT_LIMIT


def cmd_evaluate(args):
    from . import evaluate as ev
    from .scenarios import bootstrap_resample

    cfg = _resolve_config(args)
    inst, scen, mode = load_inputs(cfg)
    sol = ev.load_solution(args.solution, inst)
    samples = bootstrap_resample(scen, cfg.samples, cfg.seed)
    rep = ev.out_of_sample_violation(sol, samples, inst, include_exact=args.exact_paths)
    dispatch = ev.apply_policy(sol, samples.wind - inst.moments.mean[None], inst)
    kpi = ev.kpi_report(sol, dispatch, inst)
    profit = ev.profit_distribution(sol, dispatch, inst, args.electricity_price, args.heat_price)
    os.makedirs(cfg.output, exist_ok=True)
    header = _header(cfg)
    rep.to_csv(os.path.join(cfg.output, "violations.csv"), header)
    kpi.to_csv(os.path.join(cfg.output, "kpi.csv"), header)
    profit.to_csv(os.path.join(cfg.output, "profit.csv"), header)
    ev.write_chp_points(kpi, os.path.join(cfg.output, "chp_points.csv"), header)
    ev.write_temperature_paths(dispatch, os.path.join(cfg.output, "temperature.csv"), header)
    entries = [("samples", rep.n_samples), ("violation_fraction", rep.fraction),
               ("violation_fraction_with_exact_paths", rep.fraction_with_exact),
               ("max_temperature_deviation_C", float(dispatch.temperature_deviation.max())),
               ("max_tank_deviation_kg", float(dispatch.tank_deviation.max())),
               ("profit_wind_usd", profit.wind), ("profit_chp_usd", profit.chp),
               ("profit_investor_usd", profit.investor)]
    entries += [(k, float(v)) for k, v in kpi.rows()]
    _write_summary(os.path.join(cfg.output, "evaluation.txt"), header, entries)
    print(f"evaluate: violation fraction {rep.fraction:.4f} over {rep.n_samples} samples "
          f"-> {cfg.output}")
    return EXIT_OK


def cmd_export(args):
    cfg = _resolve_config(args)
    inst, scen, prog = _compile(cfg)
    path = args.cbf or os.path.join(cfg.output, "program.cbf")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    export_cbf(prog, path, _header(cfg))
    print(f"export: {prog.n} variables -> {path}")
    return EXIT_OK


def cmd_desk(args):
    from .desk import write_desk_fixture

    if not (1 <= args.days <= 2 and 2 <= args.hours <= 8):
        raise ConfigurationError("the desk case has 1-2 days of 2-8 hours", "days")
    paths = write_desk_fixture(args.output, args.scenarios, args.seed or 0, args.days, args.hours)
    cfg = os.path.join(args.output, "run.yaml")
    write_run_config(cfg, **{k: os.path.basename(v) for k, v in paths.items()},
                     mode="DRCC", epsilon=0.05, enable_p2hh=True, enable_boiler=True,
                     seed=0, samples=1000, output="out")
    print(f"desk fixture -> {cfg}")
    return EXIT_OK


def _samples(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    return n


def build_parser():
    ap = argparse.ArgumentParser(prog="iesflex", description=__doc__.split("\n\n")[0].strip())
    ap.add_argument("--version", action="version", version=f"iesflex {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def run_options(p):
        p.add_argument("--config", help="run configuration YAML")
        p.add_argument("--parameters")
        p.add_argument("--demand")
        p.add_argument("--wind")
        p.add_argument("--mode", choices=("DRCC", "GaussianCC"))
        p.add_argument("--epsilon", type=float)
        p.add_argument("--enable-p2hh", dest="enable_p2hh", action="store_true", default=None)
        p.add_argument("--disable-p2hh", dest="enable_p2hh", action="store_false")
        p.add_argument("--enable-boiler", dest="enable_boiler", action="store_true", default=None)
        p.add_argument("--disable-boiler", dest="enable_boiler", action="store_false")
        p.add_argument("--seed", type=int)
        p.add_argument("--output", help="output directory")

    p = sub.add_parser("cluster", help="group daily demand profiles into representative days")
    p.add_argument("--profiles", required=True, help="day,hour,electric_MW,heat_MW CSV")
    p.add_argument("--days", type=int, default=10)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", required=True, help="output CSV")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("plan", help="compile and solve the planning problem")
    run_options(p)
    p.add_argument("--export-cbf", action="store_true", help="also write program.cbf")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("evaluate", help="replay a solution against bootstrap samples")
    run_options(p)
    p.add_argument("--solution", required=True)
    p.add_argument("--samples", type=_samples)
    p.add_argument("--exact-paths", action="store_true",
                   help="count exact-recursion temperature and tank breaches as violations")
    p.add_argument("--electricity-price", type=float, default=55.0)
    p.add_argument("--heat-price", type=float, default=45.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export", help="write the compiled program in CBF")
    run_options(p)
    p.add_argument("--cbf", help="CBF path (default <output>/program.cbf)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("desk", help="write the small synthetic fixture and a run config")
    p.add_argument("--output", required=True)
    p.add_argument("--scenarios", type=int, default=200)
    p.add_argument("--days", type=int, default=2)
    p.add_argument("--hours", type=int, default=8)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_desk)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=_threads()):
            return args.func(args)
    except IesFlexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
