"""Command-line entry point.

Every subcommand exits 0 on success. On failure it prints a single JSON
object ``{"error": <kind>, "message": <text>}`` to stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import baselines
from .encoding import Genome, decode, encode
from .evaluator import Evaluator
from .experiment import Experiment, nsga2_config, run_experiment
from .instance import generate_instance, load_instance, save_instance
from .metrics import FrontArchive
from .nsga2 import default_workers, run
from .reports import (
    campaign_metrics, read_front_csv, report_by_truck_count, report_station_shortfall, write_front_csv, write_json,
    write_stats_csv,
)
from .scenarios import DemandModel, load_scenarios, sample_scenarios, save_scenarios
from .variation import CROSSOVERS, DOMAIN_MUTATIONS, PERM_MUTATIONS


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}")


def _add_problem(p):
    p.add_argument("--instance", required=True, help="instance JSON")
    p.add_argument("--scenarios", required=True, help="scenario set JSON")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rebalance", description="Stochastic multi-objective bike rebalancing.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-instance", help="generate a random Euclidean instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stations", type=int, required=True)
    p.add_argument("--trucks", type=int, required=True)
    p.add_argument("--capacity", type=int, required=True, help="truck capacity")
    p.add_argument("--side", type=float, default=1000.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gen-scenarios", help="sample a demand scenario set")
    p.add_argument("--instance", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--dispersion", type=float, default=0.15)
    p.add_argument("--out", required=True)

    p = sub.add_parser("optimize", help="run NSGA-II and write the final front")
    _add_problem(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--operator", choices=DOMAIN_MUTATIONS, default="BB1-MAX")
    p.add_argument("--population", type=int, default=200)
    p.add_argument("--generations", type=int, default=500)
    p.add_argument("--crossover", choices=CROSSOVERS)
    p.add_argument("--perm-mutation", choices=PERM_MUTATIONS)
    p.add_argument("--pc-perm", type=float)
    p.add_argument("--pm-perm", type=float)
    p.add_argument("--pm-partition", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--block-length", type=int)
    p.add_argument("--exclude-unvisited", action="store_true", help="keep domain mutations between truck routes")
    p.add_argument("--keep-duplicates", action="store_true", help="disable duplicate-plan elimination")
    p.add_argument("--workers", type=int, help="evaluation processes (default: $REBALANCE_WORKERS or 1)")
    p.add_argument("--run-id")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("baseline", help="build one plan with RRCP-BI or GLOBE")
    _add_problem(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--heuristic", choices=("RRCP-BI", "GLOBE"), required=True)
    p.add_argument("--preset", choices=tuple(baselines.PRESET_MODES), default="SD")
    for name in ("m_max",):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
    for name in ("beta_pick", "beta_drop", "lam", "d1", "d2", "gamma", "epsilon"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    p.add_argument("--run-id")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("metrics", help="score fronts against their pooled reference front")
    p.add_argument("fronts", nargs="+", help="front CSV files")
    p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("report", help="per-truck-count summary and station shortfall histogram")
    _add_problem(p)
    p.add_argument("--front", required=True, help="front CSV")
    p.add_argument("--solution", type=int, help="solution_id for the shortfall histogram")
    p.add_argument("--scenario-index", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("experiment", help="run a campaign from a JSON configuration")
    p.add_argument("config")
    p.add_argument("--workers", type=int)
    return ap


def _emit(data, out):
    if out:
        write_json(out, data)
    else:
        print(json.dumps(data, indent=2, sort_keys=True))


def _workers(args) -> int:
    w = args.workers if args.workers is not None else default_workers()
    if w < 1:
        raise CliError(f"--workers must be >= 1, got {w}")
    return w


def cmd_gen_instance(args):
    inst = generate_instance(args.seed, args.stations, args.trucks, args.capacity, side=args.side)
    save_instance(inst, args.out)


def cmd_gen_scenarios(args):
    inst = load_instance(args.instance)
    save_scenarios(sample_scenarios(args.seed, inst, args.count, DemandModel(dispersion=args.dispersion)), args.out)


def cmd_optimize(args):
    inst = load_instance(args.instance)
    ss = load_scenarios(args.scenarios, inst)
    solver = {"operator": args.operator, "population": args.population, "generations": args.generations,
              "eliminate_duplicates": not args.keep_duplicates}
    for k in ("crossover", "perm_mutation", "pc_perm", "pm_perm", "pm_partition", "epsilon", "block_length"):
        if getattr(args, k) is not None:
            solver[k] = getattr(args, k)
    if args.exclude_unvisited:
        solver["include_unvisited"] = False
    run_id = args.run_id or f"{args.operator}-seed{args.seed}"
    result = run(inst, ss, nsga2_config(solver, args.seed, _workers(args)), label=run_id)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_front_csv(out / "front.csv", result.front, run_id)
    write_stats_csv(out / "stats.csv", result.stats)


def cmd_baseline(args):
    inst = load_instance(args.instance)
    ss = load_scenarios(args.scenarios, inst)
    overrides = {k: getattr(args, k) for k in ("m_max", "beta_pick", "beta_drop", "lam", "d1", "d2", "gamma", "epsilon")
                 if getattr(args, k) is not None}
    fields = (baselines.RrcpConfig if args.heuristic == "RRCP-BI" else baselines.GlobeConfig).__dataclass_fields__
    bad = sorted(set(overrides) - set(fields))
    if bad:
        raise CliError(f"options {bad} do not apply to {args.heuristic}")
    cfg = baselines.preset(args.preset, args.heuristic, seed=args.seed, **overrides)
    plan = baselines.run_baseline(args.heuristic, inst, baselines.DemandProxy.from_scenarios(inst, ss), cfg)
    genome = encode(plan, inst.n_stations)
    obj = Evaluator(inst, ss).evaluate(genome)
    run_id = args.run_id or f"{args.heuristic}_{args.preset}-seed{args.seed}"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    arch = FrontArchive()
    arch.insert(obj.as_tuple(), genome, run_id)
    write_front_csv(out / "front.csv", arch, run_id)
    write_json(out / "plan.json", {"routes": [list(r) for r in plan.routes], "unvisited": list(plan.unvisited),
                                   "objectives": list(obj.as_tuple())})


def cmd_metrics(args):
    fronts: dict[str, FrontArchive] = {}
    for path in args.fronts:
        for rid, arch in read_front_csv(path).items():
            if rid in fronts:
                raise CliError(f"run id {rid!r} appears in more than one input")
            fronts[rid] = arch
    pooled, reports = campaign_metrics(fronts)
    _emit({"runs": reports, "reference_size": len(pooled)}, args.out)


def cmd_report(args):
    inst = load_instance(args.instance)
    ss = load_scenarios(args.scenarios, inst)
    fronts = read_front_csv(args.front)
    merged = FrontArchive()
    for arch in fronts.values():
        merged.extend(arch.entries)
    data = {"by_truck_count": report_by_truck_count(merged, inst, ss)}
    if args.solution is not None:
        rows = _rows_by_solution(args.front)
        if args.solution not in rows:
            raise CliError(f"no solution_id {args.solution} in {args.front}")
        if not 0 <= args.scenario_index < len(ss):
            raise CliError(f"scenario index {args.scenario_index} out of range (0..{len(ss) - 1})")
        plan = decode(rows[args.solution])
        data["shortfall"] = report_station_shortfall(plan, inst, ss.targets[args.scenario_index])
    _emit(data, args.out)


def _rows_by_solution(path) -> dict[int, Genome]:
    with open(path, newline="") as fh:
        return {int(r["solution_id"]): Genome.from_json(r["genome_json"]) for r in csv.DictReader(fh)}


def cmd_experiment(args):
    exp = Experiment.from_file(args.config)
    workers = _workers(args) if args.workers is not None else None
    print(str(run_experiment(exp, workers)))


COMMANDS = {
    "gen-instance": cmd_gen_instance,
    "gen-scenarios": cmd_gen_scenarios,
    "optimize": cmd_optimize,
    "baseline": cmd_baseline,
    "metrics": cmd_metrics,
    "report": cmd_report,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(asctime)s %(name)s %(levelname)s %(message)s")
        COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error document
        kind = "usage" if isinstance(exc, CliError) else type(exc).__name__
        print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
        return 2 if kind == "usage" else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
