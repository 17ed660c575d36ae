"""Multi-run campaigns driven by a single JSON configuration document.

Layout of the output directory::

    <output>/
        config.json                 normalised copy of the configuration
        <solver>-rep<k>/            one directory per (solver, repetition)
            front.csv               training-set objectives
            front_validation.csv    same plans re-scored on held-out scenarios (when split)
            stats.csv               per-generation statistics (NSGA-II only)
            metrics.json            indicators against the pooled reference front
        pooled/
            front.csv               pooled reference front, run id per row
            metrics.json            all run reports plus per-run #nds attribution
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .baselines import DemandProxy, GlobeConfig, RrcpConfig, preset as baseline_preset, run_baseline
from .encoding import encode
from .evaluator import Evaluator
from .instance import Instance, generate_instance, load_instance
from .metrics import ArchiveEntry, FrontArchive, nds_by_label
from .nsga2 import RunConfig, default_workers, run
from .reports import campaign_metrics, write_front_csv, write_json, write_stats_csv
from .scenarios import DemandModel, ScenarioSet, load_scenarios, sample_scenarios, split_train_validation
from .variation import CROSSOVERS, DOMAIN_MUTATIONS, PERM_MUTATIONS, OperatorConfig

log = logging.getLogger(__name__)

_SEED = {"type": "integer", "minimum": 0}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}

_NSGA2 = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "type", "operator"],
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.+-]+$"},
        "type": {"const": "nsga2"},
        "operator": {"enum": list(DOMAIN_MUTATIONS)},
        "population": {"type": "integer", "minimum": 4, "multipleOf": 2},
        "generations": {"type": "integer", "minimum": 1},
        "crossover": {"enum": list(CROSSOVERS)},
        "perm_mutation": {"enum": list(PERM_MUTATIONS)},
        "pc_perm": _PROB,
        "pm_perm": _PROB,
        "pm_partition": _PROB,
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "block_length": {"type": "integer", "minimum": 1},
        "include_unvisited": {"type": "boolean"},
        "eliminate_duplicates": {"type": "boolean"},
    },
}

_BASELINE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "type", "heuristic", "preset"],
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.+-]+$"},
        "type": {"const": "baseline"},
        "heuristic": {"enum": ["RRCP-BI", "GLOBE"]},
        "preset": {"enum": ["Dist", "Serv", "SD"]},
        "m_max": {"type": "integer", "minimum": 1},
        "beta_pick": {"type": "number", "minimum": 0},
        "beta_drop": {"type": "number", "minimum": 0},
        "lam": {"type": "number", "minimum": 0},
        "d1": {"type": "number", "minimum": 0},
        "d2": {"type": "number", "minimum": 0},
        "gamma": {"type": "number", "minimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["instance", "scenarios", "solvers", "repetitions", "base_seed", "output"],
    "properties": {
        "instance": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["file"],
                 "properties": {"file": {"type": "string"}}},
                {"type": "object", "additionalProperties": False, "required": ["generate"],
                 "properties": {"generate": {
                     "type": "object", "additionalProperties": False,
                     "required": ["seed", "n_stations", "truck_count", "truck_capacity"],
                     "properties": {
                         "seed": _SEED,
                         "n_stations": {"type": "integer", "minimum": 1},
                         "truck_count": {"type": "integer", "minimum": 1},
                         "truck_capacity": {"type": "integer", "minimum": 1},
                         "side": {"type": "number", "exclusiveMinimum": 0},
                     }}}},
            ]
        },
        "scenarios": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["file"],
                 "properties": {"file": {"type": "string"}}},
                {"type": "object", "additionalProperties": False, "required": ["sample"],
                 "properties": {"sample": {
                     "type": "object", "additionalProperties": False, "required": ["seed", "n_scenarios"],
                     "properties": {
                         "seed": _SEED,
                         "n_scenarios": {"type": "integer", "minimum": 1},
                         "dispersion": {"type": "number", "minimum": 0},
                     }}}},
            ]
        },
        "split": {
            "type": "object", "additionalProperties": False, "required": ["seed"],
            "properties": {"seed": _SEED, "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        },
        "solvers": {"type": "array", "minItems": 1, "items": {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": ["nsga2", "baseline"]}},
            "allOf": [
                {"if": {"properties": {"type": {"const": "nsga2"}}}, "then": _NSGA2},
                {"if": {"properties": {"type": {"const": "baseline"}}}, "then": _BASELINE},
            ],
        }},
        "repetitions": {"type": "integer", "minimum": 1},
        "base_seed": _SEED,
        "workers": {"type": "integer", "minimum": 1},
        "output": {"type": "string"},
    },
}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _best_error(errors):
    # oneOf failures nest the useful message one level down
    err = jsonschema.exceptions.best_match(errors)
    while err.context:
        err = jsonschema.exceptions.best_match(err.context)
    return err


def validate_config(data: dict) -> None:
    errors = list(jsonschema.Draft202012Validator(SCHEMA).iter_errors(data))
    if errors:
        err = _best_error(errors)
        path = "/".join(str(p) for p in err.absolute_path)
        raise ConfigError(err.message, "/" + path)
    names = [s["name"] for s in data["solvers"]]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigError(f"duplicate solver names {dupes}", "/solvers")


@dataclass
class Experiment:
    config: dict
    base_dir: Path

    @classmethod
    def from_file(cls, path) -> "Experiment":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON ({exc.msg} at line {exc.lineno})") from exc
        validate_config(data)
        return cls(data, path.parent)

    @classmethod
    def from_dict(cls, data: dict, base_dir=".") -> "Experiment":
        validate_config(data)
        return cls(data, Path(base_dir))

    def _resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base_dir / q

    @property
    def output(self) -> Path:
        return self._resolve(self.config["output"])

    def seeds(self) -> list[int]:
        return [self.config["base_seed"] + k for k in range(self.config["repetitions"])]

    def load_instance(self) -> Instance:
        source = self.config["instance"]
        if "file" in source:
            return load_instance(self._resolve(source["file"]))
        g = dict(source["generate"])
        return generate_instance(g.pop("seed"), g.pop("n_stations"), g.pop("truck_count"), g.pop("truck_capacity"), **g)

    def load_scenarios(self, instance: Instance) -> tuple[ScenarioSet, ScenarioSet | None]:
        source = self.config["scenarios"]
        if "file" in source:
            pool = load_scenarios(self._resolve(source["file"]), instance)
        else:
            s = source["sample"]
            pool = sample_scenarios(s["seed"], instance, s["n_scenarios"], DemandModel(dispersion=s.get("dispersion", 0.15)))
        split = self.config.get("split")
        if split is None:
            return pool, None
        return split_train_validation(split["seed"], pool, split.get("ratio", 0.8))


_OPERATOR_FIELDS = ("crossover", "perm_mutation", "pc_perm", "pm_perm", "pm_partition", "epsilon",
                    "block_length", "include_unvisited")
_BASELINE_FIELDS = ("m_max", "beta_pick", "beta_drop", "lam", "d1", "d2", "gamma", "epsilon")


def nsga2_config(solver: dict, seed: int, workers: int) -> RunConfig:
    ops = OperatorConfig.preset(solver["operator"], **{k: solver[k] for k in _OPERATOR_FIELDS if k in solver})
    return RunConfig(
        population=solver.get("population", 200),
        generations=solver.get("generations", 500),
        operators=ops,
        seed=seed,
        workers=workers,
        eliminate_duplicates=solver.get("eliminate_duplicates", True),
    )


def baseline_config(solver: dict, seed: int) -> RrcpConfig | GlobeConfig:
    fields = RrcpConfig.__dataclass_fields__ if solver["heuristic"] == "RRCP-BI" else GlobeConfig.__dataclass_fields__
    overrides = {k: solver[k] for k in _BASELINE_FIELDS if k in solver}
    unknown = sorted(set(overrides) - set(fields))
    if unknown:
        raise ConfigError(f"fields {unknown} do not apply to {solver['heuristic']}", f"/solvers/{solver['name']}")
    return baseline_preset(solver["preset"], solver["heuristic"], seed=seed, **overrides)


def solve(solver: dict, instance: Instance, train: ScenarioSet, seed: int, workers: int, run_id: str):
    """Run one solver; returns ``(front archive, generation stats or None)``."""
    if solver["type"] == "nsga2":
        result = run(instance, train, nsga2_config(solver, seed, workers), label=run_id)
        return result.front, result.stats
    cfg = baseline_config(solver, seed)
    plan = run_baseline(solver["heuristic"], instance, DemandProxy.from_scenarios(instance, train), cfg)
    genome = encode(plan, instance.n_stations)
    obj = Evaluator(instance, train).evaluate(genome)
    return FrontArchive([ArchiveEntry(obj.as_tuple(), genome, run_id)]), None


def rescore(front: FrontArchive, instance: Instance, scenarios: ScenarioSet, run_id: str) -> FrontArchive:
    ev = Evaluator(instance, scenarios)
    out = FrontArchive()
    out.extend(ArchiveEntry(ev.evaluate(e.genome).as_tuple(), e.genome, run_id) for e in front)
    return out


def run_experiment(experiment: Experiment, workers: int | None = None) -> Path:
    cfg = experiment.config
    workers = workers or cfg.get("workers") or default_workers()
    out = experiment.output
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", cfg)

    instance = experiment.load_instance()
    train, valid = experiment.load_scenarios(instance)

    fronts: dict[str, FrontArchive] = {}
    valid_fronts: dict[str, FrontArchive] = {}
    for solver in cfg["solvers"]:
        for rep, seed in enumerate(experiment.seeds()):
            run_id = f"{solver['name']}-rep{rep:02d}"
            log.info("running %s (seed %d)", run_id, seed)
            front, stats = solve(solver, instance, train, seed, workers, run_id)
            rdir = out / run_id
            rdir.mkdir(exist_ok=True)
            write_front_csv(rdir / "front.csv", front, run_id)
            if stats is not None:
                write_stats_csv(rdir / "stats.csv", stats)
            fronts[run_id] = front
            if valid is not None:
                valid_fronts[run_id] = rescore(front, instance, valid, run_id)
                write_front_csv(rdir / "front_validation.csv", valid_fronts[run_id], run_id)

    pooled, reports = campaign_metrics(fronts)
    summary = {"runs": reports, "nds_by_run": nds_by_label(pooled), "nds_by_solver": _by_solver(pooled)}
    if valid_fronts:
        vpooled, vreports = campaign_metrics(valid_fronts)
        summary["validation"] = {"runs": vreports, "nds_by_solver": _by_solver(vpooled)}
        for rep in vreports:
            write_json(out / rep["run_id"] / "metrics_validation.json", rep)
    for rep in reports:
        write_json(out / rep["run_id"] / "metrics.json", rep)

    pdir = out / "pooled"
    pdir.mkdir(exist_ok=True)
    write_front_csv(pdir / "front.csv", pooled)
    write_json(pdir / "metrics.json", summary)
    return out


def _by_solver(pooled: FrontArchive) -> dict[str, int]:
    counts: dict[str, int] = {}
    for e in pooled:
        name = e.label.rsplit("-rep", 1)[0]
        counts[name] = counts.get(name, 0) + 1
    return counts

