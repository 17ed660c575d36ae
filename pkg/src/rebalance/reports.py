"""Front CSV files, metrics reports, and summary tables over fronts."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .encoding import Genome, RoutePlan, decode
from .evaluator import Evaluator, simulate_scenario
from .instance import Instance
from .metrics import (
    FrontArchive, ArchiveEntry, gd_plus, igd_plus, nds_count, reference_point_for, relative_hypervolume, spread,
)
from .nsga2 import GenerationStats
from .scenarios import ScenarioSet

FRONT_COLUMNS = ("run_id", "solution_id", "f1", "f2", "f3", "trucks_used", "genome_json")
STATS_COLUMNS = ("generation", "best_f1", "best_f2", "best_f3", "archive_size", "archive_hypervolume")


def _sorted_entries(archive: FrontArchive) -> list[ArchiveEntry]:
    return sorted(archive.entries, key=lambda e: (e.objectives, e.genome.to_json() if e.genome is not None else ""))


def write_front_csv(path, archive: FrontArchive, run_id: str | None = None) -> None:
    """One row per entry, ordered by objectives; floats use ``repr`` so they round-trip exactly.

    Without ``run_id`` each row is attributed to its entry's label.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRONT_COLUMNS)
        for k, e in enumerate(_sorted_entries(archive)):
            g: Genome = e.genome
            w.writerow([run_id or e.label, k, *(repr(float(v)) for v in e.objectives), decode(g).trucks_used, g.to_json()])


def read_front_csv(path) -> dict[str, FrontArchive]:
    """Fronts keyed by run id; each entry's label is its run id."""
    fronts: dict[str, list[ArchiveEntry]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(FRONT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            obj = (float(row["f1"]), float(row["f2"]), float(row["f3"]))
            entry = ArchiveEntry(obj, Genome.from_json(row["genome_json"]), row["run_id"])
            fronts.setdefault(row["run_id"], []).append(entry)
    out = {}
    for rid, entries in fronts.items():
        arch = FrontArchive()
        arch.extend(entries)
        out[rid] = arch
    return out


def write_stats_csv(path, stats: list[GenerationStats]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATS_COLUMNS)
        for s in stats:
            w.writerow([s.generation, repr(s.best_f1), repr(s.best_f2), repr(s.best_f3), s.archive_size,
                        repr(s.archive_hypervolume)])


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def metrics_report(run_id: str, front: FrontArchive, reference: FrontArchive, reference_point, bounds) -> dict:
    """Indicators of one run against a pooled reference front.

    GD+ and IGD+ are computed after scaling each objective by ``bounds``
    (per-objective min and max over the campaign), since distance and unmet
    demand live on very different scales.
    """
    A, Z = front.points(), reference.points()
    return {
        "run_id": run_id,
        "rhv": relative_hypervolume(A, Z, reference_point),
        "gd_plus": gd_plus(A, Z, bounds),
        "igd_plus": igd_plus(A, Z, bounds),
        "spread": spread(A),
        "nds": len(front),
        "nds_in_reference": nds_count(reference, run_id),
        "reference_point": [float(v) for v in reference_point],
        "reference_front_hash": reference.digest(),
    }


def campaign_metrics(fronts: dict[str, FrontArchive]) -> tuple[FrontArchive, list[dict]]:
    """Pool the fronts (insertion order decides credit for ties) and score every run against the pool."""
    pooled = FrontArchive()
    for rid, arch in fronts.items():
        pooled.extend(ArchiveEntry(e.objectives, e.genome, rid) for e in arch)
    allp = np.vstack([a.points() for a in fronts.values() if len(a)])
    ref_point = reference_point_for(allp)
    bounds = (allp.min(axis=0), allp.max(axis=0))
    return pooled, [metrics_report(rid, arch, pooled, ref_point, bounds) for rid, arch in fronts.items()]


def _summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"min": float(v.min()), "q1": float(q1), "median": float(med), "q3": float(q3),
            "iqr": float(q3 - q1), "max": float(v.max())}


def report_by_truck_count(archive: FrontArchive, instance: Instance, scenarios: ScenarioSet) -> list[dict]:
    """Group solutions by number of non-empty routes and summarise f1 and f2 per group.

    Objectives are re-evaluated under ``scenarios`` so the same archive can be
    summarised on training or validation scenarios.
    """
    if len(archive) == 0:
        raise ValueError("archive is empty")
    ev = Evaluator(instance, scenarios)
    groups: dict[int, list[tuple[float, float]]] = {}
    for e in archive:
        plan = decode(e.genome)
        obj = ev.evaluate_plan(plan)
        groups.setdefault(plan.trucks_used, []).append((obj.f1, obj.f2))
    out = []
    for trucks in sorted(groups):
        vals = np.array(groups[trucks])
        out.append({"trucks": trucks, "count": len(vals), "f1": _summary(vals[:, 0]), "f2": _summary(vals[:, 1])})
    return out


def _histogram(values) -> list[int]:
    v = np.rint(np.asarray(values)).astype(np.int64)
    return np.bincount(v, minlength=1).tolist()


def report_station_shortfall(plan: RoutePlan, instance: Instance, targets) -> dict:
    """Counts of stations by unmet demand (bucket ``k`` holds stations with ``U = k``) for one scenario.

    ``targets`` are the scenario's target inventories. The no-rebalancing
    histogram comes from the empty plan, whose residuals are ``|target - O|``.
    """
    res = simulate_scenario(plan, instance, targets)
    empty = simulate_scenario(RoutePlan.empty(instance.n_stations, instance.truck_count), instance, targets)
    return {"plan": _histogram(res.unmet), "no_rebalancing": _histogram(empty.unmet),
            "unmet_total": int(res.total), "no_rebalancing_total": int(empty.total)}
