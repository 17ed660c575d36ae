"""(mu + lambda) NSGA-II over permutation-partition genomes.

The master process owns all randomness (selection and variation). Fitness
evaluation is pure and may fan out to worker processes; results come back
positionally, so the trajectory does not depend on the worker count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .encoding import Genome, random_genome
from .evaluator import Evaluator, Objectives
from .instance import Instance
from .metrics import ArchiveEntry, FrontArchive, dominates, hypervolume
from .scenarios import ScenarioSet
from .variation import OperatorConfig, crossover, mutate_domain, mutate_perm

log = logging.getLogger(__name__)

WORKERS_ENV = "REBALANCE_WORKERS"

__all__ = [
    "Individual", "RunConfig", "RunResult", "GenerationStats", "dominates",
    "non_dominated_sort", "crowding_distance", "run",
]


@dataclass
class Individual:
    genome: Genome
    objectives: Objectives | None = None
    rank: int = -1
    crowding: float = 0.0

    @property
    def key(self) -> bytes:
        return plan_key(self.genome)


def plan_key(genome: Genome) -> bytes:
    """Identity of the decoded plan: the routed prefix of perm plus the route lengths."""
    routed = int(genome.seg_lengths[:-1].sum())
    return genome.perm[:routed].tobytes() + b"|" + genome.seg_lengths[:-1].tobytes()


@dataclass(frozen=True)
class RunConfig:
    population: int = 200
    generations: int = 500
    operators: OperatorConfig = field(default_factory=OperatorConfig)
    seed: int = 0
    workers: int = 1
    eliminate_duplicates: bool = True
    track_hypervolume: bool = True

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ValueError(f"population must be even and >= 4, got {self.population}")
        if self.generations < 1:
            raise ValueError(f"generations must be >= 1, got {self.generations}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_f1: float
    best_f2: float
    best_f3: float
    archive_size: int
    archive_hypervolume: float


@dataclass
class RunResult:
    front: FrontArchive
    population: list[Individual]
    stats: list[GenerationStats]
    hv_reference_point: tuple[float, float, float] | None = None


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


# -- sorting and density ------------------------------------------------------

def non_dominated_sort(points) -> list[list[int]]:
    """Fronts as lists of indices into ``points``, best front first."""
    P = np.asarray(points, dtype=float)
    n = P.shape[0]
    if n == 0:
        return []
    le = np.all(P[:, None, :] <= P[None, :, :], axis=2)
    lt = np.any(P[:, None, :] < P[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(count == 0)
    while current.size:
        fronts.append(current.tolist())
        count = count - dom[current].sum(axis=0)
        count[current] = -1
        current = np.flatnonzero(count == 0)
    return fronts


def crowding_distance(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    n, m = P.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(P[:, k], kind="stable")
        vals = P[order, k]
        span = vals[-1] - vals[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0:
            dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return dist


def assign_rank_and_crowding(pop: list[Individual]) -> list[list[int]]:
    pts = np.array([ind.objectives.as_tuple() for ind in pop])
    fronts = non_dominated_sort(pts)
    for r, front in enumerate(fronts):
        cd = crowding_distance(pts[front])
        for idx, c in zip(front, cd):
            pop[idx].rank = r
            pop[idx].crowding = float(c)
    return fronts


def environmental_selection(pop: list[Individual], mu: int) -> list[Individual]:
    fronts = assign_rank_and_crowding(pop)
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= mu:
            chosen.extend(front)
            continue
        # stable on index so equal crowding resolves deterministically
        rest = sorted(front, key=lambda i: (-pop[i].crowding, i))
        chosen.extend(rest[: mu - len(chosen)])
        break
    return [pop[i] for i in chosen]


def tournament(pop: list[Individual], rng: np.random.Generator) -> Individual:
    i, j = (int(x) for x in rng.choice(len(pop), size=2, replace=False))
    a, b = pop[i], pop[j]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    return a if a.crowding >= b.crowding else b


# -- evaluation fan-out -------------------------------------------------------

_worker_evaluator: Evaluator | None = None


def _init_worker(instance, scenarios):
    global _worker_evaluator
    _worker_evaluator = Evaluator(instance, scenarios)


def _eval_chunk(genomes):
    return [_worker_evaluator.evaluate(g) for g in genomes]


class PopulationEvaluator:
    """Evaluates lists of genomes in order, optionally across processes."""

    def __init__(self, instance: Instance, scenarios: ScenarioSet, workers: int = 1):
        self.evaluator = Evaluator(instance, scenarios)
        self.workers = workers
        self._pool = None
        if workers > 1:
            self._pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(instance, scenarios))

    def __call__(self, genomes: list[Genome]) -> list[Objectives]:
        if self._pool is None or len(genomes) < 2:
            return [self.evaluator.evaluate(g) for g in genomes]
        size = -(-len(genomes) // self.workers)
        chunks = [genomes[k:k + size] for k in range(0, len(genomes), size)]
        return [obj for part in self._pool.map(_eval_chunk, chunks) for obj in part]

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# -- main loop ----------------------------------------------------------------

def _make_offspring(pop, n_children, rng, ops: OperatorConfig, distances):
    children = []
    while len(children) < n_children:
        p1, p2 = tournament(pop, rng), tournament(pop, rng)
        if rng.random() < ops.pc_perm:
            c1, c2 = crossover(ops.crossover, p1.genome.perm, p2.genome.perm, rng)
        else:
            c1, c2 = p1.genome.perm, p2.genome.perm
        for perm, parent in ((c1, p1), (c2, p2)):
            if rng.random() < ops.pm_perm:
                perm = mutate_perm(ops.perm_mutation, perm, rng, ops.block_length)
            g = Genome(perm, parent.genome.seg_lengths)
            if ops.domain_mutation is not None and rng.random() < ops.pm_partition:
                g = mutate_domain(ops.domain_mutation, g, rng, ops, distances)
            children.append(g)
    return children[:n_children]


def _unique_offspring(pop, n_children, rng, ops, distances, max_rounds=20):
    seen = {ind.key for ind in pop}
    out: list[Genome] = []
    for _ in range(max_rounds):
        for g in _make_offspring(pop, n_children - len(out), rng, ops, distances):
            k = plan_key(g)
            if k not in seen:
                seen.add(k)
                out.append(g)
        if len(out) == n_children:
            return out
    # population has collapsed; accept duplicates to keep the size fixed
    out += _make_offspring(pop, n_children - len(out), rng, ops, distances)
    return out


def _first_front(pop: list[Individual]) -> list[Individual]:
    return [ind for ind in pop if ind.rank == 0]


def run(instance: Instance, scenarios: ScenarioSet, config: RunConfig, label: str = "nsga2",
        callback=None) -> RunResult:
    """Evolve a population and return its final first front.

    ``callback(generation, population)`` is invoked after every generation.
    """
    rng = np.random.default_rng(config.seed)
    ops = config.operators
    mu = config.population
    S, T = instance.n_stations, instance.truck_count
    distances = instance.distances

    with PopulationEvaluator(instance, scenarios, config.workers) as evaluate:
        genomes: list[Genome] = []
        seen: set[bytes] = set()
        attempts = 0
        while len(genomes) < mu:
            g = random_genome(rng, S, T)
            attempts += 1
            k = plan_key(g)
            if config.eliminate_duplicates and k in seen and attempts < 50 * mu:
                continue
            seen.add(k)
            genomes.append(g)
        pop = [Individual(g, o) for g, o in zip(genomes, evaluate(genomes))]
        assign_rank_and_crowding(pop)

        archive = FrontArchive()
        archive.extend(ArchiveEntry(ind.objectives.as_tuple(), ind.genome, label) for ind in _first_front(pop))
        hv_ref = None
        if config.track_hypervolume:
            empty = evaluate([Genome(np.arange(S), [0] * T + [S])])[0]
            worst_f1 = max(ind.objectives.f1 for ind in pop)
            hv_ref = tuple(float(v * 1.01) if v > 0 else 1.0 for v in (worst_f1, empty.f2, empty.f3))

        stats: list[GenerationStats] = []
        for gen in range(1, config.generations + 1):
            if config.eliminate_duplicates:
                kids = _unique_offspring(pop, mu, rng, ops, distances)
            else:
                kids = _make_offspring(pop, mu, rng, ops, distances)
            offspring = [Individual(g, o) for g, o in zip(kids, evaluate(kids))]
            pop = environmental_selection(pop + offspring, mu)
            assign_rank_and_crowding(pop)

            archive.extend(ArchiveEntry(ind.objectives.as_tuple(), ind.genome, label) for ind in _first_front(pop))
            pts = np.array([ind.objectives.as_tuple() for ind in pop])
            hv = hypervolume(archive.points(), hv_ref) if hv_ref is not None else float("nan")
            stats.append(GenerationStats(gen, *pts.min(axis=0).tolist(), len(archive), hv))
            if callback is not None:
                callback(gen, pop)
            if gen % 50 == 0:
                log.debug("generation %d: archive %d, hv %.6g", gen, len(archive), hv)

    front = FrontArchive()
    front.extend(ArchiveEntry(ind.objectives.as_tuple(), ind.genome, label) for ind in _first_front(pop))
    return RunResult(front, pop, stats, hv_ref)
