"""Recourse simulation and the three objectives.

Each truck starts empty at the depot and visits its route in order. At a
station the desired change is ``tau - s``; the executed transfer is that
value clamped to what the truck load and the dock capacity allow, and the
residual is the station's unmet demand. Unvisited stations keep their
initial stock. Because every station is on at most one route, trucks are
simulated one after another without any loss of generality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .encoding import Genome, RoutePlan, route_distance
from .instance import Instance
from .scenarios import ScenarioSet


class SimulationFault(RuntimeError):
    """Stock or load left its bounds: a bug, never a domain condition."""


@numba.njit(cache=True)
def _simulate(perm, bounds, initial, capacity, truck_capacity, targets, unmet, transfers):
    # unmet/transfers: (N, S) outputs. Returns 0 on success, 1 on a bound breach.
    n_scen, n_st = targets.shape
    n_trucks = bounds.size - 2
    for h in range(n_scen):
        for i in range(n_st):
            unmet[h, i] = abs(targets[h, i] - initial[i])
            transfers[h, i] = 0
        for t in range(n_trucks):
            load = 0
            for k in range(bounds[t], bounds[t + 1]):
                i = perm[k]
                stock = initial[i]
                delta = targets[h, i] - stock
                lo = -min(truck_capacity - load, stock)
                hi = min(load, capacity[i] - stock)
                y = delta
                if y < lo:
                    y = lo
                elif y > hi:
                    y = hi
                stock += y
                load -= y
                if stock < 0 or stock > capacity[i] or load < 0 or load > truck_capacity:
                    return 1
                unmet[h, i] = abs(delta - y)
                transfers[h, i] = y
    return 0


@numba.njit(cache=True)
def _distance(perm, bounds, d):
    total = 0.0
    for t in range(bounds.size - 2):
        a, b = bounds[t], bounds[t + 1]
        if b > a:
            route = 0.0
            prev = 0
            for k in range(a, b):
                nxt = perm[k] + 1
                route += d[prev, nxt]
                prev = nxt
            route += d[prev, 0]
            total += route
    return total


@dataclass(frozen=True)
class Objectives:
    f1: float
    f2: float
    f3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.f1, self.f2, self.f3)

    def __iter__(self):
        return iter(self.as_tuple())


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    """Per-station unmet demand ``unmet[i]`` and executed transfer ``transfers[i]`` for one scenario.

    ``transfers`` is positive for deliveries, negative for pickups and zero at
    unvisited stations.
    """

    unmet: np.ndarray
    transfers: np.ndarray

    @property
    def total(self) -> int:
        return int(self.unmet.sum())


def _plan_arrays(plan: RoutePlan, n_stations: int) -> tuple[np.ndarray, np.ndarray]:
    visited = plan.visited()
    seen = set(visited)
    perm = np.array(visited + [s for s in range(n_stations) if s not in seen], dtype=np.int64)
    bounds = np.concatenate(([0], np.cumsum([len(r) for r in plan.routes]), [n_stations])).astype(np.int64)
    return perm, bounds


def _run(perm, bounds, instance: Instance, targets: np.ndarray):
    targets = np.ascontiguousarray(targets, dtype=np.int64)
    unmet = np.empty(targets.shape, dtype=np.int64)
    transfers = np.empty(targets.shape, dtype=np.int64)
    status = _simulate(perm, bounds, instance.initial, instance.capacities,
                       instance.truck_capacity, targets, unmet, transfers)
    if status:
        raise SimulationFault("stock or truck load left its bounds during simulation")
    return unmet, transfers


def simulate_scenario(plan: RoutePlan, instance: Instance, targets) -> ScenarioResult:
    """Run the recourse policy for one scenario given its target inventories."""
    perm, bounds = _plan_arrays(plan, instance.n_stations)
    unmet, transfers = _run(perm, bounds, instance, np.asarray(targets).reshape(1, -1))
    return ScenarioResult(unmet[0], transfers[0])


def objective_distance(plan: RoutePlan, distances) -> float:
    return float(sum(route_distance(r, distances) for r in plan.routes))


def _weighted(totals: np.ndarray, scenarios: ScenarioSet) -> tuple[float, float]:
    f2 = float(np.dot(scenarios.weights, totals))
    f3 = float(np.dot(scenarios.tilde_weights, totals[scenarios.high_demand_ids]))
    return f2, f3


def scenario_totals(plan: RoutePlan, instance: Instance, scenarios: ScenarioSet) -> np.ndarray:
    perm, bounds = _plan_arrays(plan, instance.n_stations)
    unmet, _ = _run(perm, bounds, instance, scenarios.targets)
    return unmet.sum(axis=1)


def objective_unmet(plan: RoutePlan, instance: Instance, scenarios: ScenarioSet) -> float:
    return _weighted(scenario_totals(plan, instance, scenarios), scenarios)[0]


def objective_unmet_high(plan: RoutePlan, instance: Instance, scenarios: ScenarioSet) -> float:
    return _weighted(scenario_totals(plan, instance, scenarios), scenarios)[1]


class Evaluator:
    """Evaluates genomes against one instance and a fixed scenario set.

    Pure and reentrant: it holds only read-only arrays.
    """

    def __init__(self, instance: Instance, scenarios: ScenarioSet):
        if scenarios.demands.shape[1] != instance.n_stations:
            raise ValueError("scenario set does not match the instance's station count")
        self.instance = instance
        self.scenarios = scenarios
        self._targets = np.ascontiguousarray(scenarios.targets, dtype=np.int64)

    def _arrays(self, genome: Genome):
        genome.validate(self.instance.n_stations, self.instance.truck_count)
        return genome.perm, genome.bounds().astype(np.int64)

    def evaluate(self, genome: Genome) -> Objectives:
        perm, bounds = self._arrays(genome)
        unmet, _ = _run(perm, bounds, self.instance, self._targets)
        f2, f3 = _weighted(unmet.sum(axis=1), self.scenarios)
        return Objectives(float(_distance(perm, bounds, self.instance.distances)), f2, f3)

    def evaluate_detail(self, genome: Genome) -> tuple[Objectives, np.ndarray, np.ndarray]:
        """Objectives plus the ``(N, S)`` unmet and transfer matrices."""
        perm, bounds = self._arrays(genome)
        unmet, transfers = _run(perm, bounds, self.instance, self._targets)
        f2, f3 = _weighted(unmet.sum(axis=1), self.scenarios)
        return Objectives(float(_distance(perm, bounds, self.instance.distances)), f2, f3), unmet, transfers

    def evaluate_plan(self, plan: RoutePlan) -> Objectives:
        perm, bounds = _plan_arrays(plan, self.instance.n_stations)
        unmet, _ = _run(perm, bounds, self.instance, self._targets)
        f2, f3 = _weighted(unmet.sum(axis=1), self.scenarios)
        return Objectives(float(_distance(perm, bounds, self.instance.distances)), f2, f3)

    def __call__(self, genome: Genome) -> Objectives:
        return self.evaluate(genome)


def evaluate(genome: Genome, instance: Instance, scenarios: ScenarioSet) -> Objectives:
    return Evaluator(instance, scenarios).evaluate(genome)
