"""Demand scenarios and the quantities derived from them.

Each scenario ``h`` holds a signed per-station net demand ``D[h, i]``
(positive: bikes should be delivered, negative: bikes should be picked up)
and a weight ``p[h]``. From these we derive the clamped target inventory,
the scenario intensity, the high-demand subset and its renormalized weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .instance import Instance

WEIGHT_TOL = 1e-9


class ScenarioError(ValueError):
    pass


def target_inventory(initial, capacity, demand):
    """Requested inventory ``O + D`` projected onto ``[0, L]``. Works elementwise."""
    return np.minimum(capacity, np.maximum(0, np.add(initial, demand)))


def demand_intensity(demand) -> int:
    return int(np.abs(np.asarray(demand)).sum())


def high_demand_subset(intensities, quantile: float = 0.90) -> tuple[float, np.ndarray]:
    """Nearest-rank threshold and the indices of scenarios at or above it.

    The threshold is the ``ceil(quantile * N)``-th smallest intensity, so it
    is always an observed value and the subset is never empty.
    """
    phi = np.asarray(intensities)
    n = phi.size
    if n < 1:
        raise ScenarioError("need at least one scenario")
    if not 0.0 < quantile <= 1.0:
        raise ScenarioError(f"quantile must be in (0, 1], got {quantile}")
    # round() guards against 0.9 * 10 landing a hair above 9
    rank = max(1, math.ceil(round(quantile * n, 9)))
    kappa = np.sort(phi, kind="stable")[rank - 1]
    return kappa, np.flatnonzero(phi >= kappa)


def normalize_high_demand_weights(weights, subset) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)[np.asarray(subset, dtype=np.int64)]
    if w.size == 0:
        raise ScenarioError("high-demand subset is empty")
    total = w.sum()
    if not total > 0:
        raise ScenarioError("high-demand subset has zero total weight")
    return w / total


@dataclass(frozen=True)
class Scenario:
    demand: np.ndarray
    weight: float


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """A fixed, weighted set of demand scenarios bound to one instance.

    ``demands`` has shape ``(N, S)``. All derived arrays are computed on
    construction and frozen.
    """

    demands: np.ndarray
    weights: np.ndarray
    capacities: np.ndarray
    initial: np.ndarray
    quantile: float = 0.90
    targets: np.ndarray = field(init=False, repr=False)
    intensities: np.ndarray = field(init=False, repr=False)
    percentile_threshold: float = field(init=False)
    high_demand_ids: np.ndarray = field(init=False, repr=False)
    tilde_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        D = np.array(self.demands, dtype=np.int64)
        if D.ndim != 2 or D.shape[0] < 1:
            raise ScenarioError(f"demands must be a non-empty (N, S) array, got shape {D.shape}")
        caps = np.array(self.capacities, dtype=np.int64)
        init = np.array(self.initial, dtype=np.int64)
        if D.shape[1] != caps.size or init.size != caps.size:
            raise ScenarioError(f"demand rows have length {D.shape[1]}, instance has {caps.size} stations")
        p = np.array(self.weights, dtype=np.float64)
        if p.shape != (D.shape[0],):
            raise ScenarioError(f"expected {D.shape[0]} weights, got {p.size}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ScenarioError("scenario weights must be finite and nonnegative")
        if abs(p.sum() - 1.0) > WEIGHT_TOL:
            raise ScenarioError(f"scenario weights sum to {p.sum()!r}, expected 1")

        tau = target_inventory(init[None, :], caps[None, :], D)
        phi = np.abs(D).sum(axis=1)
        kappa, ids = high_demand_subset(phi, self.quantile)
        tilde = normalize_high_demand_weights(p, ids)
        for name, arr in (("demands", D), ("weights", p), ("capacities", caps), ("initial", init),
                          ("targets", tau), ("intensities", phi), ("high_demand_ids", ids),
                          ("tilde_weights", tilde)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "percentile_threshold", kappa)

    @classmethod
    def from_demands(cls, instance: Instance, demands, weights=None, quantile: float = 0.90) -> "ScenarioSet":
        D = np.asarray(demands)
        if weights is None:
            n = D.shape[0] if D.ndim else 0
            weights = np.full(n, 1.0 / n) if n else np.zeros(0)
        return cls(D, weights, instance.capacities, instance.initial, quantile)

    def __len__(self) -> int:
        return self.demands.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ScenarioSet):
            return NotImplemented
        return (
            np.array_equal(self.demands, other.demands)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.capacities, other.capacities)
            and np.array_equal(self.initial, other.initial)
            and self.quantile == other.quantile
        )

    __hash__ = None

    @property
    def scenarios(self) -> list[Scenario]:
        return [Scenario(self.demands[h], float(self.weights[h])) for h in range(len(self))]

    def subset(self, indices) -> "ScenarioSet":
        """Scenarios at ``indices`` with weights renormalized to sum to one."""
        idx = np.asarray(indices, dtype=np.int64)
        w = self.weights[idx]
        if w.sum() <= 0:
            raise ScenarioError("selected scenarios have zero total weight")
        return ScenarioSet(self.demands[idx], w / w.sum(), self.capacities, self.initial, self.quantile)

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "demands": self.demands.tolist()}


def load_scenarios(path, instance: Instance, quantile: float = 0.90) -> ScenarioSet:
    try:
        data = json.loads(Path(path).read_text())
        demands = data["demands"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ScenarioError(f"{path}: malformed scenario file ({exc!r})") from exc
    return ScenarioSet.from_demands(instance, demands, data.get("weights"), quantile)


def save_scenarios(scenarios: ScenarioSet, path) -> None:
    Path(path).write_text(json.dumps(scenarios.to_dict()))


@dataclass(frozen=True)
class DemandModel:
    """Per-station two-sided integer demand: ``round(Normal(mean_i, spread_i))``.

    Draws are clipped to ``[-L_i, L_i]``. When ``mean``/``spread`` are left
    unset they are derived from the instance: each station gets a latent
    desired fill level ``g_i ~ U(0, 1)`` so ``mean_i = g_i * L_i - O_i``, and
    ``spread_i = dispersion * L_i``.
    """

    mean: tuple[float, ...] | None = None
    spread: tuple[float, ...] | None = None
    dispersion: float = 0.15

    def resolve(self, instance: Instance, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        caps = instance.capacities.astype(float)
        S = instance.n_stations
        if self.mean is None:
            mean = rng.uniform(0.0, 1.0, size=S) * caps - instance.initial
        else:
            mean = np.asarray(self.mean, dtype=float)
        if self.spread is None:
            if self.dispersion < 0:
                raise ScenarioError(f"dispersion must be >= 0, got {self.dispersion}")
            spread = self.dispersion * caps
        else:
            spread = np.asarray(self.spread, dtype=float)
        if mean.shape != (S,) or spread.shape != (S,):
            raise ScenarioError(f"demand model vectors must have length {S}")
        if np.any(spread < 0) or not np.all(np.isfinite(mean)):
            raise ScenarioError("demand model needs finite means and nonnegative spreads")
        return mean, spread


def sample_scenarios(
    seed: int,
    instance: Instance,
    n_scenarios: int,
    model: DemandModel | None = None,
    quantile: float = 0.90,
) -> ScenarioSet:
    if n_scenarios < 1:
        raise ScenarioError(f"n_scenarios must be >= 1, got {n_scenarios}")
    rng = np.random.default_rng(seed)
    mean, spread = (model or DemandModel()).resolve(instance, rng)
    raw = rng.normal(mean, spread, size=(n_scenarios, instance.n_stations))
    caps = instance.capacities
    D = np.clip(np.rint(raw), -caps, caps).astype(np.int64)
    return ScenarioSet.from_demands(instance, D, quantile=quantile)


def split_indices(seed: int, n: int, ratio: float = 0.8) -> tuple[np.ndarray, np.ndarray]:
    """Sorted index arrays of a random split; the first gets ``floor(ratio * n)``."""
    n_train = math.floor(round(ratio * n, 9))
    if n < 2 or n_train < 1 or n_train >= n:
        raise ScenarioError(f"cannot split {n} scenarios with ratio {ratio} into two non-empty parts")
    order = np.random.default_rng(seed).permutation(n)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def split_train_validation(seed: int, pool: ScenarioSet, ratio: float = 0.8) -> tuple[ScenarioSet, ScenarioSet]:
    train, valid = split_indices(seed, len(pool), ratio)
    return pool.subset(train), pool.subset(valid)
