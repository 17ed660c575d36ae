"""Static problem data: stations, depot, distance matrix and fleet.

Matrix index 0 is the depot; station ``i`` (0-based id) lives at matrix
index ``i + 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra


class InstanceError(ValueError):
    """Raised for malformed or inconsistent instance data."""


@dataclass(frozen=True)
class Station:
    id: int
    dock_capacity: int
    initial_stock: int

    def __post_init__(self):
        if self.dock_capacity < 0:
            raise InstanceError(f"station {self.id}: negative dock capacity {self.dock_capacity}")
        if not 0 <= self.initial_stock <= self.dock_capacity:
            raise InstanceError(
                f"station {self.id}: initial stock {self.initial_stock} outside [0, {self.dock_capacity}]"
            )


@dataclass(frozen=True, eq=False)
class Instance:
    stations: tuple[Station, ...]
    truck_count: int
    truck_capacity: int
    distances: np.ndarray
    capacities: np.ndarray = field(init=False, repr=False)
    initial: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        stations = tuple(self.stations)
        object.__setattr__(self, "stations", stations)
        if self.truck_count < 1:
            raise InstanceError(f"truck_count must be >= 1, got {self.truck_count}")
        if self.truck_capacity < 1:
            raise InstanceError(f"truck_capacity must be >= 1, got {self.truck_capacity}")
        for idx, st in enumerate(stations):
            if st.id != idx:
                raise InstanceError(f"station at position {idx} has id {st.id}")

        d = np.array(self.distances, dtype=np.float64)
        n = len(stations) + 1
        if d.shape != (n, n):
            raise InstanceError(f"distance matrix has shape {d.shape}, expected {(n, n)}")
        if not np.all(np.isfinite(d)):
            raise InstanceError("distance matrix contains non-finite entries")
        if np.any(d < 0):
            r, c = map(int, np.argwhere(d < 0)[0])
            raise InstanceError(f"negative distance d[{r}][{c}] = {d[r, c]}")
        if np.any(np.diag(d) != 0):
            v = int(np.flatnonzero(np.diag(d) != 0)[0])
            raise InstanceError(f"nonzero diagonal entry d[{v}][{v}] = {d[v, v]}")
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)

        caps = np.array([s.dock_capacity for s in stations], dtype=np.int64)
        init = np.array([s.initial_stock for s in stations], dtype=np.int64)
        caps.setflags(write=False)
        init.setflags(write=False)
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "initial", init)

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.stations == other.stations
            and self.truck_count == other.truck_count
            and self.truck_capacity == other.truck_capacity
            and np.array_equal(self.distances, other.distances)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "truck_count": self.truck_count,
            "truck_capacity": self.truck_capacity,
            "stations": [{"capacity": s.dock_capacity, "initial": s.initial_stock} for s in self.stations],
            "distances": self.distances.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        try:
            stations = tuple(
                Station(i, int(s["capacity"]), int(s["initial"])) for i, s in enumerate(data["stations"])
            )
            return cls(stations, int(data["truck_count"]), int(data["truck_capacity"]), data["distances"])
        except (KeyError, TypeError) as exc:
            raise InstanceError(f"malformed instance data: {exc!r}") from exc
        except ValueError as exc:
            if isinstance(exc, InstanceError):
                raise
            raise InstanceError(f"malformed instance data: {exc}") from exc


def load_instance(path) -> Instance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise InstanceError(f"{path}: top-level JSON value must be an object")
    return Instance.from_dict(data)


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict()))


@dataclass(frozen=True)
class EdgeListGraph:
    """Weighted directed street graph with the depot and stations mapped to nodes."""

    nodes: int
    edges: tuple[tuple[int, int, float], ...]
    depot: int
    station_nodes: tuple[int, ...]

    @classmethod
    def from_dict(cls, data: dict) -> "EdgeListGraph":
        try:
            edges = tuple((int(u), int(v), float(w)) for u, v, w in data["edges"])
            return cls(int(data["nodes"]), edges, int(data["depot"]), tuple(int(s) for s in data["station_nodes"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceError(f"malformed graph data: {exc!r}") from exc


def load_graph(path) -> EdgeListGraph:
    return EdgeListGraph.from_dict(json.loads(Path(path).read_text()))


def distances_from_graph(g: EdgeListGraph) -> np.ndarray:
    """All-pairs shortest-path distances among ``[depot, *station_nodes]``.

    Parallel edges collapse to their minimum weight. Raises
    :class:`InstanceError` if some mapped node cannot reach another.
    """
    mapped = [g.depot, *g.station_nodes]
    for node in mapped:
        if not 0 <= node < g.nodes:
            raise InstanceError(f"mapped node {node} outside [0, {g.nodes})")
    best: dict[tuple[int, int], float] = {}
    for u, v, w in g.edges:
        if not (0 <= u < g.nodes and 0 <= v < g.nodes):
            raise InstanceError(f"edge ({u}, {v}) references a node outside [0, {g.nodes})")
        if not (w >= 0 and np.isfinite(w)):
            raise InstanceError(f"edge ({u}, {v}) has invalid weight {w}")
        if u != v and w < best.get((u, v), np.inf):
            best[(u, v)] = w

    if best:
        rows, cols = zip(*best)
        weights = list(best.values())
    else:
        rows, cols, weights = (), (), ()
    # csgraph treats explicit zeros in sparse input as edges.
    graph = csr_matrix((np.asarray(weights, dtype=float), (rows, cols)), shape=(g.nodes, g.nodes))
    full = dijkstra(graph, directed=True, indices=mapped)
    d = full[:, mapped]
    if not np.all(np.isfinite(d)):
        a, b = map(int, np.argwhere(~np.isfinite(d))[0])
        raise InstanceError(f"node {mapped[b]} unreachable from node {mapped[a]}")
    np.fill_diagonal(d, 0.0)
    return d


def generate_instance(
    seed: int,
    n_stations: int,
    truck_count: int,
    truck_capacity: int,
    *,
    side: float = 1000.0,
    capacity_range: tuple[int, int] = (15, 40),
    fill_range: tuple[float, float] = (0.0, 1.0),
    depot_xy: tuple[float, float] | None = None,
) -> Instance:
    """Random Euclidean instance in a ``side`` x ``side`` square.

    Dock capacities are uniform integers in ``capacity_range``; the initial
    stock is ``round(f * L)`` with ``f`` uniform in ``fill_range``. The depot
    sits at the square's centre unless ``depot_xy`` is given.
    """
    if n_stations < 1 or truck_count < 1 or truck_capacity < 1:
        raise InstanceError("n_stations, truck_count and truck_capacity must all be >= 1")
    lo, hi = capacity_range
    if not 0 <= lo <= hi:
        raise InstanceError(f"invalid capacity_range {capacity_range}")
    flo, fhi = fill_range
    if not 0.0 <= flo <= fhi <= 1.0:
        raise InstanceError(f"invalid fill_range {fill_range}")
    if side <= 0:
        raise InstanceError(f"side must be positive, got {side}")

    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, side, size=(n_stations, 2))
    depot = np.array(depot_xy if depot_xy is not None else (side / 2, side / 2), dtype=float)
    pts = np.vstack([depot, xy])
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.sqrt((diff**2).sum(axis=-1))
    np.fill_diagonal(d, 0.0)

    caps = rng.integers(lo, hi + 1, size=n_stations)
    fill = rng.uniform(flo, fhi, size=n_stations)
    init = np.minimum(np.rint(fill * caps).astype(np.int64), caps)
    stations = tuple(Station(i, int(caps[i]), int(init[i])) for i in range(n_stations))
    return Instance(stations, truck_count, truck_capacity, d)
