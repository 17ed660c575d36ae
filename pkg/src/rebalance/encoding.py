"""Permutation-partition genomes and their decoding into truck routes.

A genome is a station permutation plus ``T + 1`` segment lengths. The first
``T`` segments are truck routes in visiting order; the last collects the
unvisited stations. Any nonnegative lengths summing to ``S`` are feasible, so
operators never need a repair step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class GenomeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Genome:
    perm: np.ndarray
    seg_lengths: np.ndarray

    def __post_init__(self):
        perm = np.array(self.perm, dtype=np.int64)
        seg = np.array(self.seg_lengths, dtype=np.int64)
        perm.setflags(write=False)
        seg.setflags(write=False)
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "seg_lengths", seg)

    @property
    def n_stations(self) -> int:
        return self.perm.size

    @property
    def truck_count(self) -> int:
        return self.seg_lengths.size - 1

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return np.array_equal(self.perm, other.perm) and np.array_equal(self.seg_lengths, other.seg_lengths)

    def __hash__(self):
        return hash((self.perm.tobytes(), self.seg_lengths.tobytes()))

    def __repr__(self):
        return f"Genome(perm={self.perm.tolist()}, seg_lengths={self.seg_lengths.tolist()})"

    def bounds(self) -> np.ndarray:
        """Segment start offsets; segment ``k`` is ``perm[b[k]:b[k+1]]``."""
        return np.concatenate(([0], np.cumsum(self.seg_lengths)))

    def segment(self, k: int) -> np.ndarray:
        b = self.bounds()
        return self.perm[b[k]:b[k + 1]]

    def validate(self, n_stations: int | None = None, truck_count: int | None = None) -> None:
        S = self.perm.size
        if n_stations is not None and S != n_stations:
            raise GenomeError(f"perm has length {S}, expected {n_stations}")
        if truck_count is not None and self.seg_lengths.size != truck_count + 1:
            raise GenomeError(f"expected {truck_count + 1} segments, got {self.seg_lengths.size}")
        if self.seg_lengths.size < 1:
            raise GenomeError("genome needs at least the unvisited segment")
        if np.any(self.seg_lengths < 0):
            raise GenomeError(f"negative segment length in {self.seg_lengths.tolist()}")
        if int(self.seg_lengths.sum()) != S:
            raise GenomeError(f"segment lengths sum to {int(self.seg_lengths.sum())}, expected {S}")
        if not np.array_equal(np.sort(self.perm), np.arange(S)):
            raise GenomeError("perm is not a permutation of 0..S-1")

    def to_dict(self) -> dict:
        return {"perm": self.perm.tolist(), "segments": self.seg_lengths.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "Genome":
        g = cls(data["perm"], data["segments"])
        g.validate()
        return g

    @classmethod
    def from_json(cls, text: str) -> "Genome":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class RoutePlan:
    """Truck routes plus the unvisited stations.

    ``unvisited`` keeps genome order so that ``encode(decode(g)) == g``, but
    plan equality treats it as a set.
    """

    routes: tuple[tuple[int, ...], ...]
    unvisited: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(tuple(int(s) for s in r) for r in self.routes))
        object.__setattr__(self, "unvisited", tuple(int(s) for s in self.unvisited))

    def __eq__(self, other):
        if not isinstance(other, RoutePlan):
            return NotImplemented
        return self.routes == other.routes and frozenset(self.unvisited) == frozenset(other.unvisited)

    def __hash__(self):
        return hash((self.routes, frozenset(self.unvisited)))

    @property
    def trucks_used(self) -> int:
        return sum(1 for r in self.routes if r)

    def visited(self) -> list[int]:
        return [s for r in self.routes for s in r]

    def validate(self, n_stations: int) -> None:
        """Single-visit checks: no station on two routes, none repeated on one."""
        seen: set[int] = set()
        for t, route in enumerate(self.routes):
            if len(set(route)) != len(route):
                raise GenomeError(f"route {t} visits a station twice: {route}")
            for s in route:
                if not 0 <= s < n_stations:
                    raise GenomeError(f"route {t} references unknown station {s}")
                if s in seen:
                    raise GenomeError(f"station {s} served by more than one truck")
                seen.add(s)
        unv = set(self.unvisited)
        if unv & seen:
            raise GenomeError(f"stations {sorted(unv & seen)} both visited and unvisited")
        if seen | unv != set(range(n_stations)):
            missing = sorted(set(range(n_stations)) - seen - unv)
            raise GenomeError(f"stations {missing} are neither routed nor unvisited")

    @classmethod
    def empty(cls, n_stations: int, truck_count: int) -> "RoutePlan":
        return cls(tuple(() for _ in range(truck_count)), tuple(range(n_stations)))


def decode(genome: Genome) -> RoutePlan:
    genome.validate()
    b = genome.bounds()
    T = genome.truck_count
    routes = tuple(tuple(genome.perm[b[t]:b[t + 1]].tolist()) for t in range(T))
    return RoutePlan(routes, tuple(genome.perm[b[T]:].tolist()))


def encode(plan: RoutePlan, n_stations: int | None = None) -> Genome:
    """Inverse of :func:`decode`. Stations missing from the plan join the unvisited segment."""
    visited = plan.visited()
    unvisited = list(plan.unvisited)
    if n_stations is not None:
        known = set(visited) | set(unvisited)
        unvisited += [s for s in range(n_stations) if s not in known]
    perm = visited + unvisited
    seg = [len(r) for r in plan.routes] + [len(unvisited)]
    g = Genome(perm, seg)
    g.validate()
    return g


def route_distance(route, distances) -> float:
    """Closed tour depot -> route -> depot; an empty route costs nothing."""
    if len(route) == 0:
        return 0.0
    nodes = np.concatenate(([0], np.asarray(route, dtype=np.int64) + 1, [0]))
    return float(np.asarray(distances)[nodes[:-1], nodes[1:]].sum())


@dataclass(frozen=True)
class RelocateMove:
    """Move the station at ``src_pos`` of segment ``src`` to ``ins_pos`` of segment ``dst``.

    ``ins_pos`` ranges over ``0..len(dst)`` and indexes the destination
    segment as it is before the move.
    """

    src: int
    dst: int
    src_pos: int
    ins_pos: int

    def inverse(self) -> "RelocateMove":
        return RelocateMove(self.dst, self.src, self.ins_pos, self.src_pos)


def _check_move(genome: Genome, move: RelocateMove) -> None:
    K = genome.seg_lengths.size
    if move.src == move.dst:
        raise GenomeError(f"relocate needs distinct segments, got {move.src} twice")
    if not (0 <= move.src < K and 0 <= move.dst < K):
        raise GenomeError(f"segment index out of range in {move}")
    if not 0 <= move.src_pos < genome.seg_lengths[move.src]:
        raise GenomeError(f"source position out of range in {move}")
    if not 0 <= move.ins_pos <= genome.seg_lengths[move.dst]:
        raise GenomeError(f"insertion position out of range in {move}")


def apply_relocate(genome: Genome, move: RelocateMove) -> Genome:
    _check_move(genome, move)
    b = genome.bounds()
    perm = genome.perm.tolist()
    station = perm[b[move.src] + move.src_pos]
    ins = b[move.dst] + move.ins_pos
    del perm[b[move.src] + move.src_pos]
    if move.dst > move.src:
        ins -= 1
    perm.insert(ins, station)
    seg = genome.seg_lengths.copy()
    seg[move.src] -= 1
    seg[move.dst] += 1
    return Genome(perm, seg)


def enumerate_relocations(genome: Genome, src: int, dst: int) -> list[RelocateMove]:
    """All ``|src| * (|dst| + 1)`` moves, source position major."""
    n_src = int(genome.seg_lengths[src])
    n_dst = int(genome.seg_lengths[dst])
    return [RelocateMove(src, dst, p, k) for p in range(n_src) for k in range(n_dst + 1)]


def random_genome(rng: np.random.Generator, n_stations: int, truck_count: int) -> Genome:
    """Uniform random permutation with a uniform random composition of ``S`` into ``T + 1`` parts."""
    perm = rng.permutation(n_stations)
    bars = np.sort(rng.choice(n_stations + truck_count, size=truck_count, replace=False))
    edges = np.concatenate(([-1], bars, [n_stations + truck_count]))
    return Genome(perm, np.diff(edges) - 1)
