"""Recombination and mutation operators.

Permutation operators (crossovers OX/PMX/ERX/EERX, mutations IM/BMM/BSM/SM)
act on the station order only. Domain mutations (AB2, BB1-*, BB2-*) move a
single station between two segments with a 1-0 relocate; BB1 and BB2 rank
the relocate neighbourhood by the change in route distance it causes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .encoding import Genome, RelocateMove, apply_relocate, route_distance

CROSSOVERS = ("OX", "PMX", "ERX", "EERX")
PERM_MUTATIONS = ("IM", "BMM", "BSM", "SM")
DOMAIN_MUTATIONS = ("AB2", "BB1-MIN", "BB1-MAX", "BB2-MIN", "BB2-MAX")
MAX_DRAWS = 10


@dataclass(frozen=True)
class OperatorConfig:
    crossover: str = "PMX"
    perm_mutation: str = "SM"
    pc_perm: float = 0.1
    pm_perm: float = 0.25
    pm_partition: float = 0.15
    domain_mutation: str | None = "AB2"
    epsilon: float = 1.0
    block_length: int | None = None
    include_unvisited: bool = True

    def __post_init__(self):
        if self.crossover not in CROSSOVERS:
            raise ValueError(f"unknown crossover {self.crossover!r}; expected one of {CROSSOVERS}")
        if self.perm_mutation not in PERM_MUTATIONS:
            raise ValueError(f"unknown permutation mutation {self.perm_mutation!r}; expected one of {PERM_MUTATIONS}")
        if self.domain_mutation is not None and self.domain_mutation not in DOMAIN_MUTATIONS:
            raise ValueError(f"unknown domain mutation {self.domain_mutation!r}; expected one of {DOMAIN_MUTATIONS}")
        for name in ("pc_perm", "pm_perm", "pm_partition"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.block_length is not None and self.block_length < 1:
            raise ValueError(f"block_length must be >= 1, got {self.block_length}")

    @classmethod
    def preset(cls, operator: str, **overrides) -> "OperatorConfig":
        """Tuned settings per domain mutation operator."""
        if operator not in PRESETS:
            raise ValueError(f"no preset for {operator!r}; expected one of {tuple(PRESETS)}")
        return replace(PRESETS[operator], **overrides)


PRESETS = {
    "AB2": OperatorConfig("PMX", "SM", 0.1, 0.25, 0.15, "AB2"),
    "BB1-MIN": OperatorConfig("PMX", "SM", 0.1, 0.25, 0.20, "BB1-MIN"),
    "BB1-MAX": OperatorConfig("PMX", "BSM", 0.1, 0.01, 0.25, "BB1-MAX"),
    "BB2-MAX": OperatorConfig("PMX", "SM", 0.1, 0.20, 0.25, "BB2-MAX"),
    "BB2-MIN": OperatorConfig("PMX", "SM", 0.1, 0.20, 0.15, "BB2-MIN"),
}


def _check_parents(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"parent length mismatch: {a.size} vs {b.size}")
    return a, b


def _cut_points(rng, n):
    i, j = sorted(rng.choice(n + 1, size=2, replace=False)) if n >= 1 else (0, 0)
    return int(i), int(j)


# -- crossovers ---------------------------------------------------------------

def order_crossover(a, b, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """OX with the cut ``[lo, hi)``: keep the slice, fill the rest in the other parent's order starting after ``hi``."""

    def child(p, q):
        n = len(p)
        out = [None] * n
        kept = set(p[lo:hi].tolist())
        out[lo:hi] = p[lo:hi].tolist()
        fill = [q[(hi + k) % n] for k in range(n) if q[(hi + k) % n] not in kept]
        pos = [(hi + k) % n for k in range(n - (hi - lo))]
        for idx, v in zip(pos, fill):
            out[idx] = int(v)
        return np.array(out, dtype=np.int64)

    a, b = _check_parents(a, b)
    return child(a, b), child(b, a)


def pmx(a, b, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Partially mapped crossover with the cut ``[lo, hi)``."""

    def child(p, q):
        out = q.copy()
        out[lo:hi] = p[lo:hi]
        seg = {int(v): k for k, v in enumerate(p[lo:hi], start=lo)}
        for k in list(range(lo)) + list(range(hi, len(p))):
            v = int(q[k])
            while v in seg:
                v = int(q[seg[v]])
            out[k] = v
        return out

    a, b = _check_parents(a, b)
    return child(a, b), child(b, a)


def _edge_table(a, b, enhanced: bool):
    # Open-path adjacency so identical parents reproduce themselves.
    table: dict[int, dict[int, int]] = {int(v): {} for v in a}
    for p in (a, b):
        for k in range(len(p) - 1):
            u, v = int(p[k]), int(p[k + 1])
            table[u][v] = table[u].get(v, 0) + 1
            table[v][u] = table[v].get(u, 0) + 1
    if not enhanced:
        for u in table:
            table[u] = dict.fromkeys(table[u], 1)
    return table


def _edge_recombination(a, b, start: int, rng, enhanced: bool) -> np.ndarray:
    table = _edge_table(a, b, enhanced)
    remaining = set(table)
    current = start
    out = []
    while True:
        out.append(current)
        remaining.discard(current)
        neigh = table.pop(current)
        for v in neigh:
            table[v].pop(current, None)
        if not remaining:
            break
        if neigh:
            cands = sorted(neigh)
            if enhanced:
                shared = [v for v in cands if neigh[v] > 1]
                cands = shared or cands
            fewest = min(len(table[v]) for v in cands)
            cands = [v for v in cands if len(table[v]) == fewest]
            current = cands[int(rng.integers(len(cands)))] if len(cands) > 1 else cands[0]
        else:
            pool = sorted(remaining)
            current = pool[int(rng.integers(len(pool)))]
    return np.array(out, dtype=np.int64)


def crossover(kind: str, a, b, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    a, b = _check_parents(a, b)
    n = a.size
    if n == 0:
        return a.copy(), b.copy()
    if kind in ("OX", "PMX"):
        lo, hi = _cut_points(rng, n)
        return (order_crossover if kind == "OX" else pmx)(a, b, lo, hi)
    if kind in ("ERX", "EERX"):
        enhanced = kind == "EERX"
        return (_edge_recombination(a, b, int(a[0]), rng, enhanced),
                _edge_recombination(b, a, int(b[0]), rng, enhanced))
    raise ValueError(f"unknown crossover {kind!r}")


# -- permutation mutations ----------------------------------------------------

def inversion(perm, i: int, j: int) -> np.ndarray:
    """Reverse ``perm[i..j]`` inclusive."""
    out = np.array(perm, dtype=np.int64)
    out[i:j + 1] = out[i:j + 1][::-1].copy()
    return out


def swap(perm, i: int, j: int) -> np.ndarray:
    out = np.array(perm, dtype=np.int64)
    out[i], out[j] = out[j], out[i]
    return out


def block_move(perm, start: int, n: int, dest: int) -> np.ndarray:
    """Cut ``perm[start:start+n]`` and reinsert it so it begins at ``dest`` of the remainder."""
    p = list(perm)
    block = p[start:start + n]
    rest = p[:start] + p[start + n:]
    return np.array(rest[:dest] + block + rest[dest:], dtype=np.int64)


def block_swap(perm, i: int, j: int, n: int) -> np.ndarray:
    """Exchange the blocks ``[i, i+n)`` and ``[j, j+n)``; requires ``i + n <= j``."""
    if i + n > j:
        raise ValueError("blocks overlap")
    p = list(perm)
    return np.array(p[:i] + p[j:j + n] + p[i + n:j] + p[i:i + n] + p[j + n:], dtype=np.int64)


def _block_length(rng, S, n):
    if n is not None:
        return n
    return int(rng.integers(1, max(1, math.ceil(S / 10)) + 1))


def mutate_perm(kind: str, perm, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64)
    S = perm.size
    if S < 2:
        return perm.copy()
    if kind == "IM":
        i, j = sorted(int(x) for x in rng.integers(0, S, size=2))
        return inversion(perm, i, j)
    if kind == "SM":
        i, j = (int(x) for x in rng.integers(0, S, size=2))
        return swap(perm, i, j)
    if kind == "BMM":
        n = min(_block_length(rng, S, n), S)
        start = int(rng.integers(0, S - n + 1))
        dest = int(rng.integers(0, S - n + 1))
        return block_move(perm, start, n, dest)
    if kind == "BSM":
        n = min(_block_length(rng, S, n), S // 2)
        i = int(rng.integers(0, S - 2 * n + 1))
        j = int(rng.integers(i + n, S - n + 1))
        return block_swap(perm, i, j, n)
    raise ValueError(f"unknown permutation mutation {kind!r}")


# -- domain mutations ---------------------------------------------------------

def _segments(genome: Genome):
    b = genome.bounds()
    return [genome.perm[b[k]:b[k + 1]] for k in range(genome.seg_lengths.size)]


def _eligible(genome: Genome, include_unvisited: bool) -> int:
    return genome.truck_count + (1 if include_unvisited else 0)


def _pick_pair(genome: Genome, rng, include_unvisited: bool):
    """Two distinct segments (source, destination) with a non-empty source, or None."""
    k = _eligible(genome, include_unvisited)
    if k < 2:
        return None
    for _ in range(MAX_DRAWS):
        src, dst = (int(x) for x in rng.choice(k, size=2, replace=False))
        if genome.seg_lengths[src] > 0:
            return src, dst
    return None


def mutate_ab2(genome: Genome, rng: np.random.Generator, cfg: OperatorConfig) -> Genome:
    pair = _pick_pair(genome, rng, cfg.include_unvisited)
    if pair is None:
        return genome
    src, dst = pair
    pos = int(rng.integers(genome.seg_lengths[src]))
    ins = int(rng.integers(genome.seg_lengths[dst] + 1))
    return apply_relocate(genome, RelocateMove(src, dst, pos, ins))


def _is_route(genome: Genome, k: int) -> bool:
    return k < genome.truck_count


def neighborhood_deltas(genome: Genome, src: int, dst: int, distances) -> np.ndarray:
    """Distance change of every relocate ``src -> dst``, shape ``(|src|, |dst| + 1)``.

    Row ``p`` removes the station at source position ``p``; column ``k``
    inserts it before destination position ``k``. The unvisited segment has
    no length, so its side contributes nothing.
    """
    d = np.asarray(distances)
    s_nodes = genome.segment(src) + 1
    t_nodes = genome.segment(dst) + 1
    n_src = s_nodes.size
    if _is_route(genome, src):
        path = np.concatenate(([0], s_nodes, [0]))
        prev, nxt = path[:-2], path[2:]
        removal = d[prev, nxt] - d[prev, s_nodes] - d[s_nodes, nxt]
    else:
        removal = np.zeros(n_src)
    if _is_route(genome, dst):
        path = np.concatenate(([0], t_nodes, [0]))
        before, after = path[:-1], path[1:]
        insertion = d[before[None, :], s_nodes[:, None]] + d[s_nodes[:, None], after[None, :]] - d[before, after][None, :]
    else:
        insertion = np.zeros((n_src, t_nodes.size + 1))
    return removal[:, None] + insertion


def relocation_delta(genome: Genome, move: RelocateMove, distances) -> float:
    """``(len(src') + len(dst')) - (len(src) + len(dst))`` recomputed from whole routes."""

    def length(g, k):
        return route_distance(g.segment(k), distances) if _is_route(g, k) else 0.0

    after = apply_relocate(genome, move)
    return (length(after, move.src) + length(after, move.dst)) - (length(genome, move.src) + length(genome, move.dst))


def _flat_move(genome: Genome, src: int, dst: int, flat: int) -> RelocateMove:
    width = int(genome.seg_lengths[dst]) + 1
    return RelocateMove(src, dst, flat // width, flat % width)


def mutate_bb1(genome: Genome, rng: np.random.Generator, cfg: OperatorConfig, sense: str, distances) -> Genome:
    """Apply the relocate with the smallest (MIN) or largest (MAX) distance change; first occurrence wins ties."""
    pair = _pick_pair(genome, rng, cfg.include_unvisited)
    if pair is None:
        return genome
    return apply_relocate(genome, bb1_move(genome, pair[0], pair[1], sense, distances))


def bb1_move(genome: Genome, src: int, dst: int, sense: str, distances) -> RelocateMove:
    """Extreme relocate of the ``src -> dst`` neighbourhood, scanned source position major."""
    deltas = neighborhood_deltas(genome, src, dst, distances).ravel()
    if sense == "MIN":
        flat = int(np.argmin(deltas))
    elif sense == "MAX":
        flat = int(np.argmax(deltas))
    else:
        raise ValueError(f"sense must be MIN or MAX, got {sense!r}")
    return _flat_move(genome, src, dst, flat)


def roulette_probabilities(deltas, sense: str, epsilon: float) -> np.ndarray:
    """Selection probabilities ``w / sum(w)`` with ``w = 1 / (epsilon + c)``.

    ``c`` is the shift to the preferred extreme: ``delta - min`` for MIN,
    ``max - delta`` for MAX, so both senses give nonnegative ``c``.
    """
    deltas = np.asarray(deltas, dtype=float)
    c = deltas - deltas.min() if sense == "MIN" else deltas.max() - deltas
    w = 1.0 / (epsilon + c)
    return w / w.sum()


def mutate_bb2(genome: Genome, rng: np.random.Generator, cfg: OperatorConfig, sense: str, distances) -> Genome:
    pair = _pick_pair(genome, rng, cfg.include_unvisited)
    if pair is None:
        return genome
    src, dst = pair
    probs = roulette_probabilities(neighborhood_deltas(genome, src, dst, distances).ravel(), sense, cfg.epsilon)
    flat = sample_index(probs, rng)
    return apply_relocate(genome, _flat_move(genome, src, dst, flat))


def sample_index(probs, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    return min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(cdf) - 1)


def mutate_domain(kind: str, genome: Genome, rng: np.random.Generator, cfg: OperatorConfig, distances) -> Genome:
    if kind == "AB2":
        return mutate_ab2(genome, rng, cfg)
    family, _, sense = kind.partition("-")
    if family == "BB1":
        return mutate_bb1(genome, rng, cfg, sense, distances)
    if family == "BB2":
        return mutate_bb2(genome, rng, cfg, sense, distances)
    raise ValueError(f"unknown domain mutation {kind!r}")
