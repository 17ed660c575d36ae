"""Front archives and multi-objective quality indicators (all objectives minimized)."""

from __future__ import annotations

import bisect
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


def dominates(a, b) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    a = tuple(a)
    b = tuple(b)
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def nondominated_mask(points) -> np.ndarray:
    """Boolean mask of points not dominated by any other point."""
    P = np.asarray(points, dtype=float)
    if P.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    le = np.all(P[:, None, :] <= P[None, :, :], axis=2)
    lt = np.any(P[:, None, :] < P[None, :, :], axis=2)
    dominated_by = le & lt  # [i, j]: i dominates j
    return ~dominated_by.any(axis=0)


@dataclass(frozen=True)
class ArchiveEntry:
    objectives: tuple[float, ...]
    genome: object = None
    label: str = ""


@dataclass
class FrontArchive:
    """Mutually non-dominated entries with provenance labels.

    Inserting a point equal to an existing one is rejected, so the first
    contributor of an objective vector keeps the credit for it.
    """

    entries: list[ArchiveEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def insert(self, objectives, genome=None, label: str = "") -> bool:
        obj = tuple(float(x) for x in objectives)
        for e in self.entries:
            if e.objectives == obj or dominates(e.objectives, obj):
                return False
        self.entries = [e for e in self.entries if not dominates(obj, e.objectives)]
        self.entries.append(ArchiveEntry(obj, genome, label))
        return True

    def extend(self, entries: Iterable[ArchiveEntry]) -> None:
        """Bulk insert; equivalent to inserting one by one in order."""
        merged = self.entries + [ArchiveEntry(tuple(float(x) for x in e.objectives), e.genome, e.label)
                                 for e in entries]
        if not merged:
            return
        P = np.array([e.objectives for e in merged])
        keep = nondominated_mask(P)
        seen = set()
        out = []
        for e, k in zip(merged, keep):
            if k and e.objectives not in seen:
                seen.add(e.objectives)
                out.append(e)
        self.entries = out

    def points(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, 0))
        return np.array([e.objectives for e in self.entries], dtype=float)

    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    def digest(self) -> str:
        """Stable hash of the sorted objective vectors."""
        rows = sorted(e.objectives for e in self.entries)
        return hashlib.sha256(json.dumps(rows).encode()).hexdigest()[:16]

    @classmethod
    def from_points(cls, points, label: str = "", genomes=None) -> "FrontArchive":
        arch = cls()
        genomes = genomes if genomes is not None else [None] * len(points)
        arch.extend(ArchiveEntry(tuple(p), g, label) for p, g in zip(points, genomes))
        return arch


def pool_reference_front(archives: Iterable[FrontArchive]) -> FrontArchive:
    pooled = FrontArchive()
    for arch in archives:
        pooled.extend(arch.entries)
    return pooled


def nds_count(archive: FrontArchive, label: str | None = None) -> int:
    if label is None:
        return len(archive)
    return sum(1 for e in archive if e.label == label)


def nds_by_label(archive: FrontArchive) -> dict[str, int]:
    return dict(Counter(e.label for e in archive))


# -- hypervolume --------------------------------------------------------------

def _hv2d(points, ref) -> float:
    pts = sorted((float(x), float(y)) for x, y in points)
    area = 0.0
    run_y = ref[1]
    for k, (x, y) in enumerate(pts):
        run_y = min(run_y, y)
        x_next = pts[k + 1][0] if k + 1 < len(pts) else ref[0]
        area += (x_next - x) * (ref[1] - run_y)
    return area


class _Staircase:
    """2-D non-dominated front with incrementally maintained dominated area."""

    def __init__(self, rx: float, ry: float):
        self.rx, self.ry = rx, ry
        self.xs: list[float] = []
        self.ys: list[float] = []
        self.area = 0.0

    def add(self, x: float, y: float) -> None:
        xs, ys = self.xs, self.ys
        idx = bisect.bisect_left(xs, x)
        if idx > 0 and ys[idx - 1] <= y:
            return
        if idx < len(xs) and xs[idx] == x and ys[idx] <= y:
            return
        cur_x = x
        cur_h = ys[idx - 1] if idx > 0 else self.ry
        j = idx
        gain = 0.0
        while cur_h > y:
            nxt = xs[j] if j < len(xs) else self.rx
            gain += (nxt - cur_x) * (cur_h - y)
            if j >= len(xs):
                break
            cur_x, cur_h = nxt, ys[j]
            j += 1
        self.area += gain
        # drop points dominated by (x, y): contiguous from idx while y_j >= y
        end = idx
        while end < len(xs) and ys[end] >= y:
            end += 1
        xs[idx:end] = [x]
        ys[idx:end] = [y]


def hypervolume(points, reference_point) -> float:
    """Exact dominated volume for 1-3 objectives.

    Points that are not strictly better than the reference point in every
    objective contribute nothing and are ignored.
    """
    ref = np.asarray(reference_point, dtype=float)
    P = np.asarray(points, dtype=float).reshape(-1, ref.size)
    P = P[np.all(P < ref, axis=1)]
    if P.shape[0] == 0:
        return 0.0
    m = ref.size
    if m == 1:
        return float(ref[0] - P[:, 0].min())
    if m == 2:
        return _hv2d(P, ref)
    if m != 3:
        raise ValueError("hypervolume supports at most 3 objectives")
    order = np.lexsort((P[:, 1], P[:, 0], P[:, 2]))
    P = P[order]
    stair = _Staircase(ref[0], ref[1])
    vol = 0.0
    n = P.shape[0]
    for k in range(n):
        stair.add(P[k, 0], P[k, 1])
        z_next = P[k + 1, 2] if k + 1 < n else ref[2]
        vol += stair.area * (z_next - P[k, 2])
    return float(vol)


def excluded_count(points, reference_point) -> int:
    ref = np.asarray(reference_point, dtype=float)
    P = np.asarray(points, dtype=float).reshape(-1, ref.size)
    return int((~np.all(P < ref, axis=1)).sum())


def reference_point_for(*fronts, scale: float = 1.01, margin: float = 1.0) -> np.ndarray:
    """Per-objective maximum over all fronts times ``scale``; objectives whose maximum is zero get ``margin`` instead."""
    P = np.vstack([np.asarray(f, dtype=float) for f in fronts if len(f)])
    worst = P.max(axis=0)
    return np.where(worst > 0, worst * scale, worst + margin)


def relative_hypervolume(front, reference_front, reference_point=None) -> float:
    if len(reference_front) == 0:
        raise ValueError("reference front is empty")
    r = reference_point_for(front, reference_front) if reference_point is None else np.asarray(reference_point)
    denom = hypervolume(reference_front, r)
    if denom <= 0:
        raise ValueError("reference front has zero hypervolume")
    return hypervolume(front, r) / denom if len(front) else 0.0


# -- distance based indicators ------------------------------------------------

def _normalize(A, B, bounds):
    if bounds is None:
        return A, B
    lo, hi = (np.asarray(x, dtype=float) for x in bounds)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (A - lo) / span, (B - lo) / span


def _dplus(front, ref):
    # [i, j]: ||max(front_i - ref_j, 0)||
    diff = np.maximum(front[:, None, :] - ref[None, :, :], 0.0)
    return np.sqrt((diff**2).sum(axis=2))


def gd_plus(front, reference_front, bounds=None) -> float:
    """Mean over front points of the dominance-aware distance to the nearest reference point."""
    A = np.asarray(front, dtype=float)
    Z = np.asarray(reference_front, dtype=float)
    if A.size == 0 or Z.size == 0:
        raise ValueError("gd_plus needs non-empty fronts")
    A, Z = _normalize(A, Z, bounds)
    return float(_dplus(A, Z).min(axis=1).mean())


def igd_plus(front, reference_front, bounds=None) -> float:
    """Mean over reference points of the distance from the closest front point, counting only where the front is worse."""
    A = np.asarray(front, dtype=float)
    Z = np.asarray(reference_front, dtype=float)
    if A.size == 0 or Z.size == 0:
        raise ValueError("igd_plus needs non-empty fronts")
    A, Z = _normalize(A, Z, bounds)
    return float(_dplus(A, Z).min(axis=0).mean())


def spread(front) -> float:
    """Mean distance to the centroid after scaling each objective by the front's own range."""
    A = np.asarray(front, dtype=float)
    if A.shape[0] == 0:
        return 0.0
    lo, hi = A.min(axis=0), A.max(axis=0)
    span = hi - lo
    N = np.where(span > 0, (A - lo) / np.where(span > 0, span, 1.0), 0.0)
    return float(np.linalg.norm(N - N.mean(axis=0), axis=1).mean())
