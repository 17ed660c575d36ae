"""Greedy constructive baselines: RRCP-BI and GLOBE.

Both build route sets from a deterministic expected-demand proxy. They never
look at individual scenarios; the plans they produce are scored by the
evaluator like any other.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .encoding import RoutePlan
from .instance import Instance
from .scenarios import ScenarioSet

SCORE_MODES = ("service", "inverse-distance", "service-per-distance")
PRESET_MODES = {"Dist": "inverse-distance", "Serv": "service", "SD": "service-per-distance"}


@dataclass(frozen=True, eq=False)
class DemandProxy:
    expected_demand: np.ndarray
    net_change: np.ndarray
    deficit: np.ndarray
    surplus: np.ndarray

    @classmethod
    def from_expected(cls, instance: Instance, expected_demand) -> "DemandProxy":
        expected = np.asarray(expected_demand, dtype=float)
        if expected.shape != (instance.n_stations,):
            raise ValueError(f"expected_demand needs {instance.n_stations} entries, got {expected.size}")
        net = expected - instance.initial
        return cls(expected, net, np.maximum(net, 0.0), np.maximum(-net, 0.0))

    @classmethod
    def from_scenarios(cls, instance: Instance, scenarios: ScenarioSet) -> "DemandProxy":
        """Expected inventory: scenario-weighted mean of ``O_i + D_ih``."""
        return cls.from_expected(instance, instance.initial + scenarios.weights @ scenarios.demands)

    @property
    def deficit_stations(self) -> np.ndarray:
        return np.flatnonzero(self.deficit > 0)

    @property
    def surplus_stations(self) -> np.ndarray:
        return np.flatnonzero(self.surplus > 0)


def pair_volume(surplus_i: float, deficit_j: float, capacity: float) -> float:
    return min(surplus_i, deficit_j, capacity)


def _score(mode: str, q, dist, eps):
    if mode == "service":
        return q
    if mode == "inverse-distance":
        return 1.0 / (dist + eps)
    if mode == "service-per-distance":
        return q / (dist + eps)
    raise ValueError(f"unknown score mode {mode!r}; expected one of {SCORE_MODES}")


def _biased_choice(base, exponent: float, rng) -> int:
    """Sample an index with probability proportional to ``base ** exponent``.

    Works in log space so large exponents approach argmax instead of overflowing.
    """
    logw = exponent * np.log(np.asarray(base, dtype=float))
    w = np.exp(logw - logw.max())
    cdf = np.cumsum(w)
    return min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), w.size - 1)


def _check_mode(score_mode, eps):
    if score_mode not in SCORE_MODES:
        raise ValueError(f"unknown score mode {score_mode!r}; expected one of {SCORE_MODES}")
    if not eps > 0:
        raise ValueError(f"epsilon must be > 0, got {eps}")


@dataclass(frozen=True)
class RrcpConfig:
    m_max: int = 10
    beta_pick: float = 2.0
    beta_drop: float = 2.0
    score_mode: str = "service-per-distance"
    lam: float = 1.0
    epsilon: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")
        if self.beta_pick < 0 or self.beta_drop < 0 or self.lam < 0:
            raise ValueError("beta_pick, beta_drop and lam must be >= 0")
        _check_mode(self.score_mode, self.epsilon)


@dataclass(frozen=True)
class GlobeConfig:
    """``d1``/``d2`` left as None resolve to the 75th percentile of the instance's nonzero distances."""

    d1: float | None = None
    d2: float | None = None
    gamma: float = 2.0
    score_mode: str = "service-per-distance"
    epsilon: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        for name in ("d1", "d2"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        _check_mode(self.score_mode, self.epsilon)

    def thresholds(self, instance: Instance) -> tuple[float, float]:
        d = instance.distances
        nz = d[d > 0]
        default = float(np.percentile(nz, 75)) if nz.size else 0.0
        return (default if self.d1 is None else self.d1, default if self.d2 is None else self.d2)


def preset(name: str, heuristic: str, **overrides):
    if name not in PRESET_MODES:
        raise ValueError(f"unknown preset {name!r}; expected one of {tuple(PRESET_MODES)}")
    if heuristic.upper() in ("RRCP-BI", "RRCP"):
        cfg = RrcpConfig(score_mode=PRESET_MODES[name])
    elif heuristic.upper() == "GLOBE":
        cfg = GlobeConfig(score_mode=PRESET_MODES[name])
    else:
        raise ValueError(f"unknown heuristic {heuristic!r}; expected RRCP-BI or GLOBE")
    return replace(cfg, **overrides)


def rrcp_pairs(instance: Instance, proxy: DemandProxy, cfg: RrcpConfig, rng: np.random.Generator):
    """Stage 1: randomized pickup/drop pairing. Returns ``[(i, j, q), ...]`` in creation order."""
    d = instance.distances
    C = instance.truck_capacity
    eps = cfg.epsilon
    avail_pick = [int(i) for i in proxy.surplus_stations]
    avail_drop = [int(j) for j in proxy.deficit_stations]
    pairs = []
    while avail_pick and avail_drop:
        i = avail_pick[_biased_choice(proxy.surplus[avail_pick] + eps, cfg.beta_pick, rng)]
        drops = np.array(avail_drop)
        m = min(cfg.m_max, drops.size)
        # nearest deficit stations; stable sort breaks ties by station id
        rcl = drops[np.argsort(d[i + 1, drops + 1], kind="stable")[:m]]
        q = np.minimum(np.minimum(proxy.surplus[i], proxy.deficit[rcl]), C)
        score = _score(cfg.score_mode, q, d[i + 1, rcl + 1], eps)
        j = int(rcl[_biased_choice(score + eps, cfg.beta_drop, rng)])
        pairs.append((i, j, float(pair_volume(proxy.surplus[i], proxy.deficit[j], C))))
        avail_pick.remove(i)
        avail_drop.remove(j)
    return pairs


def rrcp_bi(instance: Instance, proxy: DemandProxy, cfg: RrcpConfig = RrcpConfig()) -> RoutePlan:
    rng = np.random.default_rng(cfg.seed)
    d = instance.distances
    T = instance.truck_count
    pairs = rrcp_pairs(instance, proxy, cfg, rng)

    routes: list[list[int]] = [[] for _ in range(T)]
    last = np.zeros(T, dtype=np.int64)  # matrix index of each truck's last stop
    count = np.zeros(T)
    for i, j, _ in pairs:
        a, b = i + 1, j + 1
        delta = d[last, a] + d[a, b] + d[b, 0] - d[last, 0]
        t = int(np.argmin(delta + cfg.lam * count))
        routes[t] += [i, j]
        last[t] = b
        count[t] += 1
    return _plan(routes, instance.n_stations)


def globe(instance: Instance, proxy: DemandProxy, cfg: GlobeConfig = GlobeConfig()) -> RoutePlan:
    rng = np.random.default_rng(cfg.seed)
    d = instance.distances
    T = instance.truck_count
    C = instance.truck_capacity
    d1, d2 = cfg.thresholds(instance)
    eps = cfg.epsilon

    routes: list[list[int]] = [[] for _ in range(T)]
    pos = np.zeros(T, dtype=np.int64)
    visited = np.zeros(instance.n_stations, dtype=bool)
    while True:
        S = np.flatnonzero((proxy.surplus > 0) & ~visited)
        D = np.flatnonzero((proxy.deficit > 0) & ~visited)
        if S.size == 0 or D.size == 0:
            break
        to_pick = d[pos[:, None], S[None, :] + 1]  # (T, |S|)
        pick_drop = d[S[:, None] + 1, D[None, :] + 1]  # (|S|, |D|)
        ok = (to_pick[:, :, None] <= d1) & (pick_drop[None, :, :] <= d2)
        t_idx, s_idx, d_idx = np.nonzero(ok)  # lexicographic (t, i, j)
        if t_idx.size == 0:
            break
        q = np.minimum(np.minimum(proxy.surplus[S[s_idx]], proxy.deficit[D[d_idx]]), C)
        move_dist = to_pick[t_idx, s_idx] + pick_drop[s_idx, d_idx]
        score = _score(cfg.score_mode, q, move_dist, eps)
        k = _biased_choice(score + eps, cfg.gamma, rng)
        t, i, j = int(t_idx[k]), int(S[s_idx[k]]), int(D[d_idx[k]])
        routes[t] += [i, j]
        pos[t] = j + 1
        visited[i] = visited[j] = True
    return _plan(routes, instance.n_stations)


def _plan(routes, n_stations) -> RoutePlan:
    used = {s for r in routes for s in r}
    plan = RoutePlan(tuple(tuple(r) for r in routes), tuple(s for s in range(n_stations) if s not in used))
    plan.validate(n_stations)
    return plan


def run_baseline(heuristic: str, instance: Instance, proxy: DemandProxy, cfg) -> RoutePlan:
    if heuristic.upper() in ("RRCP-BI", "RRCP"):
        return rrcp_bi(instance, proxy, cfg)
    if heuristic.upper() == "GLOBE":
        return globe(instance, proxy, cfg)
    raise ValueError(f"unknown heuristic {heuristic!r}; expected RRCP-BI or GLOBE")
