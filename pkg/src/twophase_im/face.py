"""Fully adaptive cross-entropy optimization over seed sets.

Iterates: sample candidate sets from a per-node product distribution, rank
by objective value, refit the distribution to the value-weighted elites with
smoothing, repeat until the elite threshold stabilizes. Optional joint mode
also samples the budget split k1 and the delay d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffusion import TAG_FACE, stream
from .graph import InfluenceGraph
from .selectors import SeedSet, gdd_state

BOUNDARY_TOL = 0.01  # node_probs this close to {0,1} count as converged


@dataclass
class CeConfig:
    n_min: int
    n_max: int
    n_elite: int
    alpha: float = 0.6
    max_iterations: int = 20
    reliability_tol: float = 1e-3
    exploration_floor: float = 0.1

    @classmethod
    def for_graph(cls, n: int) -> "CeConfig":
        return cls(n_min=n, n_max=20 * n, n_elite=math.ceil(n / 4))

    def __post_init__(self):
        if not (1 <= self.n_min <= self.n_max):
            raise ValueError("need 1 <= n_min <= n_max")
        if not (1 <= self.n_elite <= self.n_min):
            raise ValueError("need 1 <= n_elite <= n_min")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must be in (0, 1]")
        if not (0.0 <= self.exploration_floor < 1.0):
            raise ValueError("exploration_floor must be in [0, 1)")


@dataclass
class CeDistribution:
    node_probs: np.ndarray
    k1_probs: np.ndarray | None = None  # joint mode, over {1..k}
    d_probs: np.ndarray | None = None   # joint mode, over {0..D}

    def __post_init__(self):
        self.node_probs = np.clip(np.asarray(self.node_probs, dtype=float), 0.0, 1.0)
        for cat in (self.k1_probs, self.d_probs):
            if cat is not None and abs(cat.sum() - 1.0) > 1e-9:
                raise ValueError("categorical weights must sum to 1")


@dataclass
class CeSample:
    set: tuple
    value: float
    k1: int | None = None
    d: int | None = None


@dataclass
class CeIterationLog:
    iteration: int
    draws: int
    elite_threshold: float
    best: float


def init_uniform(n: int, budget: int) -> CeDistribution:
    return CeDistribution(node_probs=np.full(n, budget / n))


def init_weighted(graph: InfluenceGraph, k1: int) -> CeDistribution:
    """Inclusion probabilities proportional to the degree-discount weight
    w_v = survival_v * (1 + outsum_v), scaled so they sum to k1; entries
    above 1 are clamped and their surplus pushed proportionally onto the
    rest until all entries are feasible."""
    if k1 < 1:
        raise ValueError("k1 must be >= 1")
    w = gdd_state(graph).w
    q = k1 * w / w.sum()
    return CeDistribution(node_probs=_clamp_redistribute(q, k1))


def _clamp_redistribute(q: np.ndarray, total: float) -> np.ndarray:
    """Clamp entries above 1 and push their surplus onto the remaining
    entries proportionally until all are feasible; saturated entries stay
    pinned at 1 so the loop makes progress. Preserves the sum (= total)
    whenever total <= len(q)."""
    q = q.astype(float).copy()
    saturated = np.zeros(len(q), dtype=bool)
    while True:
        over = (q > 1.0 + 1e-15) & ~saturated
        if not over.any():
            break
        saturated |= over
        q[saturated] = 1.0
        free = ~saturated & (q > 0)
        remainder = total - saturated.sum()
        if not free.any() or remainder <= 0:
            break
        q[free] *= remainder / q[free].sum()
    return np.clip(q, 0.0, 1.0)


def _sample_set(q: np.ndarray, budget: int, rng: np.random.Generator) -> tuple:
    """Bernoulli draw per node, then repair to exactly ``budget`` members by
    adding highest-q excluded nodes or dropping lowest-q included ones
    (random jitter breaks probability ties)."""
    n = len(q)
    included = rng.random(n) < q
    count = int(included.sum())
    if count != budget:
        jitter = rng.random(n)
        order = np.lexsort((jitter, q))  # ascending q
        if count < budget:
            for v in order[::-1]:
                if not included[v]:
                    included[v] = True
                    count += 1
                    if count == budget:
                        break
        else:
            for v in order:
                if included[v]:
                    included[v] = False
                    count -= 1
                    if count == budget:
                        break
    return tuple(int(v) for v in np.flatnonzero(included))


def _weighted_refit(samples, n, getter):
    """q_new[v] = sum of elite values over samples containing v / total elite
    value; falls back to plain membership frequency when all values are 0."""
    total = math.fsum(s.value for s in samples)
    q_new = np.zeros(n)
    if total > 0:
        for s in samples:
            for v in getter(s):
                q_new[v] += s.value
        q_new /= total
    else:
        for s in samples:
            for v in getter(s):
                q_new[v] += 1.0
        q_new /= len(samples)
    return q_new


def _reliable(threshold, prev_threshold, q, tol):
    if np.all((q <= BOUNDARY_TOL) | (q >= 1.0 - BOUNDARY_TOL)):
        return True
    if prev_threshold is None:
        return False
    denom = max(abs(prev_threshold), 1e-12)
    return abs(threshold - prev_threshold) / denom < tol


def _better(cand: CeSample, best: CeSample | None) -> bool:
    if best is None or cand.value > best.value:
        return True
    return cand.value == best.value and tuple(sorted(cand.set)) < tuple(sorted(best.set))


def face_select(graph: InfluenceGraph, budget: int, objective,
                config: CeConfig | None = None, init: CeDistribution | None = None,
                master_seed: int = 0, return_log: bool = False):
    """Cross-entropy search for an approximately spread-maximal budget-set.

    Deterministic per master seed; returns the best set ever sampled."""
    n = graph.n
    if not (1 <= budget <= n):
        raise ValueError(f"budget {budget} out of range for n={n}")
    config = config or CeConfig.for_graph(n)
    q = (init.node_probs.copy() if init is not None
         else np.full(n, budget / n, dtype=float))
    rng = stream(master_seed, TAG_FACE)
    best: CeSample | None = None
    prev_threshold = None
    log = []
    cache = {}
    for it in range(config.max_iterations):
        draws = config.n_min
        samples = []
        while True:
            while len(samples) < draws:
                nodes = _sample_set(q, budget, rng)
                key = frozenset(nodes)
                if key not in cache:
                    cache[key] = float(objective(key))
                samples.append(CeSample(set=nodes, value=cache[key]))
            samples.sort(key=lambda s: (-s.value, s.set))
            threshold = samples[config.n_elite - 1].value
            improved = prev_threshold is None or threshold > prev_threshold
            if improved or draws >= config.n_max:
                break
            draws = min(2 * draws, config.n_max)
        elites = samples[:config.n_elite]
        for s in samples:
            if _better(s, best):
                best = s
        q_new = _weighted_refit(elites, n, lambda s: s.set)
        # the floor keeps every node sampleable so a sharp early elite set
        # cannot freeze out the true optimum; convergence then comes from
        # the elite-threshold stagnation test rather than the boundary test
        q = np.clip(config.alpha * q_new + (1.0 - config.alpha) * q,
                    config.exploration_floor, 1.0)
        log.append(CeIterationLog(iteration=it, draws=len(samples),
                                  elite_threshold=threshold, best=best.value))
        if _reliable(threshold, prev_threshold, q, config.reliability_tol):
            break
        prev_threshold = threshold
    result = SeedSet(nodes=sorted(best.set), budget=budget)
    if return_log:
        return result, log
    return result


def face_joint_optimize(graph: InfluenceGraph, total_budget: int, max_delay: int,
                        two_phase_objective, config: CeConfig | None = None,
                        master_seed: int = 0, return_log: bool = False):
    """Joint cross-entropy search over (k1, d, S1).

    two_phase_objective(k1, d, seed_tuple) -> float scores a candidate; the
    pure single-phase arm (k1 = total_budget, d = 0) is sampled explicitly so
    the optimizer can fall back to it under harsh decay."""
    n = graph.n
    k, D = total_budget, max_delay
    if not (1 <= k <= n):
        raise ValueError(f"total budget {k} out of range for n={n}")
    if D < 1:
        raise ValueError("max_delay must be >= 1")
    config = config or CeConfig.for_graph(n)
    q = np.full(n, k / n, dtype=float)
    k1_probs = np.full(k, 1.0 / k)        # over {1..k}
    d_probs = np.full(D + 1, 1.0 / (D + 1))  # over {0..D}; d=0 forces k1=k
    rng = stream(master_seed, TAG_FACE)
    best: CeSample | None = None
    prev_threshold = None
    log = []
    cache = {}
    for it in range(config.max_iterations):
        draws = config.n_min
        samples = []
        while True:
            while len(samples) < draws:
                d = int(rng.choice(D + 1, p=d_probs))
                k1 = k if d == 0 else int(rng.choice(np.arange(1, k + 1), p=k1_probs))
                if k1 == k:
                    d = 0  # no second phase left, the delay is meaningless
                scale = _clamp_redistribute(q * (k1 / max(q.sum(), 1e-12)), k1)
                nodes = _sample_set(scale, k1, rng)
                key = (k1, d, frozenset(nodes))
                if key not in cache:
                    cache[key] = float(two_phase_objective(k1, d, nodes))
                samples.append(CeSample(set=nodes, value=cache[key], k1=k1, d=d))
            samples.sort(key=lambda s: (-s.value, s.d, s.set))
            threshold = samples[config.n_elite - 1].value
            improved = prev_threshold is None or threshold > prev_threshold
            if improved or draws >= config.n_max:
                break
            draws = min(2 * draws, config.n_max)
        elites = samples[:config.n_elite]
        for s in samples:
            if _better(s, best):
                best = s
        q_new = _weighted_refit(elites, n, lambda s: s.set)
        q = np.clip(config.alpha * q_new + (1.0 - config.alpha) * q,
                    config.exploration_floor, 1.0)
        k1_new = _weighted_refit(elites, k, lambda s: (s.k1 - 1,))
        d_new = _weighted_refit(elites, D + 1, lambda s: (s.d,))
        k1_probs = _normalized(config.alpha * k1_new + (1 - config.alpha) * k1_probs)
        d_probs = _normalized(config.alpha * d_new + (1 - config.alpha) * d_probs)
        log.append(CeIterationLog(iteration=it, draws=len(samples),
                                  elite_threshold=threshold, best=best.value))
        if _reliable(threshold, prev_threshold, q, config.reliability_tol):
            break
        prev_threshold = threshold
    result = (best.k1, best.d, SeedSet(nodes=sorted(best.set), budget=best.k1))
    if return_log:
        return result, log
    return result


def _normalized(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    s = p.sum()
    return p / s if s > 0 else np.full(len(p), 1.0 / len(p))


def log_csv_rows(log):
    """Iteration-log CSV rows: (iter, draws, elite_threshold, best)."""
    for entry in log:
        yield entry.iteration, entry.draws, entry.elite_threshold, entry.best
