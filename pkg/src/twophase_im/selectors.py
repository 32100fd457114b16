"""Single-phase seed-selection algorithms: SD, WD, GDD, greedy, RMax, SPIC.

Every selector is deterministic given (graph, config, master seed); ties are
always broken toward the lowest node id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffusion import (
    TAG_RMAX,
    TAG_SINGLE,
    TAG_SPIC,
    DecayFunction,
    MonteCarloConfig,
    estimate_spread,
    estimate_temporal_spread,
    stream,
)
from .graph import InfluenceGraph
from . import oracle


@dataclass
class SeedSet:
    """Ordered selection under a budget; order is selection order."""

    nodes: list
    budget: int

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate nodes in seed set")
        if len(self.nodes) > self.budget:
            raise ValueError("seed set exceeds its budget")

    def as_set(self) -> frozenset:
        return frozenset(self.nodes)


# -- objective evaluators --------------------------------------------------
#
# An objective is any callable frozenset -> float that is deterministic for
# a fixed master seed (repeat calls with the same set return the same value).


class SigmaObjective:
    """Monte-Carlo spread; common random numbers across all evaluated sets."""

    def __init__(self, graph, config: MonteCarloConfig, sims=None, tag=TAG_SINGLE):
        self.graph, self.config, self.sims, self.tag = graph, config, sims, tag
        self._cache = {}

    def __call__(self, seeds) -> float:
        key = frozenset(seeds)
        if key not in self._cache:
            self._cache[key] = estimate_spread(
                self.graph, key, self.config, sims=self.sims, tag=self.tag).mean
        return self._cache[key]


class NuObjective:
    """Monte-Carlo decay-weighted spread with shared replicate streams."""

    def __init__(self, graph, decay: DecayFunction, config, sims=None, tag=TAG_SINGLE):
        self.graph, self.decay, self.config = graph, decay, config
        self.sims, self.tag = sims, tag
        self._cache = {}

    def __call__(self, seeds) -> float:
        key = frozenset(seeds)
        if key not in self._cache:
            self._cache[key] = estimate_temporal_spread(
                self.graph, key, self.decay, self.config, sims=self.sims, tag=self.tag).mean
        return self._cache[key]


class ExactSigmaObjective:
    """Oracle-backed spread; exact, for desk-scale verification runs."""

    def __init__(self, graph):
        self.orc = oracle.get_oracle(graph)

    def __call__(self, seeds) -> float:
        return self.orc.exact_sigma(seeds)


def _check_budget(graph, k, reserve=0):
    if not (1 <= k <= graph.n - reserve):
        raise ValueError(f"budget {k} out of range for n={graph.n} (reserved {reserve})")


# -- degree heuristics -----------------------------------------------------


def _select_discount(graph: InfluenceGraph, k: int, weighted: bool) -> SeedSet:
    score = np.zeros(graph.n)
    for u, adj in enumerate(graph.out_edges):
        score[u] = sum(p for _, p in adj) if weighted else len(adj)
    removed = np.zeros(graph.n, dtype=bool)
    picked = []
    for _ in range(k):
        best = -1
        for v in range(graph.n):
            if not removed[v] and (best < 0 or score[v] > score[best]):
                best = v
        picked.append(best)
        removed[best] = True
        for z, p in graph.in_edges[best]:
            if not removed[z]:
                score[z] -= p if weighted else 1
    return SeedSet(nodes=picked, budget=k)


def select_sd(graph: InfluenceGraph, k: int) -> SeedSet:
    """Single discount: residual out-degree, removing picked nodes."""
    _check_budget(graph, k)
    return _select_discount(graph, k, weighted=False)


def select_wd(graph: InfluenceGraph, k: int) -> SeedSet:
    """Weighted discount: residual sum of outgoing probabilities."""
    _check_budget(graph, k)
    return _select_discount(graph, k, weighted=True)


# -- generalized degree discount ------------------------------------------


@dataclass
class GddState:
    """Running discount state: w_v = survival_v * (1 + outsum_v)."""

    survival: np.ndarray   # prod over selected in-neighbors x of (1 - p_xv)
    outsum: np.ndarray     # sum of p_vy over unselected out-neighbors y
    selected: set = field(default_factory=set)
    ops: int = 0           # edge relaxations performed

    @property
    def w(self) -> np.ndarray:
        return self.survival * (1.0 + self.outsum)


def gdd_state(graph: InfluenceGraph, preselected=()) -> GddState:
    survival = np.ones(graph.n)
    outsum = np.array([sum(p for _, p in adj) for adj in graph.out_edges])
    state = GddState(survival=survival, outsum=outsum)
    for u in preselected:
        _gdd_apply(graph, state, int(u))
    return state


def _gdd_apply(graph, state: GddState, u: int):
    state.selected.add(u)
    for v, p in graph.out_edges[u]:
        state.survival[v] *= 1.0 - p
        state.ops += 1
    for z, p in graph.in_edges[u]:
        state.outsum[z] -= p
        state.ops += 1


def select_gdd(graph: InfluenceGraph, k: int, preselected=(),
               return_stats: bool = False):
    """Generalized degree discount: iteratively take the node whose expected
    direct contribution (survival against picked in-neighbors times one plus
    remaining outgoing probability mass) is largest.

    ``preselected`` nodes count as already chosen (their discounts applied)
    but do not consume the budget."""
    preselected = sorted(set(int(u) for u in preselected))
    _check_budget(graph, k, reserve=len(preselected))
    state = gdd_state(graph, preselected)
    picked = []
    for _ in range(k):
        w = state.w
        best = -1
        for v in range(graph.n):
            if v not in state.selected and (best < 0 or w[v] > w[best]):
                best = v
        picked.append(best)
        _gdd_apply(graph, state, best)
    result = SeedSet(nodes=picked, budget=k)
    if return_stats:
        return result, state.ops
    return result


# -- objective-driven selectors -------------------------------------------


def select_greedy(graph: InfluenceGraph, k: int, objective) -> SeedSet:
    """Hill-climbing: k rounds, each adding the candidate with the largest
    objective value (no lazy evaluation; the two-phase objective is not
    submodular)."""
    _check_budget(graph, k)
    chosen = []
    current = frozenset()
    for _ in range(k):
        best_v, best_val = -1, -np.inf
        for v in range(graph.n):
            if v in current:
                continue
            val = objective(current | {v})
            if val > best_val:
                best_v, best_val = v, val
        chosen.append(best_v)
        current = current | {best_v}
    return SeedSet(nodes=chosen, budget=k)


def select_rmax(graph: InfluenceGraph, k: int, objective, samples: int | None = None,
                master_seed: int = 0) -> SeedSet:
    """Evaluate uniformly random k-subsets and keep the best."""
    _check_budget(graph, k)
    if samples is None:
        samples = 5 * graph.n
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = stream(master_seed, TAG_RMAX)
    best_set, best_val = None, -np.inf
    for _ in range(samples):
        cand = tuple(sorted(rng.choice(graph.n, size=k, replace=False)))
        val = objective(frozenset(cand))
        if val > best_val or (val == best_val and cand < best_set):
            best_set, best_val = cand, val
    return SeedSet(nodes=[int(v) for v in best_set], budget=k)


def shapley_values(graph: InfluenceGraph, objective, permutations: int | None = None,
                   master_seed: int = 0) -> np.ndarray:
    """Permutation-sampling Shapley estimates of per-node objective value."""
    if permutations is None:
        permutations = 5 * graph.n
    if permutations < 1:
        raise ValueError("permutations must be >= 1")
    rng = stream(master_seed, TAG_SPIC)
    phi = np.zeros(graph.n)
    for _ in range(permutations):
        order = rng.permutation(graph.n)
        prefix = frozenset()
        prev = objective(prefix)
        for v in order:
            cur = objective(prefix | {int(v)})
            phi[v] += cur - prev
            prefix = prefix | {int(v)}
            prev = cur
    return phi / permutations


def select_spic(graph: InfluenceGraph, k: int, objective, permutations: int | None = None,
                master_seed: int = 0) -> SeedSet:
    """Shapley-value selection with probability-aware discounting.

    After estimating per-node Shapley values, picks iteratively; on picking y
    with selection-time value phi_y, out-neighbors x are discounted by
    (1 - p_yx) and in-neighbors z lose p_zy * phi_y (clamped at zero)."""
    _check_budget(graph, k)
    value = shapley_values(graph, objective, permutations, master_seed).copy()
    picked = []
    selected = set()
    for _ in range(k):
        best = -1
        for v in range(graph.n):
            if v not in selected and (best < 0 or value[v] > value[best]):
                best = v
        phi_y = value[best]
        picked.append(best)
        selected.add(best)
        for x, p in graph.out_edges[best]:
            value[x] *= 1.0 - p
        for z, p in graph.in_edges[best]:
            value[z] = max(0.0, value[z] - p * phi_y)
    return SeedSet(nodes=picked, budget=k)
