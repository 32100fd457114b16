"""Two-phase pipeline: surrogate objectives g and h, and the end-to-end
myopic/farsighted run.

Structure of every nested evaluation: simulate phase 1 to step d, observe,
drop already-activated nodes, pick second-phase seeds on the residual graph
with the recently-activated nodes as a free partial seed set, then continue
the diffusion and aggregate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffusion import (
    TAG_PHASE1,
    TAG_PHASE2,
    TAG_SINGLE,
    CHUNK,
    DecayFunction,
    MonteCarloConfig,
    SpreadEstimate,
    observe_at,
    simulate_batch,
    simulate_ic,
    stream,
)
from .graph import InfluenceGraph, residual_graph
from .selectors import (
    SeedSet,
    SigmaObjective,
    select_gdd,
    select_greedy,
    select_rmax,
    select_spic,
)

TAG_PHASE2_SELECT = 7

HEURISTIC_SELECTORS = ("sd", "wd", "gdd")
OBJECTIVE_SELECTORS = ("greedy", "rmax", "spic", "face")
ALL_SELECTORS = HEURISTIC_SELECTORS + OBJECTIVE_SELECTORS


@dataclass
class TwoPhasePlan:
    k1: int
    k2: int
    d: int
    mode: str = "myopic"  # myopic | farsighted
    selector: str = "gdd"
    selector2: str | None = None  # defaults to selector
    s1: SeedSet | None = None     # pre-chosen first-phase seeds, else selected

    def __post_init__(self):
        if self.mode not in ("myopic", "farsighted"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.selector not in ALL_SELECTORS:
            raise ValueError(f"unknown selector {self.selector!r}")
        if self.selector2 is None:
            self.selector2 = self.selector
        if self.k1 < 0 or self.k2 < 0 or self.d < 0:
            raise ValueError("k1, k2, d must be non-negative")
        if self.s1 is not None and len(self.s1.nodes) > self.k1:
            raise ValueError("s1 exceeds k1")

    @property
    def k(self) -> int:
        return self.k1 + self.k2


@dataclass
class TwoPhaseResult:
    spread: SpreadEstimate
    realized_s2_examples: list
    progression: np.ndarray  # expected newly-activated count per time step

    def progression_rows(self):
        for t, v in enumerate(self.progression):
            yield t, float(v)


def _second_phase_heuristic(selector2):
    def pick(res: InfluenceGraph, recent_local, k2_eff, outer_idx, master_seed):
        if selector2 == "gdd":
            return select_gdd(res, k2_eff, preselected=recent_local).nodes
        return _select_discount_excluding(res, k2_eff, recent_local,
                                          weighted=(selector2 == "wd"))
    return pick


def _select_discount_excluding(res, k2_eff, recent_local, weighted):
    # SD/WD with the recent set treated as already picked (removed first)
    picked = _select_discount_with_preselected(res, k2_eff, recent_local, weighted)
    return picked


def _select_discount_with_preselected(graph, k, preselected, weighted):
    score = np.zeros(graph.n)
    for u, adj in enumerate(graph.out_edges):
        score[u] = sum(p for _, p in adj) if weighted else len(adj)
    removed = np.zeros(graph.n, dtype=bool)
    for u in preselected:
        removed[u] = True
        for z, p in graph.in_edges[u]:
            score[z] -= p if weighted else 1
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
    return picked


def _second_phase_objective(selector2, sims):
    def pick(res: InfluenceGraph, recent_local, k2_eff, outer_idx, master_seed):
        cfg = MonteCarloConfig(master_seed=master_seed)
        base = frozenset(recent_local)
        sigma = SigmaObjective(res, cfg, sims=sims, tag=TAG_PHASE2_SELECT)
        objective = lambda s: sigma(base | s)
        if selector2 == "greedy":
            return select_greedy(res, k2_eff, objective).nodes
        if selector2 == "rmax":
            return select_rmax(res, k2_eff, objective, master_seed=master_seed).nodes
        if selector2 == "spic":
            return select_spic(res, k2_eff, objective, master_seed=master_seed).nodes
        if selector2 == "face":
            from .face import face_select
            return face_select(res, k2_eff, objective, master_seed=master_seed).nodes
        raise ValueError(selector2)
    return pick


def _nested_run(graph, s1, d, k2, config, decay, second_phase, collect_examples=0):
    """Shared nested Monte-Carlo engine; returns (estimate, progression, s2s)."""
    s1 = sorted(set(int(v) for v in s1))
    m1, m2 = config.phase1_sims, config.phase2_sims
    outer_means = np.empty(m1)
    prog = np.zeros(graph.n + 2)
    s2_examples = []
    trivial_decay = decay is None or decay.is_trivial
    for i in range(m1):
        trace = simulate_ic(graph, s1, stream(config.master_seed, TAG_PHASE1, i),
                            stop_at=d)
        obs = observe_at(trace, d)
        res, kept = residual_graph(graph, sorted(obs.already))
        local = {int(o): li for li, o in enumerate(kept)}
        recent_local = sorted(local[v] for v in obs.recent)
        k2_eff = min(k2, res.n - len(recent_local))
        s2_local = (second_phase(res, recent_local, k2_eff, i, config.master_seed)
                    if k2_eff > 0 else [])
        if len(s2_examples) < collect_examples:
            s2_examples.append(sorted(int(kept[v]) for v in s2_local))
        inner_seeds = recent_local + list(s2_local)
        times = simulate_batch(res, inner_seeds,
                               stream(config.master_seed, TAG_PHASE2, i), m2)
        if trivial_decay:
            base = float(len(obs.already))
            inner_vals = base + (times >= 0).sum(axis=1)
        else:
            at = trace.activation_time
            base = float(decay.weights(np.where((at >= 0) & (at < d), at, -1)).sum())
            shifted = np.where(times >= 0, times + d, -1)
            inner_vals = base + decay.weights(shifted).sum(axis=1)
        outer_means[i] = inner_vals.mean()
        # progression bookkeeping (plain counts; sums to the sigma-mode mean)
        for v in obs.already:
            prog[trace.activation_time[v]] += 1.0
        if times.size:
            maxt = int(times.max())
            for t2 in range(0, maxt + 1):
                prog[d + t2] += (times == t2).sum() / m2
    mean = float(outer_means.mean())
    stderr = (float(outer_means.std(ddof=1) / math.sqrt(m1)) if m1 > 1 else 0.0)
    prog /= m1
    last = int(np.max(np.nonzero(prog)[0])) if prog.any() else 0
    est = SpreadEstimate(mean=mean, stderr=stderr, samples=m1 * m2)
    return est, prog[:last + 1], s2_examples


def eval_h(graph: InfluenceGraph, s1, d: int, k2: int, config: MonteCarloConfig,
           decay: DecayFunction | None = None) -> SpreadEstimate:
    """Two-phase surrogate with GDD second-phase selection (the production
    objective: orders of magnitude cheaper than greedy)."""
    est, _, _ = _nested_run(graph, s1, d, k2, config, decay,
                            _second_phase_heuristic("gdd"))
    return est


def eval_g(graph: InfluenceGraph, s1, d: int, k2: int, config: MonteCarloConfig,
           decay: DecayFunction | None = None,
           greedy_sims: int | None = None) -> SpreadEstimate:
    """Two-phase surrogate with greedy second-phase selection; validation-only
    path (costly), restricted to small graphs in practice."""
    sims = greedy_sims if greedy_sims is not None else config.phase2_sims
    est, _, _ = _nested_run(graph, s1, d, k2, config, decay,
                            _second_phase_objective("greedy", sims))
    return est


def _single_phase_result(graph, seeds, config, decay, sims):
    """Single-phase spread plus progression using the TAG_SINGLE streams,
    bit-identical to estimate_spread / estimate_temporal_spread."""
    seeds = sorted(set(int(v) for v in seeds))
    trivial = decay is None or decay.is_trivial
    vals = np.empty(sims)
    prog = np.zeros(graph.n + 1)
    done = 0
    chunk_idx = 0
    while done < sims:
        reps = min(CHUNK, sims - done)
        times = simulate_batch(graph, seeds, stream(config.master_seed, TAG_SINGLE, chunk_idx), reps)
        if trivial:
            vals[done:done + reps] = (times >= 0).sum(axis=1)
        else:
            vals[done:done + reps] = decay.weights(times).sum(axis=1)
        if times.size and seeds:
            for t in range(int(times.max()) + 1):
                prog[t] += (times == t).sum()
        done += reps
        chunk_idx += 1
    prog /= sims
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(sims)) if sims > 1 else 0.0
    last = int(np.max(np.nonzero(prog)[0])) if prog.any() else 0
    return SpreadEstimate(mean=mean, stderr=stderr, samples=sims), prog[:last + 1]


def _phase1_objective(graph, plan, config, decay, farsighted_config):
    if plan.mode == "myopic" or plan.selector in HEURISTIC_SELECTORS:
        if decay is not None and not decay.is_trivial:
            from .selectors import NuObjective
            return NuObjective(graph, decay, config, sims=config.phase1_sims)
        return SigmaObjective(graph, config, sims=config.phase1_sims)
    far = farsighted_config or MonteCarloConfig(
        phase1_sims=max(1, config.phase1_sims // 10),
        phase2_sims=max(1, config.phase2_sims // 10),
        master_seed=config.master_seed)
    cache = {}

    def h_objective(s):
        key = frozenset(s)
        if key not in cache:
            cache[key] = eval_h(graph, key, plan.d, plan.k2, far, decay).mean
        return cache[key]

    return h_objective


def select_phase1(graph, plan: TwoPhasePlan, config, decay=None,
                  farsighted_config=None) -> SeedSet:
    if plan.s1 is not None:
        return plan.s1
    if plan.k1 == 0:
        return SeedSet(nodes=[], budget=0)
    sel = plan.selector
    if sel == "sd":
        from .selectors import select_sd
        return select_sd(graph, plan.k1)
    if sel == "wd":
        from .selectors import select_wd
        return select_wd(graph, plan.k1)
    if sel == "gdd":
        return select_gdd(graph, plan.k1)
    objective = _phase1_objective(graph, plan, config, decay, farsighted_config)
    if sel == "greedy":
        return select_greedy(graph, plan.k1, objective)
    if sel == "rmax":
        return select_rmax(graph, plan.k1, objective, master_seed=config.master_seed)
    if sel == "spic":
        return select_spic(graph, plan.k1, objective, master_seed=config.master_seed)
    if sel == "face":
        from .face import face_select
        return face_select(graph, plan.k1, objective, master_seed=config.master_seed)
    raise ValueError(sel)


def run_two_phase(graph: InfluenceGraph, plan: TwoPhasePlan, config: MonteCarloConfig,
                  decay: DecayFunction | None = None,
                  farsighted_config: MonteCarloConfig | None = None):
    """Full two-phase execution; returns (result, s1).

    With k2=0 and d=0 this reduces exactly to a single-phase run of the
    selector (same estimator streams as estimate_spread)."""
    s1 = select_phase1(graph, plan, config, decay, farsighted_config)
    if plan.k2 == 0 and plan.d == 0:
        est, prog = _single_phase_result(graph, s1.nodes, config, decay,
                                         config.single_phase_sims)
        return TwoPhaseResult(spread=est, realized_s2_examples=[], progression=prog), s1
    if plan.selector2 in HEURISTIC_SELECTORS:
        second = _second_phase_heuristic(plan.selector2)
    else:
        second = _second_phase_objective(plan.selector2, config.phase2_sims)
    est, prog, s2s = _nested_run(graph, s1.nodes, plan.d, plan.k2, config, decay,
                                 second, collect_examples=5)
    return TwoPhaseResult(spread=est, realized_s2_examples=s2s, progression=prog), s1
