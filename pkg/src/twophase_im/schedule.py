"""Budget-split and delay optimization: exhaustive (k1, d) grid search and
golden-section search over k1 with a nested sequential delay search.

The spread surface is treated as unimodal in k1 and in d separately, never
jointly; only nested one-dimensional searches are implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .diffusion import (
    TAG_PROBE,
    DecayFunction,
    MonteCarloConfig,
    SpreadEstimate,
    simulate_batch,
    stream,
)
from .graph import InfluenceGraph
from .selectors import select_wd
from .two_phase import TwoPhasePlan, run_two_phase

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
D_MARGIN = 2  # safety steps added past the observed stagnation point


@dataclass
class SearchConfig:
    k_total: int
    d_max: int
    decay: DecayFunction = field(default_factory=DecayFunction.constant_one)
    k1_grid_step: int = 0          # 0 means max(1, k_total // 20)
    objective_mode: str = ""       # sigma | nu; default follows the decay
    patience: int = 2              # sequential d-search non-improvement budget
    mc: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    max_evaluations: int = 5000

    def __post_init__(self):
        if self.k_total < 1:
            raise ValueError("k_total must be >= 1")
        if self.d_max < 0:
            raise ValueError("d_max must be >= 0")
        if self.k1_grid_step == 0:
            self.k1_grid_step = max(1, self.k_total // 20)
        if self.k1_grid_step < 1:
            raise ValueError("k1_grid_step must be >= 1")
        if not self.objective_mode:
            self.objective_mode = "sigma" if self.decay.is_trivial else "nu"
        if self.objective_mode not in ("sigma", "nu"):
            raise ValueError(f"unknown objective mode {self.objective_mode!r}")

    @property
    def effective_decay(self) -> DecayFunction | None:
        return None if self.objective_mode == "sigma" else self.decay


@dataclass
class GridResult:
    entries: list   # (k1, d, SpreadEstimate)
    best: tuple     # (k1, d)

    def best_estimate(self) -> SpreadEstimate:
        for k1, d, est in self.entries:
            if (k1, d) == self.best:
                return est
        raise KeyError(self.best)

    def csv_rows(self):
        for k1, d, est in self.entries:
            yield k1, d, est.mean, est.stderr


def _make_evaluator(graph, config: SearchConfig, selector):
    """Memoized (k1, d) -> SpreadEstimate.

    ``selector`` is either a selector id (runs the two-phase pipeline) or a
    callable (k1, d) -> float | SpreadEstimate for synthetic objectives."""
    memo = {}
    k = config.k_total

    def evaluate(k1, d):
        if not (0 <= k1 <= k):
            raise ValueError(f"k1 {k1} outside [0, {k}]")
        if k1 == k:
            d = 0  # no second phase, delay is meaningless
        key = (k1, d)
        if key in memo:
            return memo[key]
        if callable(selector):
            got = selector(k1, d)
            est = got if isinstance(got, SpreadEstimate) else SpreadEstimate(
                mean=float(got), stderr=0.0, samples=0)
        else:
            plan = TwoPhasePlan(k1=k1, k2=k - k1, d=d, selector=selector)
            result, _ = run_two_phase(graph, plan, config.mc, config.effective_decay)
            est = result.spread
        memo[key] = est
        return est

    return evaluate


def _tie_pick(candidates):
    """Best (k1, d, est): highest mean; entries within one pooled stderr of
    the top are tied and resolve to smaller k1, then smaller d."""
    top = max(candidates, key=lambda e: e[2].mean)
    tied = []
    for k1, d, est in candidates:
        pooled = math.hypot(est.stderr, top[2].stderr)
        if top[2].mean - est.mean <= pooled:
            tied.append((k1, d, est))
    return min(tied, key=lambda e: (e[0], e[1]))


def exhaustive_grid(graph: InfluenceGraph, config: SearchConfig, selector) -> GridResult:
    """Evaluate every (k1, d) grid cell; k1 = k collapses to d = 0."""
    k, D, step = config.k_total, config.d_max, config.k1_grid_step
    k1s = sorted(set(list(range(0, k + 1, step)) + [k]))
    cells = sum(1 if k1 == k else D + 1 for k1 in k1s)
    if cells > config.max_evaluations:
        raise ValueError(
            f"grid has {cells} cells, above the evaluation budget of {config.max_evaluations}")
    evaluate = _make_evaluator(graph, config, selector)
    entries = []
    for k1 in k1s:
        for d in ([0] if k1 == k else range(D + 1)):
            entries.append((k1, d, evaluate(k1, d)))
    best_k1, best_d, _ = _tie_pick(entries)
    return GridResult(entries=entries, best=(best_k1, best_d))


def sequential_d_search(graph: InfluenceGraph, k1: int, config: SearchConfig,
                        selector, evaluate=None):
    """Best delay for a fixed k1: probe d = 0, 1, ... and stop after
    ``patience`` consecutive non-improvements. Without decay the value is
    non-decreasing in d, so the search jumps straight to d = d_max."""
    evaluate = evaluate or _make_evaluator(graph, config, selector)
    D = config.d_max
    if config.effective_decay is None or config.effective_decay.is_trivial:
        return D, evaluate(k1, D)
    best_d, best = 0, evaluate(k1, 0)
    fails = 0
    for d in range(1, D + 1):
        est = evaluate(k1, d)
        if est.mean > best.mean:
            best_d, best = d, est
            fails = 0
        else:
            fails += 1
            if fails >= config.patience:
                break
    return best_d, best


def golden_section_k1(graph: InfluenceGraph, config: SearchConfig, selector):
    """Golden-section search over k1 on the grid, each probe scored by its
    best delay; ends with a hill-climb over neighboring grid points so exact
    unimodal objectives are recovered exactly. Returns (k1, d, estimate)."""
    k, step = config.k_total, config.k1_grid_step
    pts = sorted(set(list(range(0, k + 1, step)) + [k]))
    evaluate = _make_evaluator(graph, config, selector)
    inner = {}

    def value(idx):
        k1 = pts[idx]
        if k1 not in inner:
            if k1 == k:
                inner[k1] = (0, evaluate(k1, 0))
            else:
                inner[k1] = sequential_d_search(graph, k1, config, selector, evaluate)
        return inner[k1][1].mean

    lo, hi = 0, len(pts) - 1
    while hi - lo > 2:
        span = hi - lo
        c = hi - max(1, round(INVPHI * span))
        d_probe = lo + max(1, round(INVPHI * span))
        if not (lo < c <= d_probe < hi):
            break
        if c == d_probe:
            d_probe = c + 1
        if value(c) >= value(d_probe):
            hi = d_probe
        else:
            lo = c
    best_idx = min(range(lo, hi + 1), key=lambda i: (-value(i), pts[i]))
    while best_idx > 0 and value(best_idx - 1) > value(best_idx):
        best_idx -= 1
    while best_idx < len(pts) - 1 and value(best_idx + 1) > value(best_idx):
        best_idx += 1
    k1 = pts[best_idx]
    best_d, est = inner[k1]
    return k1, best_d, est


def estimate_D(graph: InfluenceGraph, k: int, mc: MonteCarloConfig | None = None,
               margin: int = D_MARGIN) -> int:
    """Empirical delay horizon: latest activation step over probe replicates
    seeded by weighted discount, plus a safety margin; capped at n."""
    mc = mc or MonteCarloConfig()
    k = max(1, min(k, graph.n))
    seeds = select_wd(graph, k).nodes
    times = simulate_batch(graph, seeds, stream(mc.master_seed, TAG_PROBE),
                           mc.phase1_sims)
    horizon = int(times.max()) + margin
    return max(1, min(horizon, graph.n))
