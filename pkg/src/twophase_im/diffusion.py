"""Monte-Carlo independent-cascade simulation and spread estimators.

Discrete-step IC semantics: a node activated at step t-1 gets one chance to
activate each inactive out-neighbor at step t. Edges are sampled
on-activation, which is equivalent to pre-sampling a live graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import InfluenceGraph

NEVER = -1

# RNG stream tags, one per simulation context.
TAG_SINGLE = 0
TAG_PHASE1 = 1
TAG_PHASE2 = 2
TAG_FACE = 3
TAG_RMAX = 4
TAG_SPIC = 5
TAG_PROBE = 6

CHUNK = 4096       # replicates per derived RNG stream in batch simulation
DENSE_LIMIT = 600  # above this node count, use sparse matrices


def stream(master_seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Derived RNG stream for (master_seed, tag, index); order-insensitive."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(tag, index)))


@dataclass(frozen=True)
class DecayFunction:
    """Time-value weighting of activations. Non-increasing, values in [0,1]."""

    kind: str  # "constant-one" | "exponential"
    delta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant-one", "exponential"):
            raise ValueError(f"unknown decay kind: {self.kind}")
        if not (0.0 <= self.delta <= 1.0):
            raise ValueError("delta must lie in [0, 1]")

    @classmethod
    def constant_one(cls) -> "DecayFunction":
        return cls(kind="constant-one")

    @classmethod
    def exponential(cls, delta: float) -> "DecayFunction":
        return cls(kind="exponential", delta=delta)

    @property
    def is_trivial(self) -> bool:
        return self.kind == "constant-one" or self.delta == 1.0

    def __call__(self, t):
        if self.kind == "constant-one":
            return np.ones_like(np.asarray(t, dtype=float))
        return np.asarray(self.delta, dtype=float) ** np.asarray(t)

    def weights(self, times: np.ndarray) -> np.ndarray:
        """Per-node value for an activation-time array; 0 where never active."""
        active = times >= 0
        if self.kind == "constant-one":
            return active.astype(float)
        return np.where(active, np.power(self.delta, np.maximum(times, 0), dtype=float), 0.0)


@dataclass
class MonteCarloConfig:
    single_phase_sims: int = 10_000
    phase1_sims: int = 1_000
    phase2_sims: int = 1_000
    master_seed: int = 0

    def __post_init__(self):
        if min(self.single_phase_sims, self.phase1_sims, self.phase2_sims) < 1:
            raise ValueError("simulation counts must be >= 1")


@dataclass
class DiffusionTrace:
    """Per-node activation times; NEVER (-1) marks nodes never activated."""

    activation_time: np.ndarray

    @property
    def final_active_count(self) -> int:
        return int(np.count_nonzero(self.activation_time >= 0))

    def active_at_or_before(self, t: int) -> np.ndarray:
        at = self.activation_time
        return np.flatnonzero((at >= 0) & (at <= t))


@dataclass(frozen=True)
class Observation:
    """Partial observation at step d: already- and recently-activated sets."""

    at_step: int
    already: frozenset
    recent: frozenset


@dataclass
class SpreadEstimate:
    mean: float
    stderr: float
    samples: int

    def as_dict(self):
        return {"mean": self.mean, "stderr": self.stderr, "samples": self.samples}


def _check_seeds(graph: InfluenceGraph, seeds) -> list:
    seeds = sorted(set(int(s) for s in seeds))
    if seeds and (seeds[0] < 0 or seeds[-1] >= graph.n):
        raise ValueError(f"seed id out of range 0..{graph.n - 1}")
    return seeds


def simulate_ic(graph: InfluenceGraph, seeds, rng: np.random.Generator,
                stop_at: int | None = None) -> DiffusionTrace:
    """One IC replicate; returns the full activation-time trace.

    Within a step, recently activated nodes attempt in ascending id order
    (outcome-neutral under IC, but fixes traces bit-exactly).
    """
    seeds = _check_seeds(graph, seeds)
    if stop_at is None:
        stop_at = graph.n
    times = np.full(graph.n, NEVER, dtype=np.int32)
    if not seeds:
        return DiffusionTrace(times)
    times[seeds] = 0
    frontier = seeds
    t = 0
    while frontier and t < stop_at:
        t += 1
        nxt = []
        for u in frontier:
            for v, p in graph.out_edges[u]:
                if times[v] == NEVER and rng.random() < p:
                    times[v] = t
                    nxt.append(v)
        frontier = sorted(nxt)
    return DiffusionTrace(times)


def observe_at(trace: DiffusionTrace, d: int) -> Observation:
    """Classify activations at step d: already (< d) vs recent (== d)."""
    if d < 0:
        raise ValueError("observation step must be >= 0")
    at = trace.activation_time
    already = np.flatnonzero((at >= 0) & (at < d))
    recent = np.flatnonzero(at == d)
    return Observation(at_step=d,
                       already=frozenset(int(v) for v in already),
                       recent=frozenset(int(v) for v in recent))


class _SimMatrices:
    """Cached per-graph matrices for vectorized batch simulation.

    L[u, v] = log(1 - p_uv) for p < 1 (so survival of v against frontier F is
    exp(sum_{u in F} L[u, v])); B marks probability-1 edges separately since
    log(0) cannot enter the matmul.
    """

    def __init__(self, graph: InfluenceGraph):
        n = graph.n
        self.n = n
        rows, cols, vals = [], [], []
        brows, bcols = [], []
        for u, adj in enumerate(graph.out_edges):
            for v, p in adj:
                if p >= 1.0:
                    brows.append(u)
                    bcols.append(v)
                elif p > 0.0:
                    rows.append(u)
                    cols.append(v)
                    vals.append(math.log1p(-p))
        if n <= DENSE_LIMIT:
            L = np.zeros((n, n))
            L[rows, cols] = vals
            B = np.zeros((n, n))
            B[brows, bcols] = 1.0
            self.L, self.B = L, B
            self.sparse = False
        else:
            from scipy import sparse

            self.L = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
            self.B = sparse.csr_matrix((np.ones(len(brows)), (brows, bcols)), shape=(n, n))
            self.sparse = True
        self.has_sure = bool(brows)


def _sim_matrices(graph: InfluenceGraph) -> _SimMatrices:
    if graph._sim_cache is None:
        graph._sim_cache = _SimMatrices(graph)
    return graph._sim_cache


def simulate_batch(graph: InfluenceGraph, seeds, rng: np.random.Generator,
                   reps: int, stop_at: int | None = None) -> np.ndarray:
    """Vectorized IC: returns a (reps, n) activation-time matrix.

    Per step, a node's activation probability against the frontier is
    1 - prod(1 - p_uv), exact for independent per-edge trials since each
    frontier node attempts each edge exactly once.
    """
    seeds = _check_seeds(graph, seeds)
    n = graph.n
    if stop_at is None:
        stop_at = n
    times = np.full((reps, n), NEVER, dtype=np.int32)
    if not seeds or n == 0:
        return times
    times[:, seeds] = 0
    mats = _sim_matrices(graph)
    active = np.zeros((reps, n), dtype=bool)
    active[:, seeds] = True
    frontier = active.copy()
    t = 0
    while t < stop_at:
        live = frontier.any(axis=1)
        if not live.any():
            break
        t += 1
        u = rng.random((reps, n))
        ffloat = frontier.astype(float)
        logsurv = ffloat @ mats.L
        if mats.sparse:
            logsurv = np.asarray(logsurv)
        prob = -np.expm1(logsurv)
        hit = u < prob
        if mats.has_sure:
            sure = ffloat @ mats.B
            if mats.sparse:
                sure = np.asarray(sure)
            hit |= sure > 0
        newly = hit & ~active
        times[newly] = t
        active |= newly
        frontier = newly
    return times


def _batch_values(graph, seeds, sims, master_seed, tag, value_fn, stop_at=None):
    """Chunked batch simulation; value_fn maps a times matrix to per-replicate
    values. Deterministic given (graph, seeds, master_seed, sims)."""
    vals = np.empty(sims)
    done = 0
    chunk_idx = 0
    while done < sims:
        reps = min(CHUNK, sims - done)
        rng = stream(master_seed, tag, chunk_idx)
        times = simulate_batch(graph, seeds, rng, reps, stop_at=stop_at)
        vals[done:done + reps] = value_fn(times)
        done += reps
        chunk_idx += 1
    return vals


def _estimate(vals: np.ndarray) -> SpreadEstimate:
    sims = len(vals)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(sims)) if sims > 1 else 0.0
    return SpreadEstimate(mean=mean, stderr=stderr, samples=sims)


def estimate_spread(graph: InfluenceGraph, seeds, config: MonteCarloConfig,
                    sims: int | None = None, tag: int = TAG_SINGLE) -> SpreadEstimate:
    """Monte-Carlo estimate of the expected final active count."""
    sims = config.single_phase_sims if sims is None else sims
    if sims < 1:
        raise ValueError("sims must be >= 1")
    seeds = _check_seeds(graph, seeds)
    if not seeds:
        return SpreadEstimate(mean=0.0, stderr=0.0, samples=sims)
    vals = _batch_values(graph, seeds, sims, config.master_seed, tag,
                         lambda times: (times >= 0).sum(axis=1))
    return _estimate(vals)


def estimate_temporal_spread(graph: InfluenceGraph, seeds, decay: DecayFunction,
                             config: MonteCarloConfig, sims: int | None = None,
                             tag: int = TAG_SINGLE) -> SpreadEstimate:
    """Decay-weighted spread estimate; replicate-for-replicate equal to
    estimate_spread when the decay is trivial (same streams, same traces)."""
    sims = config.single_phase_sims if sims is None else sims
    if sims < 1:
        raise ValueError("sims must be >= 1")
    seeds = _check_seeds(graph, seeds)
    if not seeds:
        return SpreadEstimate(mean=0.0, stderr=0.0, samples=sims)
    vals = _batch_values(graph, seeds, sims, config.master_seed, tag,
                         lambda times: decay.weights(times).sum(axis=1))
    return _estimate(vals)


def trace_csv_rows(trace: DiffusionTrace):
    """CSV dump rows (node_id, activation_time); blank time for never."""
    for v, t in enumerate(trace.activation_time):
        yield v, (int(t) if t >= 0 else "")
