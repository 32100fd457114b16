import numpy as np
import pytest

from conftest import instance_family
from twophase_im.diffusion import DecayFunction, MonteCarloConfig
from twophase_im.graph import RawEdgeList, build_graph
from twophase_im.oracle import get_oracle
from twophase_im.schedule import (
    SearchConfig,
    estimate_D,
    exhaustive_grid,
    golden_section_k1,
    sequential_d_search,
)
from twophase_im.two_phase import TwoPhasePlan, run_two_phase


class CountingObjective:
    def __init__(self, fn):
        self.fn = fn
        self.calls = []

    def __call__(self, k1, d):
        self.calls.append((k1, d))
        return self.fn(k1, d)


def test_search_config_defaults_and_validation():
    cfg = SearchConfig(k_total=100, d_max=5)
    assert cfg.k1_grid_step == 5
    assert cfg.objective_mode == "sigma"
    cfg = SearchConfig(k_total=4, d_max=5, decay=DecayFunction.exponential(0.5))
    assert cfg.objective_mode == "nu"
    with pytest.raises(ValueError):
        SearchConfig(k_total=0, d_max=5)


def test_grid_forces_single_phase_cell(example1):
    cfg = SearchConfig(k_total=2, d_max=2, mc=MonteCarloConfig(master_seed=0))
    obj = CountingObjective(lambda k1, d: float(k1 + d))
    exhaustive_grid(example1, cfg, obj)
    assert (2, 0) in obj.calls
    assert all(d == 0 for k1, d in obj.calls if k1 == 2)


def test_grid_exact_oracle_matches_argmax(example1):
    orc = get_oracle(example1)

    def exact(k1, d):
        if k1 == 2:
            return orc.max_f(2, 0, 0)[0]
        return orc.max_f(k1, d, 2 - k1)[0]

    cfg = SearchConfig(k_total=2, d_max=3, mc=MonteCarloConfig(master_seed=0))
    grid = exhaustive_grid(example1, cfg, exact)
    best_val = max(est.mean for _, _, est in grid.entries)
    assert grid.best_estimate().mean == pytest.approx(best_val, abs=1e-12)
    # ties resolve toward the cheaper plan
    tied = [(k1, d) for k1, d, est in grid.entries
            if est.mean == pytest.approx(best_val, abs=1e-12)]
    assert grid.best == min(tied)


def test_grid_evaluation_budget_enforced(example1):
    cfg = SearchConfig(k_total=2, d_max=3, mc=MonteCarloConfig(master_seed=0),
                       max_evaluations=2)
    with pytest.raises(ValueError, match="budget"):
        exhaustive_grid(example1, cfg, lambda k1, d: 0.0)


def test_grid_single_phase_cell_equals_pipeline(example1):
    mc = MonteCarloConfig(single_phase_sims=2_000, phase1_sims=50,
                          phase2_sims=50, master_seed=7)
    cfg = SearchConfig(k_total=2, d_max=1, mc=mc)
    grid = exhaustive_grid(example1, cfg, "gdd")
    cell = {(k1, d): est for k1, d, est in grid.entries}[(2, 0)]
    plan = TwoPhasePlan(k1=2, k2=0, d=0, selector="gdd")
    direct, _ = run_two_phase(example1, plan, mc)
    assert cell.mean == direct.spread.mean


def test_sequential_d_short_circuits_without_decay(example1):
    cfg = SearchConfig(k_total=2, d_max=4, mc=MonteCarloConfig(master_seed=0))
    obj = CountingObjective(lambda k1, d: float(d))
    d, est = sequential_d_search(example1, 1, cfg, obj)
    assert d == 4 and est.mean == 4.0
    assert obj.calls == [(1, 4)]


def test_sequential_d_probes_until_patience(example1):
    peaked = {0: 1.0, 1: 5.0, 2: 4.0, 3: 3.0, 4: 2.0}
    cfg = SearchConfig(k_total=2, d_max=4,
                       decay=DecayFunction.exponential(0.9),
                       mc=MonteCarloConfig(master_seed=0))
    obj = CountingObjective(lambda k1, d: peaked[d])
    d, est = sequential_d_search(example1, 1, cfg, obj)
    assert (d, est.mean) == (1, 5.0)
    assert [c[1] for c in obj.calls] == [0, 1, 2, 3]


def test_golden_section_recovers_synthetic_unimodal(example1):
    cfg = SearchConfig(k_total=10, d_max=0, mc=MonteCarloConfig(master_seed=0))
    for peak in (0, 3, 7, 10):
        k1, d, est = golden_section_k1(example1, cfg, lambda k1, d, p=peak: -(k1 - p) ** 2)
        assert k1 == peak
        assert est.mean == 0.0


def test_golden_section_uses_fewer_probes_than_grid(example1):
    cfg = SearchConfig(k_total=10, d_max=0, mc=MonteCarloConfig(master_seed=0))
    obj = CountingObjective(lambda k1, d: -(k1 - 4) ** 2)
    golden_section_k1(example1, cfg, obj)
    assert len(set(obj.calls)) < 11


def test_golden_section_matches_grid_on_exact_instances():
    for g in instance_family(5, seed=31, max_nodes=6, max_edges=9):
        orc = get_oracle(g)
        k = 2

        def exact(k1, d):
            if k1 == k:
                return orc.max_f(k, 0, 0)[0]
            return orc.max_f(k1, d, k - k1)[0]

        cfg = SearchConfig(k_total=k, d_max=2, mc=MonteCarloConfig(master_seed=0))
        grid = exhaustive_grid(g, cfg, exact)
        _, _, est = golden_section_k1(g, cfg, exact)
        best = max(e.mean for _, _, e in grid.entries)
        assert est.mean >= best - 0.01 * abs(best) - 1e-12


def test_estimate_d_on_sure_chain():
    pairs = [(str(i), str(i + 1), 1.0) for i in range(5)]
    pairs += [("8", "9", 0.0)]  # padding so the cap at n does not bind
    g = build_graph(RawEdgeList(directed=True, pairs=pairs))
    got = estimate_D(g, 1, MonteCarloConfig(phase1_sims=50, master_seed=0))
    assert got == 5 + 2


def test_estimate_d_dead_graph_returns_margin():
    g = build_graph(RawEdgeList(directed=True, pairs=[("a", "b", 0.0)]))
    got = estimate_D(g, 1, MonteCarloConfig(phase1_sims=20, master_seed=0))
    assert got == 2
