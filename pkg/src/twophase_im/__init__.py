"""Two-phase influence maximization under the independent cascade model.

Library layout:

- graph: edge-list ingestion, WC/TV probability transforms, residual graphs
- diffusion: per-replicate and vectorized batch IC simulation, spread estimators
- oracle: exact small-instance values by live-graph enumeration
- selectors: SD, WD, GDD, greedy, RMax, SPIC seed selection
- face: fully adaptive cross-entropy optimization (plain and joint modes)
- two_phase: surrogate objectives g/h and the myopic/farsighted pipeline
- schedule: (k1, d) grid search, golden-section / sequential-delay search
- cli: the ``tpim`` command-line harness with replayable run records
"""

from .diffusion import (
    DecayFunction,
    DiffusionTrace,
    MonteCarloConfig,
    Observation,
    SpreadEstimate,
    estimate_spread,
    estimate_temporal_spread,
    observe_at,
    simulate_batch,
    simulate_ic,
)
from .face import CeConfig, CeDistribution, face_joint_optimize, face_select, init_weighted
from .graph import (
    GraphError,
    InfluenceGraph,
    RawEdgeList,
    apply_tv_transform,
    apply_wc_transform,
    build_graph,
    load_edge_list,
    load_graph,
    residual_graph,
    save_graph,
)
from .instances import BUILTINS, example1_graph, les_miserables_wc, random_small_graph
from .oracle import ExactOracle, OracleCapError, exact_f, exact_nu, exact_sigma, get_oracle
from .schedule import (
    GridResult,
    SearchConfig,
    estimate_D,
    exhaustive_grid,
    golden_section_k1,
    sequential_d_search,
)
from .selectors import (
    SeedSet,
    select_gdd,
    select_greedy,
    select_rmax,
    select_sd,
    select_spic,
    select_wd,
    shapley_values,
)
from .two_phase import TwoPhasePlan, TwoPhaseResult, eval_g, eval_h, run_two_phase

__version__ = "0.1.0"
