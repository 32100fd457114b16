"""Command-line experiment harness.

Every command resolves a graph, runs a core function on a plain parameter
dict, writes a replayable run record, and prints its results as JSON. The
``rerun`` command replays a stored record and verifies bit-exact agreement.

Exit codes: 0 success, 1 usage error, 2 data error, 3 reproducibility failure.
"""

from __future__ import annotations

import csv
import hashlib
import json
import secrets
import sys
import time
from pathlib import Path

import click

from .diffusion import DecayFunction, MonteCarloConfig, estimate_spread, estimate_temporal_spread
from .face import face_joint_optimize
from .graph import (
    GraphError,
    apply_tv_transform,
    apply_wc_transform,
    build_graph,
    is_native_graph_file,
    load_edge_list,
    load_graph,
    save_graph,
)
from .instances import BUILTINS
from .oracle import OracleCapError, get_oracle
from .records import (
    RecordError,
    ReproducibilityError,
    diff_results,
    graph_fingerprint,
    load_record,
    output_lock,
    write_record,
)
from .schedule import SearchConfig, estimate_D, exhaustive_grid, golden_section_k1
from .two_phase import ALL_SELECTORS, TwoPhasePlan, eval_h, run_two_phase

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_REPRO = 0, 1, 2, 3


# -- graph resolution ------------------------------------------------------


def make_graph_spec(source, transform="none", tv_seed=0, directed=True):
    if source in BUILTINS:
        if transform != "none":
            raise GraphError(f"builtin graph {source!r} takes no transform")
        return {"source": f"builtin:{source}"}
    path = Path(source)
    if not path.exists():
        raise GraphError(f"graph source {source!r}: no such builtin or file")
    return {"source": f"file:{path}", "transform": transform,
            "tv_seed": tv_seed, "directed": directed}


def resolve_graph(spec):
    kind, _, name = spec["source"].partition(":")
    if kind == "builtin":
        graph = BUILTINS[name]()
    else:
        path = Path(name)
        if not path.exists():
            raise GraphError(f"graph file not found: {path}")
        if is_native_graph_file(path):
            graph = load_graph(path)
        else:
            raw = load_edge_list(path, directed=spec.get("directed", True))
            transform = spec.get("transform", "none")
            if transform == "none":
                graph = build_graph(raw)
            elif transform == "wc":
                graph = apply_wc_transform(raw)
            elif transform == "tv":
                graph = apply_tv_transform(raw, spec.get("tv_seed", 0))
            else:
                raise GraphError(f"unknown transform {transform!r}")
    expected = spec.get("hash")
    if expected and expected != graph_fingerprint(graph):
        raise RecordError("input graph has changed since the record was written")
    return graph


def _ids(graph, text):
    if not text:
        return []
    return [graph.node_id(tok) for tok in text.split(",") if tok]


def _labels(graph, ids):
    return [graph.labels[int(v)] for v in ids]


def _decay(delta):
    return None if delta is None or delta >= 1.0 else DecayFunction.exponential(delta)


# -- core runners (shared by commands and rerun) ---------------------------


def run_transform(params):
    raw = load_edge_list(params["input"], directed=params["directed"])
    if params["model"] == "wc":
        graph = apply_wc_transform(raw)
    else:
        graph = apply_tv_transform(raw, params["seed"])
    save_graph(graph, params["output"])
    return {"n": graph.n, "m": graph.m, "graph_hash": graph_fingerprint(graph)}


def run_select(params):
    graph = resolve_graph(params["graph"])
    k = params["k"]
    decay = _decay(params.get("delta"))
    mc = MonteCarloConfig(single_phase_sims=params["sims"],
                          master_seed=params["master_seed"])
    if k == 0:
        est = (estimate_spread(graph, [], mc) if decay is None
               else estimate_temporal_spread(graph, [], decay, mc))
        return {"seeds": [], "seed_ids": [], "spread": est.as_dict()}
    plan = TwoPhasePlan(k1=k, k2=0, d=0, selector=params["algorithm"])
    result, s1 = run_two_phase(graph, plan, mc, decay)
    return {"seeds": _labels(graph, s1.nodes), "seed_ids": list(s1.nodes),
            "spread": result.spread.as_dict()}


def run_oracle(params):
    graph = resolve_graph(params["graph"])
    orc = get_oracle(graph)
    query = params["query"]
    if query == "sigma":
        value = orc.exact_sigma(_ids(graph, params.get("seeds", "")))
    elif query == "nu":
        decay = DecayFunction.exponential(params["delta"])
        value = orc.exact_nu(_ids(graph, params.get("seeds", "")), decay)
    elif query == "f":
        value = orc.exact_f(_ids(graph, params.get("s1", "")),
                            params["d"], params["k2"])
    else:
        raise GraphError(f"unknown oracle query {query!r}")
    return {"query": query, "value": value}


def run_twophase(params):
    graph = resolve_graph(params["graph"])
    k = params["k"]
    decay = _decay(params.get("delta"))
    mc = MonteCarloConfig(single_phase_sims=params["sims"],
                          phase1_sims=params["phase1_sims"],
                          phase2_sims=params["phase2_sims"],
                          master_seed=params["master_seed"])
    optimize = params["optimize"]
    d_max = params.get("d_max")
    if optimize != "none" and d_max is None:
        d_max = estimate_D(graph, k, mc)
    if optimize == "none":
        d = params["d"]
        if d == "auto":
            d = estimate_D(graph, k, mc)
        plan = TwoPhasePlan(k1=params["k1"], k2=params["k2"], d=int(d),
                            mode=params["mode"], selector=params["algorithm"])
        result, s1 = run_two_phase(graph, plan, mc, decay)
        return {
            "plan": {"k1": plan.k1, "k2": plan.k2, "d": plan.d,
                     "mode": plan.mode, "selector": plan.selector},
            "s1": _labels(graph, s1.nodes),
            "spread": result.spread.as_dict(),
            "s2_examples": [_labels(graph, s2) for s2 in result.realized_s2_examples],
            "progression": [float(x) for x in result.progression],
        }
    search = SearchConfig(k_total=k, d_max=d_max,
                          decay=decay or DecayFunction.constant_one(), mc=mc)
    if optimize == "grid":
        grid = exhaustive_grid(graph, search, params["algorithm"])
        return {
            "best": list(grid.best),
            "spread": grid.best_estimate().as_dict(),
            "grid": [[k1, d, est.mean, est.stderr] for k1, d, est in grid.entries],
        }
    if optimize == "golden":
        k1, d, est = golden_section_k1(graph, search, params["algorithm"])
        return {"best": [k1, d], "spread": est.as_dict()}
    if optimize == "face-joint":
        far = MonteCarloConfig(
            phase1_sims=max(1, params["phase1_sims"] // 10),
            phase2_sims=max(1, params["phase2_sims"] // 10),
            master_seed=params["master_seed"])

        def objective(k1, d, nodes):
            if d == 0:
                est = (estimate_spread(graph, nodes, mc, sims=far.phase1_sims)
                       if decay is None else
                       estimate_temporal_spread(graph, nodes, decay, mc,
                                                sims=far.phase1_sims))
                return est.mean
            return eval_h(graph, nodes, d, k - k1, far, decay).mean

        (k1, d, s1), log = face_joint_optimize(
            graph, k, d_max, objective, master_seed=params["master_seed"],
            return_log=True)
        plan = TwoPhasePlan(k1=k1, k2=k - k1, d=d, selector=params["algorithm"],
                            s1=s1)
        result, s1 = run_two_phase(graph, plan, mc, decay)
        return {
            "best": [k1, d],
            "s1": _labels(graph, s1.nodes),
            "spread": result.spread.as_dict(),
            "face_log": [[e.iteration, e.draws, e.elite_threshold, e.best]
                         for e in log],
        }
    raise GraphError(f"unknown optimize mode {optimize!r}")


CORE = {
    "transform": run_transform,
    "select": run_select,
    "oracle": run_oracle,
    "twophase": run_twophase,
}


# -- artifact writing ------------------------------------------------------


def _write_csvs(results, record_path: Path):
    stem = record_path.with_suffix("")
    if "progression" in results:
        with open(f"{stem}-progression.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "new_activations_mean", "stderr"])
            for t, v in enumerate(results["progression"]):
                w.writerow([t, v, ""])
    if "grid" in results:
        with open(f"{stem}-grid.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k1", "d", "mean", "stderr"])
            w.writerows(results["grid"])
    if "face_log" in results:
        with open(f"{stem}-face-log.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "draws", "elite_threshold", "best"])
            w.writerows(results["face_log"])


def _execute(command, params, output_dir):
    output_dir = Path(output_dir)
    with output_lock(output_dir):
        start = time.perf_counter()
        results = CORE[command](params)
        wall = time.perf_counter() - start
        path = write_record(output_dir, command, params, results, wall)
        _write_csvs(results, path)
    payload = dict(results)
    payload["record"] = str(path)
    click.echo(json.dumps(payload, indent=2, sort_keys=True))
    return results


def _seed_param(seed):
    if seed is None:
        seed = secrets.randbits(32)
        click.echo(f"master seed (generated): {seed}", err=True)
    return int(seed)


def _graph_param(source, transform, tv_seed, undirected):
    spec = make_graph_spec(source, transform, tv_seed, directed=not undirected)
    spec["hash"] = graph_fingerprint(resolve_graph(spec))
    return spec


def graph_options(fn):
    for opt in reversed([
        click.option("--graph", "source", required=True,
                     help="builtin name (example1, lesmis), edge-list file, or native graph file"),
        click.option("--transform", type=click.Choice(["none", "wc", "tv"]),
                     default="none", show_default=True),
        click.option("--tv-seed", type=int, default=0, show_default=True),
        click.option("--undirected", is_flag=True,
                     help="treat edge-list records as undirected"),
    ]):
        fn = opt(fn)
    return fn


# -- commands --------------------------------------------------------------


@click.group()
@click.option("--threads", type=int, default=1, show_default=True,
              help="worker cap (the current implementation is single-threaded)")
def cli(threads):
    """Influence-maximization experiments: selection, two-phase runs,
    exact small-instance oracles, and reproducible records."""


@cli.command()
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.argument("output", type=click.Path(dir_okay=False))
@click.option("--model", type=click.Choice(["wc", "tv"]), required=True)
@click.option("--seed", type=int, default=None, help="master seed (tv draws)")
@click.option("--undirected", is_flag=True)
@click.option("--output-dir", default="runs", show_default=True)
def transform(input, output, model, seed, undirected, output_dir):
    """Assign edge probabilities to an unweighted edge list."""
    params = {"input": str(input), "output": str(output), "model": model,
              "seed": _seed_param(seed), "directed": not undirected}
    _execute("transform", params, output_dir)


@cli.command()
@graph_options
@click.option("--algorithm", type=click.Choice(list(ALL_SELECTORS)), required=True)
@click.option("--k", type=int, required=True)
@click.option("--sims", type=int, default=10_000, show_default=True)
@click.option("--delta", type=float, default=None,
              help="decay factor; omitted or 1 means plain spread")
@click.option("--seed", type=int, default=None)
@click.option("--output-dir", default="runs", show_default=True)
def select(source, transform, tv_seed, undirected, algorithm, k, sims, delta,
           seed, output_dir):
    """Single-phase seed selection plus a Monte-Carlo spread estimate."""
    if k < 0:
        raise GraphError("k must be >= 0")
    params = {"graph": _graph_param(source, transform, tv_seed, undirected),
              "algorithm": algorithm, "k": k, "sims": sims, "delta": delta,
              "master_seed": _seed_param(seed)}
    _execute("select", params, output_dir)


@cli.command()
@graph_options
@click.option("--query", type=click.Choice(["sigma", "nu", "f"]), required=True)
@click.option("--seeds", default="", help="comma-separated node labels")
@click.option("--s1", default="", help="first-phase seed labels (f query)")
@click.option("--d", type=int, default=0)
@click.option("--k2", type=int, default=0)
@click.option("--delta", type=float, default=1.0, show_default=True)
@click.option("--output-dir", default="runs", show_default=True)
def oracle(source, transform, tv_seed, undirected, query, seeds, s1, d, k2,
           delta, output_dir):
    """Exact values on small graphs by live-graph enumeration."""
    params = {"graph": _graph_param(source, transform, tv_seed, undirected),
              "query": query, "seeds": seeds, "s1": s1, "d": d, "k2": k2,
              "delta": delta}
    _execute("oracle", params, output_dir)


@cli.command()
@graph_options
@click.option("--algorithm", type=click.Choice(list(ALL_SELECTORS)), required=True)
@click.option("--k", type=int, required=True)
@click.option("--k1", type=int, default=None)
@click.option("--k2", type=int, default=None)
@click.option("--d", default=None, help="delay step, or 'auto' for the probe estimate")
@click.option("--mode", type=click.Choice(["myopic", "farsighted"]),
              default="myopic", show_default=True)
@click.option("--optimize", type=click.Choice(["none", "grid", "golden", "face-joint"]),
              default="none", show_default=True)
@click.option("--d-max", type=int, default=None,
              help="delay horizon for optimization; default auto-estimated")
@click.option("--delta", type=float, default=None)
@click.option("--sims", type=int, default=10_000, show_default=True)
@click.option("--phase1-sims", type=int, default=1_000, show_default=True)
@click.option("--phase2-sims", type=int, default=1_000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--output-dir", default="runs", show_default=True)
def twophase(source, transform, tv_seed, undirected, algorithm, k, k1, k2, d,
             mode, optimize, d_max, delta, sims, phase1_sims, phase2_sims,
             seed, output_dir):
    """Two-phase runs: fixed (k1, d) plans or budget/delay optimization."""
    if k < 1:
        raise GraphError("k must be >= 1")
    params = {"graph": _graph_param(source, transform, tv_seed, undirected),
              "algorithm": algorithm, "k": k, "mode": mode, "optimize": optimize,
              "delta": delta, "sims": sims, "phase1_sims": phase1_sims,
              "phase2_sims": phase2_sims, "master_seed": _seed_param(seed)}
    if optimize == "none":
        if k1 is None or k2 is None or d is None:
            raise click.UsageError("--k1, --k2 and --d are required without --optimize")
        if k1 + k2 != k:
            raise GraphError(f"k1 + k2 = {k1 + k2} does not match k = {k}")
        params.update({"k1": k1, "k2": k2,
                       "d": d if d == "auto" else int(d)})
    else:
        params["d_max"] = d_max
    _execute("twophase", params, output_dir)


@cli.command()
@click.argument("record", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", default=None,
              help="where to write the verification record; default alongside the input")
def rerun(record, output_dir):
    """Replay a run record and require bit-exact numeric agreement."""
    stored = load_record(record)
    fresh = CORE[stored["command"]](stored["params"])
    diffs = diff_results(stored["results"], fresh)
    if diffs:
        for line in diffs:
            click.echo(f"mismatch: {line}", err=True)
        raise ReproducibilityError(
            f"{len(diffs)} numeric difference(s) replaying {record}")
    out = Path(output_dir) if output_dir else Path(record).parent
    with output_lock(out):
        path = write_record(out, stored["command"], stored["params"], fresh, 0.0)
    click.echo(json.dumps({"match": True, "record": str(path)}, indent=2))


@cli.group()
def datasets():
    """Fetch or export benchmark graphs."""


@datasets.command()
@click.argument("url")
@click.option("--sha256", "digest", required=True, help="expected content hash")
@click.option("--output", type=click.Path(dir_okay=False), required=True)
def fetch(url, digest, output):
    """Download a dataset with checksum pinning."""
    import requests

    resp = requests.get(url, timeout=60)
    resp.raise_for_status()
    got = hashlib.sha256(resp.content).hexdigest()
    if got != digest.lower():
        raise RecordError(f"checksum mismatch for {url}: got {got}")
    Path(output).write_bytes(resp.content)
    click.echo(json.dumps({"output": output, "bytes": len(resp.content),
                           "sha256": got}, indent=2))


@datasets.command("export-builtin")
@click.argument("name", type=click.Choice(sorted(BUILTINS)))
@click.option("--output", type=click.Path(dir_okay=False), required=True)
def export_builtin(name, output):
    """Write a bundled graph in the native serialized format."""
    graph = BUILTINS[name]()
    save_graph(graph, output)
    click.echo(json.dumps({"output": output, "n": graph.n, "m": graph.m,
                           "hash": graph_fingerprint(graph)}, indent=2))


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Abort:
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except ReproducibilityError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_REPRO
    except (GraphError, OracleCapError, RecordError, FileNotFoundError,
            ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
