"""Command-line interface.  Exit codes: 0 ok, 2 input error, 3 infeasible / invariant violation."""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

import numpy as np

from .core import (
    InfeasibleError,
    InputError,
    InvariantViolation,
    ScenarioRealization,
    dumps_canonical,
    instance_to_dict,
    load_instance,
    sampled_source,
    save_instance,
)
from .generators import (
    gen_correlated_knapsack,
    gen_filter_eval,
    gen_graph_coverage,
    gen_hard_instance,
    gen_odt,
    gen_odt_from_table,
    read_edge_list,
    read_table,
    top_out_degree_subgraph,
)
from .harness import ALGORITHMS, ExperimentSpec, check_compatible, emit_csv, parse_rounds, run_experiment, \
    run_policy, write_report
from .oracles import entropy_lower_bound, offline_optimal, optimal_adaptive_independent, \
    optimal_adaptive_scenario


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_generate(a) -> None:
    kind = a.kind
    if kind == "graph":
        if not a.edges:
            raise InputError("--edges is required for graph instances")
        edges = read_edge_list(a.edges)
        if a.top:
            edges = top_out_degree_subgraph(edges, a.top)
        inst = gen_graph_coverage(edges, a.p if a.p is not None else 0.1, a.samples, a.delta, a.seed)
    elif kind == "odt":
        inst = gen_odt(a.s, a.m, a.p if a.p is not None else 0.5, a.cost_mode, a.seed)
    elif kind == "odt-table":
        if not a.table:
            raise InputError("--table is required for odt-table instances")
        inst = gen_odt_from_table(read_table(a.table), a.seed, a.cost_mode)
    elif kind == "hard":
        inst = gen_hard_instance(a.ell, a.r)
    elif kind == "filter":
        if not a.queries or not a.probs:
            raise InputError("--queries and --probs are required for filter instances")
        queries = [_int_list(q) for q in a.queries.split(";")]
        probs = [Fraction(x) for x in a.probs.split(",")]
        costs = _int_list(a.costs) if a.costs else None
        inst = gen_filter_eval(len(probs), queries, probs, costs)
    elif kind == "knapsack":
        if not a.data:
            raise InputError("--data is required for knapsack instances (JSON with values, probs, costs, Q)")
        with open(a.data, encoding="utf-8") as fh:
            d = json.load(fh)
        inst = gen_correlated_knapsack(d["values"], [Fraction(str(p)) for p in d["probs"]], d["costs"], d["Q"])
    else:
        raise InputError(f"unknown kind {kind!r}")
    if a.out:
        save_instance(inst, a.out)
    else:
        sys.stdout.write(dumps_canonical(instance_to_dict(inst)))


def cmd_solve(a) -> None:
    inst = load_instance(a.instance)
    algo = a.algorithm
    if a.set_based:
        algo = "set-small" if a.set_based == "small" else "set-large"
    check_compatible(algo, inst)
    if a.scenario is not None:
        if inst.model != "scenario":
            raise InputError("--scenario needs a scenario-model instance")
        source = ScenarioRealization(inst, a.scenario)
    else:
        source = sampled_source(inst, np.random.default_rng(a.seed))
    cost, covered, rounds, params = run_policy(algo, a.rounds, inst, source, {}, Fraction(a.eta),
                                               a.mu_trials, a.sampler, a.seed)
    out = {"algorithm": algo, "r": a.rounds, "cost": cost, "covered": covered, "rounds_used": rounds,
           "probed": sorted(source.observed), "round_params": params}
    _write(dumps_canonical(out), a.out)


def cmd_evaluate(a) -> None:
    lo, hi = parse_rounds(a.rounds)
    lbs = tuple(x for x in a.lower_bounds.split(",") if x) if a.lower_bounds else ()
    spec = ExperimentSpec(a.instance, a.algorithm, lo, hi, a.trials, a.seed, a.mode, lbs,
                          Fraction(a.eta), a.mu_trials, a.sampler, a.workers)
    report = run_experiment(spec)
    if a.csv:
        emit_csv(report, a.csv)
    if a.out:
        write_report(report, a.out)
    else:
        sys.stdout.write(report.to_json())
    print(f"wall-clock {report.wall_clock:.2f}s", file=sys.stderr)


def cmd_lowerbound(a) -> None:
    inst = load_instance(a.instance)
    if a.kind == "entropy":
        if inst.model != "scenario":
            raise InputError("the entropy bound needs a scenario-model instance")
        b = entropy_lower_bound(inst)
        out = {"kind": "entropy", "bits": b.bits, "heuristic": b.heuristic}
    elif a.kind == "adaptive":
        v = optimal_adaptive_scenario(inst) if inst.model == "scenario" else optimal_adaptive_independent(inst)
        out = {"kind": "adaptive", "value": str(v), "approx": float(v)}
    else:
        if a.scenario is not None:
            masks = inst.column(a.scenario)
        elif inst.model == "scenario":
            masks = inst.column(inst.sample_scenario(np.random.default_rng(a.seed)))
        else:
            masks = inst.sample_realization(np.random.default_rng(a.seed))
        b = offline_optimal(inst, masks)
        out = {"kind": "offline", "cost": b.cost, "exact": b.exact}
    _write(dumps_canonical(out), a.out)


def cmd_bench(a) -> None:
    """Time nsc over the exhaustive scenario set of a few generated ODT instances."""
    rows = []
    for k in range(a.instances):
        inst = gen_odt(a.s, a.m, 0.5, "unit", a.seed + k)
        t0 = time.perf_counter()
        spec = ExperimentSpec(None, "nsc", 1, a.r_max, lower_bounds=("entropy",))
        rep = run_experiment(spec, inst)
        rows.append({"instance": k, "s": inst.s, "seconds": round(time.perf_counter() - t0, 3),
                     "costs": [row["mean_cost"] for row in rep.rows]})
    _write(dumps_canonical({"bench": rows}), a.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roundcover", description="Round-limited adaptive submodular cover.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build an instance and write it as JSON")
    g.add_argument("--kind", required=True, choices=["graph", "odt", "odt-table", "hard", "filter", "knapsack"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.add_argument("--edges", help="edge-list file (graph)")
    g.add_argument("--top", type=int, help="keep the top-k out-degree nodes (graph)")
    g.add_argument("--p", type=float, help="edge keep probability (graph, default 0.1) or test density (odt, default 0.5)")
    g.add_argument("--samples", type=int, default=500)
    g.add_argument("--delta", type=float, default=0.5)
    g.add_argument("--s", type=int, default=64)
    g.add_argument("--m", type=int, default=24)
    g.add_argument("--cost-mode", default="unit", choices=["unit", "random"])
    g.add_argument("--table", help="CSV 0/1/unknown matrix (odt-table)")
    g.add_argument("--ell", type=int, default=2)
    g.add_argument("--r", type=int, default=2)
    g.add_argument("--queries", help="filter queries, e.g. '0,1;2'")
    g.add_argument("--probs", help="filter pass probabilities, e.g. '0.5,0.25,1'")
    g.add_argument("--costs", help="filter costs, e.g. '1,2,1'")
    g.add_argument("--data", help="knapsack JSON file")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run one policy against one hidden realization")
    s.add_argument("--instance", required=True)
    s.add_argument("--algorithm", default="nsc", choices=["ssc", "nsc", "nsc2r"])
    s.add_argument("--rounds", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scenario", type=int, help="fix the hidden scenario instead of sampling it")
    s.add_argument("--set-based", choices=["small", "large"])
    s.add_argument("--eta", default="0.1")
    s.add_argument("--mu-trials", type=int, default=200)
    s.add_argument("--sampler", default="exact", choices=["exact", "sampled"])
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="rounds-vs-cost sweep")
    e.add_argument("--instance", required=True)
    e.add_argument("--algorithm", default="nsc", choices=list(ALGORITHMS))
    e.add_argument("--rounds", default="1..3", help="'a..b' or a single integer")
    e.add_argument("--trials", type=int, default=20)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--mode", default="auto", choices=["auto", "monte_carlo", "exhaustive"])
    e.add_argument("--lower-bounds", default="offline,entropy")
    e.add_argument("--eta", default="0.1")
    e.add_argument("--mu-trials", type=int, default=200)
    e.add_argument("--sampler", default="exact", choices=["exact", "sampled"])
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--csv")
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    lb = sub.add_parser("lowerbound", help="offline, adaptive-optimal or entropy bound")
    lb.add_argument("--instance", required=True)
    lb.add_argument("--kind", required=True, choices=["offline", "adaptive", "entropy"])
    lb.add_argument("--scenario", type=int)
    lb.add_argument("--seed", type=int, default=0)
    lb.add_argument("--out")
    lb.set_defaults(func=cmd_lowerbound)

    b = sub.add_parser("bench", help="timing run on generated ODT instances")
    b.add_argument("--instances", type=int, default=3)
    b.add_argument("--s", type=int, default=64)
    b.add_argument("--m", type=int, default=24)
    b.add_argument("--r-max", type=int, default=6)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InputError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleError, InvariantViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0
