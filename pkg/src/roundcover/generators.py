"""Instance construction: experiment instances, application reductions, the hard instance."""
from __future__ import annotations

import csv
import math
from collections import Counter
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import (
    FilterEval,
    FixedRealization,
    IndependentInstance,
    InfeasibleError,
    InputError,
    RoundRecord,
    ScenarioInstance,
    TruncatedAdditive,
    TruncatedCoverage,
    build_transcript,
    make_independent_item,
    make_scenario_instance,
    scale_costs,
    to_fraction,
    to_mask,
)

ODT_RANDOM_COSTS = (1, 4, 7, 10)
ODT_RANDOM_COST_WEIGHTS = (0.1, 0.2, 0.4, 0.3)
HARD_SIZE_LIMIT = 20


# --------------------------------------------------------------------------
# stochastic set cover from graphs


def read_edge_list(path) -> list[tuple[int, int]]:
    """Whitespace-separated ``u v`` pairs; ``#`` lines are comments."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith(("#", "%")):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) < 2:
                raise InputError(f"bad edge line {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
    return edges


def top_out_degree_subgraph(edges: Sequence[tuple[int, int]], k: int) -> list[tuple[int, int]]:
    """Subgraph induced by the k nodes of highest out-degree (ties: lower node id first)."""
    deg = Counter(u for u, _ in edges)
    nodes = {u for e in edges for u in e}
    ranked = sorted(nodes, key=lambda u: (-deg[u], u))[:k]
    keep = set(ranked)
    return [(u, v) for u, v in edges if u in keep and v in keep]


def gen_graph_coverage(edge_list: Sequence[tuple[int, int]], p: float = 0.1, samples: int = 500,
                       delta: float = 0.5, rng=None, nodes: Iterable[int] | None = None) -> IndependentInstance:
    """One item per node; item u realizes to a sampled subset of its out-neighbours plus u.

    Each out-neighbour is kept independently with probability p; the empirical
    distribution over ``samples`` draws defines the item.  Objective is
    coverage truncated at Q = ceil(delta * n), unit costs.
    """
    if not 0 < p <= 1:
        raise InputError("p must lie in (0, 1]")
    if samples < 1:
        raise InputError("samples must be >= 1")
    if not 0 < delta <= 1:
        raise InputError("delta must lie in (0, 1]")
    labels = sorted({u for e in edge_list for u in e} | set(nodes or ()))
    if not labels:
        raise InputError("empty graph")
    index = {u: i for i, u in enumerate(labels)}
    n = len(labels)
    out: list[list[int]] = [[] for _ in range(n)]
    for u, v in edge_list:
        if u != v:
            out[index[u]].append(index[v])
    rng = np.random.default_rng(rng)
    items = []
    for u in range(n):
        nbrs = np.array(sorted(set(out[u])), dtype=np.int64)
        counts: Counter = Counter()
        if len(nbrs) == 0:
            counts[1 << u] = samples
        else:
            keep = rng.random((samples, len(nbrs))) < p
            for row in keep:
                counts[to_mask(nbrs[row]) | (1 << u)] += 1
        items.append(make_independent_item(u, 1, [(m, Fraction(c, samples)) for m, c in counts.items()]))
    Q = math.ceil(Fraction(str(delta)) * n)
    meta = {"generator": "graph", "p": p, "samples": samples, "delta": delta, "nodes": labels}
    return IndependentInstance(items, n, TruncatedCoverage(n, Q), meta)


# --------------------------------------------------------------------------
# optimal decision tree


def _odt_costs(m: int, cost_mode: str, rng) -> list[int]:
    if cost_mode == "unit":
        return [1] * m
    if cost_mode == "random":
        return [int(c) for c in rng.choice(ODT_RANDOM_COSTS, size=m, p=ODT_RANDOM_COST_WEIGHTS)]
    raise InputError(f"cost_mode must be 'unit' or 'random', got {cost_mode!r}")


def odt_reduction(matrix: np.ndarray, costs: Sequence, probs: Sequence | None = None,
                  metadata: dict | None = None) -> ScenarioInstance:
    """Scenario instance for a binary test matrix (rows = hypotheses, columns = tests).

    Identical rows are dropped (first kept).  The groundset is the surviving
    hypotheses; test e realizes to the hypotheses it eliminates, and the
    objective is coverage truncated at s' - 1.
    """
    matrix = np.asarray(matrix, dtype=np.int8)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise InputError("test matrix must be a non-empty 2-d array")
    seen: dict[bytes, int] = {}
    rows = []
    for y in range(matrix.shape[0]):
        key = matrix[y].tobytes()
        if key not in seen:
            seen[key] = y
            rows.append(y)
    if len(rows) < 2:
        raise InputError("all scenarios collapse to one after removing duplicates")
    M = matrix[rows]
    s = len(rows)
    full = (1 << s) - 1
    realizations = []
    for e in range(M.shape[1]):
        T = to_mask(np.flatnonzero(M[:, e]))
        pos, neg = full & ~T, T
        realizations.append([pos if M[y, e] else neg for y in range(s)])
    if probs is None:
        ps = [Fraction(1, s)] * s
    else:
        ps = [to_fraction(probs[y]) for y in rows]
    meta = dict(metadata or {})
    meta.update({"s_original": int(matrix.shape[0]), "s_effective": s, "kept_rows": [int(y) for y in rows]})
    return make_scenario_instance(realizations, ps, costs, TruncatedCoverage(s, s - 1), meta)


def gen_odt(s: int, m: int, p: float, cost_mode: str = "unit", rng=None) -> ScenarioInstance:
    """Random binary test matrix: hypothesis y is in T_e with probability p."""
    if s < 2 or m < 1:
        raise InputError("gen_odt needs s >= 2 and m >= 1")
    rng = np.random.default_rng(rng)
    matrix = (rng.random((s, m)) < p).astype(np.int8)
    costs = _odt_costs(m, cost_mode, rng)
    return odt_reduction(matrix, costs, metadata={"generator": "odt", "p": p, "cost_mode": cost_mode})


UNKNOWN_TOKENS = {"", "?", "u", "unknown", "nan", "na", "-1"}


def read_table(path) -> list[list[int | None]]:
    """CSV matrix of 0/1 entries; unknowns may be blank, '?', 'unknown' or -1."""
    table = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            out = []
            for tok in row:
                t = tok.strip().lower()
                if t in UNKNOWN_TOKENS:
                    out.append(None)
                elif t in ("0", "1"):
                    out.append(int(t))
                else:
                    raise InputError(f"unexpected table entry {tok!r}")
            table.append(out)
    return table


def gen_odt_from_table(matrix: Sequence[Sequence[int | None]], rng=None, cost_mode: str = "unit",
                       costs: Sequence | None = None) -> ScenarioInstance:
    """Fill unknown entries with fair coin flips, drop duplicate rows, reduce to a scenario instance."""
    if not matrix or not matrix[0]:
        raise InputError("table must be non-empty")
    width = len(matrix[0])
    if any(len(row) != width for row in matrix):
        raise InputError("table rows have different lengths")
    rng = np.random.default_rng(rng)
    filled = np.zeros((len(matrix), width), dtype=np.int8)
    for y, row in enumerate(matrix):
        for e, v in enumerate(row):
            filled[y, e] = int(rng.integers(2)) if v is None else int(v)
    if costs is None:
        costs = _odt_costs(width, cost_mode, rng)
    return odt_reduction(filled, costs, metadata={"generator": "odt-table", "cost_mode": cost_mode})


# --------------------------------------------------------------------------
# the adaptivity-gap instance

# groundset {0, 1, star, bottom}
ELEM_ZERO, ELEM_ONE, ELEM_STAR, ELEM_BOTTOM = 0, 1, 2, 3


def hard_instance_layout(ell: int, r: int) -> dict:
    """Item ids of the N-ary tree construction.

    Internal nodes are indexed level by level; node at depth d with path
    digits (B_0, ..., B_{d-1}) has index offset(d) + sum B_i N^(d-1-i).
    Y items come first (ell per internal node), then one Z item per leaf.
    """
    N = 2**ell
    internal = (N**r - 1) // (N - 1)
    return {"N": N, "internal": internal, "leaves": N**r,
            "depth_offset": [(N**d - 1) // (N - 1) for d in range(r + 1)],
            "z_offset": ell * internal}


def gen_hard_instance(ell: int, r: int) -> ScenarioInstance:
    """Depth-r N-ary tree instance (N = 2^ell) with s = 2^(r*ell) uniform scenarios."""
    if ell < 1 or r < 1:
        raise InputError("gen_hard_instance needs ell >= 1 and r >= 1")
    if r * ell > HARD_SIZE_LIMIT:
        raise InputError(f"r*ell = {r * ell} exceeds the size guard {HARD_SIZE_LIMIT}")
    lay = hard_instance_layout(ell, r)
    N, s = lay["N"], lay["leaves"]
    m = lay["z_offset"] + s
    zero, one = 1 << ELEM_ZERO, 1 << ELEM_ONE
    real = [[zero] * s for _ in range(lay["z_offset"])] + [[1 << ELEM_BOTTOM] * s for _ in range(s)]
    for w in range(s):
        digits = [(w // N ** (r - 1 - d)) % N for d in range(r)]
        node = 0
        for d in range(r):
            v = lay["depth_offset"][d] + node
            B = digits[d]
            for i in range(ell):
                if (B >> (ell - 1 - i)) & 1:
                    real[ell * v + i][w] = one
            node = node * N + B
        real[lay["z_offset"] + w][w] = 1 << ELEM_STAR
    f = TruncatedCoverage(4, 1, relevant=[ELEM_STAR])
    meta = {"generator": "hard", "ell": ell, "r": r, "N": N}
    return make_scenario_instance(real, [Fraction(1, s)] * s, [1] * m, f, meta)


def hard_instance_top_down(instance: ScenarioInstance, source) -> object:
    """Fully adaptive top-down policy: decode each level's Y items, descend, probe the leaf."""
    ell, r = instance.metadata["ell"], instance.metadata["r"]
    lay = hard_instance_layout(ell, r)
    N = lay["N"]
    rounds = []
    node = 0
    for d in range(r):
        v = lay["depth_offset"][d] + node
        ids = [ell * v + i for i in range(ell)]
        obs = [source.observe(e) for e in ids]
        B = 0
        for x in obs:
            B = (B << 1) | (1 if x == 1 << ELEM_ONE else 0)
        rounds.append(RoundRecord(ids, obs, sum(instance.costs[e] for e in ids), {"depth": d}))
        node = node * N + B
    z = lay["z_offset"] + node
    rounds.append(RoundRecord([z], [source.observe(z)], instance.costs[z], {"depth": r}))
    return build_transcript(rounds, instance.objective)


# --------------------------------------------------------------------------
# application reductions


def gen_filter_eval(n: int, queries: Sequence[Iterable[int]], probs: Sequence,
                    costs: Sequence | None = None) -> IndependentInstance:
    """Filter i realizes to {T_i} with probability p_i, else {F_i}."""
    if len(probs) != n:
        raise InputError("one probability per filter is required")
    f = FilterEval(n, queries)
    int_costs, scale = scale_costs(costs if costs is not None else [1] * n)
    items = []
    for i in range(n):
        p = to_fraction(probs[i])
        if not 0 <= p <= 1:
            raise InputError("filter probabilities must lie in [0, 1]")
        outs = [(1 << f.true_element(i), p), (1 << f.false_element(i), 1 - p)]
        items.append(make_independent_item(i, int_costs[i], outs))
    meta = {"generator": "filter"}
    if scale != 1:
        meta["cost_scale"] = scale
    return IndependentInstance(items, f.n, f, meta)


def gen_correlated_knapsack(values_per_scenario: Sequence[Sequence[int]], probs: Sequence,
                            costs: Sequence, Q: int) -> ScenarioInstance:
    """values_per_scenario[w][i] is item i's reward under scenario w (clamped to Q).

    Element (i, v) has index i*(Q+1) + v and value v.
    """
    if Q < 1:
        raise InputError("Q must be >= 1")
    n = len(costs)
    rows = [list(r) for r in values_per_scenario]
    if any(len(r) != n for r in rows):
        raise InputError("each scenario needs one value per item")
    for w, r in enumerate(rows):
        if any(int(v) != v or v < 0 for v in r):
            raise InputError("values must be non-negative integers")
        if sum(min(int(v), Q) for v in r) < Q:
            raise InfeasibleError(f"scenario {w} has total value below Q={Q}")
    values = [v for _ in range(n) for v in range(Q + 1)]
    f = TruncatedAdditive(n * (Q + 1), Q, values)
    real = [[1 << (i * (Q + 1) + min(int(rows[w][i]), Q)) for w in range(len(rows))] for i in range(n)]
    return make_scenario_instance(real, probs, costs, f, {"generator": "knapsack"})


# --------------------------------------------------------------------------
# small random instances for property tests and acceptance


def gen_random_scenario(s: int, m: int, n: int, rng=None, cost_max: int = 1,
                        density: float = 0.4, uniform: bool = False) -> ScenarioInstance:
    """Random coverage scenario instance; Q is the smallest per-scenario union size."""
    rng = np.random.default_rng(rng)
    while True:
        real = [[to_mask(np.flatnonzero(rng.random(n) < density)) for _ in range(s)] for _ in range(m)]
        Q = min(bin(_union(real, w)).count("1") for w in range(s))
        cols = {tuple(row[w] for row in real) for w in range(s)}
        if Q >= 1 and len(cols) == s:
            break
    if uniform:
        probs = [Fraction(1, s)] * s
    else:
        raw = [int(x) for x in rng.integers(1, 5, size=s)]
        probs = [Fraction(x, sum(raw)) for x in raw]
    costs = [int(c) for c in rng.integers(1, cost_max + 1, size=m)]
    return make_scenario_instance(real, probs, costs, TruncatedCoverage(n, Q), {"generator": "random-scenario"})


def _union(real, w):
    u = 0
    for row in real:
        u |= row[w]
    return u


def gen_random_independent(m: int, n: int, rng=None, max_support: int = 3, cost_max: int = 1,
                           Q: int | None = None) -> IndependentInstance:
    """Random coverage instance; item i always covers element i mod n."""
    rng = np.random.default_rng(rng)
    items = []
    for i in range(m):
        k = int(rng.integers(1, max_support + 1))
        raw = [int(x) for x in rng.integers(1, 5, size=k)]
        outs = []
        for j in range(k):
            extra = to_mask(np.flatnonzero(rng.random(n) < 0.3))
            outs.append((extra | (1 << (i % n)), Fraction(raw[j], sum(raw))))
        items.append(make_independent_item(i, int(rng.integers(1, cost_max + 1)), outs))
    if Q is None:
        Q = int(rng.integers(1, min(m, n) + 1))
    return IndependentInstance(items, n, TruncatedCoverage(n, Q), {"generator": "random-independent"})


def fixed_realization_for_scenario(instance: ScenarioInstance, w: int) -> FixedRealization:
    return FixedRealization(instance.column(w))
