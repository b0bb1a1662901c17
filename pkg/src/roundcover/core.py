"""Domain types shared by every solver: objectives, items, instances, transcripts.

Subsets of the groundset are carried around as Python ``int`` bitmasks
(bit ``i`` set <=> element ``i`` present).  The public helpers accept any
iterable of element ids as well.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class InputError(ValueError):
    """Malformed input: bad parameters, out-of-range elements, bad files."""


class InfeasibleError(Exception):
    """The instance cannot be covered under some realization."""


class InvariantViolation(RuntimeError):
    """An internal guarantee failed (e.g. list exhausted before the target)."""


# --------------------------------------------------------------------------
# bitmask helpers


def to_mask(elements: Iterable[int] | int) -> int:
    if isinstance(elements, (int, np.integer)):
        return int(elements)
    mask = 0
    for e in elements:
        e = int(e)
        if e < 0:
            raise InputError(f"negative element id {e}")
        mask |= 1 << e
    return mask


def from_mask(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def popcount(mask: int) -> int:
    return mask.bit_count()


# --------------------------------------------------------------------------
# objective functions


class Objective:
    """Integer-valued monotone submodular function on ``range(n)``.

    Subclasses implement ``value(mask)``; ``Q`` is the maximal value f(U).
    """

    family = "abstract"

    def __init__(self, n: int, Q: int):
        self.n = int(n)
        self.Q = int(Q)
        self._full = (1 << self.n) - 1

    def value(self, mask: int) -> int:
        raise NotImplementedError

    def __call__(self, S) -> int:
        return evaluate(self, S)

    def check_mask(self, mask: int) -> None:
        if mask & ~self._full:
            bad = [e for e in from_mask(mask) if e >= self.n]
            raise InputError(f"element ids {bad} outside groundset of size {self.n}")

    def params(self) -> dict:
        raise InputError(f"objective family {self.family!r} is not serializable")


class TruncatedCoverage(Objective):
    """f(S) = min(|S ∩ relevant|, Q)."""

    family = "TruncatedCoverage"

    def __init__(self, n: int, Q: int, relevant: Iterable[int] | int | None = None):
        super().__init__(n, Q)
        self.relevant = self._full if relevant is None else to_mask(relevant)
        self.check_mask(self.relevant)
        if not 1 <= self.Q <= popcount(self.relevant):
            raise InputError(f"Q={Q} must lie in [1, |relevant|={popcount(self.relevant)}]")

    def value(self, mask: int) -> int:
        c = (mask & self.relevant).bit_count()
        return c if c < self.Q else self.Q

    def params(self) -> dict:
        p = {"Q": self.Q}
        if self.relevant != self._full:
            p["relevant"] = from_mask(self.relevant)
        return p


class _TruncatedSum(Objective):
    _key = "weights"

    def __init__(self, n: int, Q: int, weights: Sequence[int]):
        super().__init__(n, Q)
        if len(weights) != self.n:
            raise InputError(f"expected {self.n} {self._key}, got {len(weights)}")
        self.weights = tuple(int(w) for w in weights)
        if any(w < 0 for w in self.weights):
            raise InputError(f"{self._key} must be non-negative integers")
        if self.Q < 1 or sum(self.weights) < self.Q:
            raise InputError(f"Q={Q} must lie in [1, total weight {sum(self.weights)}]")

    def value(self, mask: int) -> int:
        total = 0
        w = self.weights
        i = 0
        while mask:
            if mask & 1:
                total += w[i]
                if total >= self.Q:
                    return self.Q
            mask >>= 1
            i += 1
        return total

    def params(self) -> dict:
        return {"Q": self.Q, self._key: list(self.weights)}


class WeightedTruncatedCoverage(_TruncatedSum):
    """f(S) = min(sum of weights of covered elements, Q)."""

    family = "WeightedTruncatedCoverage"


class TruncatedAdditive(_TruncatedSum):
    """f(S) = min(sum_{e in S} a_e, Q), the knapsack-cover objective."""

    family = "TruncatedAdditive"
    _key = "values"


class FilterEval(Objective):
    """Shared filter evaluation objective.

    Element ``i`` is T_i (filter i true) and element ``n_filters + i`` is F_i.
    Query j contributes min(|Q_j|, |Q_j| * #false seen + #true seen).
    """

    family = "FilterEval"

    def __init__(self, n_filters: int, queries: Sequence[Iterable[int]]):
        self.n_filters = int(n_filters)
        self.queries = tuple(tuple(sorted(set(int(i) for i in q))) for q in queries)
        if not self.queries:
            raise InputError("at least one query is required")
        for q in self.queries:
            if not q:
                raise InputError("queries must be non-empty")
            if q[0] < 0 or q[-1] >= self.n_filters:
                raise InputError(f"query {q} references a filter outside [0, {self.n_filters})")
        super().__init__(2 * self.n_filters, sum(len(q) for q in self.queries))
        self._tmasks = [to_mask(q) for q in self.queries]
        self._fmasks = [m << self.n_filters for m in self._tmasks]

    def true_element(self, i: int) -> int:
        return i

    def false_element(self, i: int) -> int:
        return self.n_filters + i

    def value(self, mask: int) -> int:
        total = 0
        for q, tm, fm in zip(self.queries, self._tmasks, self._fmasks):
            k = len(q)
            if mask & fm:
                total += k
            else:
                total += min(k, (mask & tm).bit_count())
        return total

    def params(self) -> dict:
        return {"n_filters": self.n_filters, "queries": [list(q) for q in self.queries]}


class ResidualObjective(Objective):
    """g(S) = f(S ∪ R) - f(R); never re-materialized."""

    family = "Residual"

    def __init__(self, base: Objective, R: int):
        self.base = base
        self.R = R
        self._fR = base.value(R)
        super().__init__(base.n, base.Q - self._fR)

    def value(self, mask: int) -> int:
        return self.base.value(mask | self.R) - self._fR


FAMILIES = {
    cls.family: cls
    for cls in (TruncatedCoverage, WeightedTruncatedCoverage, TruncatedAdditive, FilterEval)
}


def evaluate(f: Objective, S) -> int:
    mask = to_mask(S)
    f.check_mask(mask)
    return f.value(mask)


def marginal(f: Objective, S, T) -> int:
    s, t = to_mask(S), to_mask(T)
    f.check_mask(s | t)
    return f.value(s | t) - f.value(s)


def residual(f: Objective, R) -> Objective:
    R = to_mask(R)
    f.check_mask(R)
    if isinstance(f, ResidualObjective):
        return ResidualObjective(f.base, f.R | R)
    return ResidualObjective(f, R)


@dataclass
class VerificationReport:
    passed: bool
    checked: int
    witness: tuple | None = None  # (S, T, e) as element lists / id
    reason: str = ""


def verify_monotone_submodular(f: Objective, mode: str = "exhaustive", n_samples: int = 2000,
                               rng=None) -> VerificationReport:
    """Check range, integrality, monotonicity and diminishing returns.

    Exhaustive mode enumerates every S and every pair of outside elements
    (|U| <= 10); sampled mode draws random S ⊆ T and e ∉ T.
    """
    n = f.n
    if mode == "exhaustive":
        if n > 10:
            raise InputError("exhaustive verification requires |U| <= 10")
        vals = [f.value(m) for m in range(1 << n)]
        checked = 0
        for S in range(1 << n):
            v = vals[S]
            if not isinstance(v, (int, np.integer)) or not 0 <= v <= f.Q:
                return VerificationReport(False, checked, (from_mask(S), from_mask(S), None),
                                          f"f(S)={v} outside [0, Q] or non-integer")
            for e in range(n):
                be = 1 << e
                if S & be:
                    continue
                ge = vals[S | be] - v
                if ge < 0:
                    return VerificationReport(False, checked, (from_mask(S), from_mask(S | be), e),
                                              "not monotone")
                for x in range(n):
                    bx = 1 << x
                    if x == e or S & bx:
                        continue
                    T = S | bx
                    checked += 1
                    if vals[T | be] - vals[T] > ge:
                        return VerificationReport(False, checked, (from_mask(S), from_mask(T), e),
                                                  "not submodular")
        if vals[0] != 0 or vals[(1 << n) - 1] != f.Q:
            return VerificationReport(False, checked, None, "f(∅) != 0 or f(U) != Q")
        return VerificationReport(True, checked)
    if mode != "sampled":
        raise InputError(f"unknown verification mode {mode!r}")
    rng = np.random.default_rng(rng)
    for k in range(n_samples):
        t_bits = rng.random(n) < rng.random()
        s_bits = t_bits & (rng.random(n) < 0.5)
        outside = np.flatnonzero(~t_bits)
        S = to_mask(np.flatnonzero(s_bits))
        T = to_mask(np.flatnonzero(t_bits))
        fS, fT = f.value(S), f.value(T)
        if fS > fT or not 0 <= fS <= f.Q:
            return VerificationReport(False, k, (from_mask(S), from_mask(T), None), "not monotone")
        if len(outside):
            e = int(rng.choice(outside))
            be = 1 << e
            if f.value(S | be) - fS < f.value(T | be) - fT:
                return VerificationReport(False, k, (from_mask(S), from_mask(T), e), "not submodular")
    return VerificationReport(True, n_samples)


# --------------------------------------------------------------------------
# numbers


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        return Fraction(repr(float(x)))
    return Fraction(str(x))


COST_LCM_CAP = 10**6


def scale_costs(raw: Sequence) -> tuple[list[int], int]:
    """Scale rational costs to positive integers; returns (costs, factor).

    Multiplies by the LCM of denominators.  When that LCM exceeds 10^6
    the costs are first rounded to 6 decimal digits.
    """
    fr = [to_fraction(c) for c in raw]
    if any(c <= 0 for c in fr):
        raise InputError("item costs must be positive")
    lcm = 1
    for c in fr:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    if lcm > COST_LCM_CAP:
        fr = [Fraction(round(c * 10**6), 10**6) for c in fr]
        if any(c <= 0 for c in fr):
            raise InputError("a cost rounds to zero at 6 decimal digits")
        lcm = 1
        for c in fr:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    return [int(c * lcm) for c in fr], lcm


def normalize_probs(raw: Sequence, tol: float = 1e-9) -> list[Fraction]:
    ps = [to_fraction(p) for p in raw]
    if not ps:
        raise InputError("empty probability vector")
    if any(p <= 0 or p > 1 for p in ps):
        raise InputError("probabilities must lie in (0, 1]")
    total = sum(ps)
    if abs(float(total) - 1.0) > tol:
        raise InputError(f"probabilities sum to {float(total)!r}, not 1")
    return [p / total for p in ps]


# --------------------------------------------------------------------------
# items and instances


@dataclass(frozen=True)
class Item:
    """A probe-able unit.

    Independent model: ``outcomes`` lists (subset mask, probability) pairs.
    Scenario model: ``realizations[w]`` is the subset mask under scenario w.
    """

    id: int
    cost: int
    outcomes: tuple[tuple[int, Fraction], ...] = ()
    realizations: tuple[int, ...] = ()

    def __post_init__(self):
        if int(self.cost) != self.cost or self.cost < 1:
            raise InputError(f"item {self.id}: cost must be an integer >= 1, got {self.cost!r}")


def make_independent_item(id: int, cost: int, outcomes: Iterable[tuple]) -> Item:
    """Build an item from (subset, probability) pairs, merging equal subsets."""
    merged: dict[int, Fraction] = {}
    order = []
    pairs = [(to_mask(s), to_fraction(p)) for s, p in outcomes]
    pairs = [(m, p) for m, p in pairs if p != 0]
    probs = normalize_probs([p for _, p in pairs])
    for (m, _), p in zip(pairs, probs):
        if m not in merged:
            order.append(m)
            merged[m] = Fraction(0)
        merged[m] += p
    order.sort()
    return Item(id, int(cost), tuple((m, merged[m]) for m in order))


def _check_items(items: Sequence[Item]) -> None:
    for i, it in enumerate(items):
        if it.id != i:
            raise InputError(f"item at position {i} has id {it.id}; ids must be 0..m-1")


@dataclass
class IndependentInstance:
    items: list[Item]
    groundset_size: int
    objective: Objective
    metadata: dict = field(default_factory=dict)
    validate: bool = True

    model = "independent"

    def __post_init__(self):
        self.items = list(self.items)
        _check_items(self.items)
        if self.objective.n != self.groundset_size:
            raise InputError("objective groundset does not match instance groundset")
        for it in self.items:
            if not it.outcomes:
                raise InputError(f"item {it.id} has no outcomes")
            for m, p in it.outcomes:
                self.objective.check_mask(m)
            if sum(p for _, p in it.outcomes) != 1:
                raise InputError(f"item {it.id}: probabilities do not sum to 1")
        self._cum = [np.cumsum([float(p) for _, p in it.outcomes]) for it in self.items]
        if self.validate:
            self.feasibility = check_feasible(self)

    @property
    def m(self) -> int:
        return len(self.items)

    @property
    def Q(self) -> int:
        return self.objective.Q

    def sample_outcome(self, item_id: int, rng) -> int:
        cum = self._cum[item_id]
        k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        return self.items[item_id].outcomes[min(k, len(cum) - 1)][0]

    def sample_realization(self, rng) -> tuple[int, ...]:
        return tuple(self.sample_outcome(i, rng) for i in range(self.m))


def check_feasible(inst: IndependentInstance, max_enum: int = 100_000, n_samples: int = 2000,
                   seed: int = 0) -> str:
    """Certify that every joint realization covers f.

    Returns how the certificate was obtained: "guaranteed" (elements realized
    with probability one already reach Q), "exhaustive", or "sampled" (with a
    warning).  Raises InfeasibleError on a counterexample.
    """
    f = inst.objective
    sure = 0
    for it in inst.items:
        common = ~0
        for m, _ in it.outcomes:
            common &= m
        sure |= common
    if f.value(sure) == f.Q:
        return "guaranteed"
    size = 1
    for it in inst.items:
        size *= len(it.outcomes)
        if size > max_enum:
            break
    if size <= max_enum:
        unions = {0}
        for it in inst.items:
            unions = {u | m for u in unions for m, _ in it.outcomes}
        for u in unions:
            if f.value(u) != f.Q:
                raise InfeasibleError(f"joint realization {from_mask(u)} reaches only f={f.value(u)} < Q={f.Q}")
        return "exhaustive"
    rng = np.random.default_rng(seed)
    for _ in range(n_samples):
        u = 0
        for x in inst.sample_realization(rng):
            u |= x
        if f.value(u) != f.Q:
            raise InfeasibleError(f"sampled realization reaches only f={f.value(u)} < Q={f.Q}")
    warnings.warn(f"feasibility certified by {n_samples} samples only", stacklevel=2)
    return "sampled"


@dataclass
class ScenarioInstance:
    """Explicit joint distribution over s scenarios.

    Use :func:`make_scenario_instance` to build one from raw data; it merges
    duplicate scenarios.  The constructor insists on distinct scenarios.
    """

    items: list[Item]
    probs: list[Fraction]
    objective: Objective
    groundset_size: int
    metadata: dict = field(default_factory=dict)

    model = "scenario"

    def __post_init__(self):
        self.items = list(self.items)
        _check_items(self.items)
        self.probs = [to_fraction(p) for p in self.probs]
        s = len(self.probs)
        if s < 1:
            raise InputError("at least one scenario is required")
        if sum(self.probs) != 1 or any(p <= 0 for p in self.probs):
            raise InputError("scenario probabilities must be positive and sum to 1 exactly")
        if self.objective.n != self.groundset_size:
            raise InputError("objective groundset does not match instance groundset")
        for it in self.items:
            if len(it.realizations) != s:
                raise InputError(f"item {it.id} has {len(it.realizations)} realizations, expected {s}")
            for m in it.realizations:
                self.objective.check_mask(m)
        cols = {self.column(w) for w in range(s)}
        if len(cols) != s:
            raise InputError("duplicate scenarios; build with make_scenario_instance to merge them")
        f = self.objective
        for w in range(s):
            u = 0
            for it in self.items:
                u |= it.realizations[w]
            if f.value(u) != f.Q:
                raise InfeasibleError(f"scenario {w} cannot be covered (f={f.value(u)} < Q={f.Q})")
        self.real = [it.realizations for it in self.items]
        self.costs = [it.cost for it in self.items]
        self.denom = math.lcm(*(p.denominator for p in self.probs))
        self.weights = [int(p * self.denom) for p in self.probs]

    @property
    def s(self) -> int:
        return len(self.probs)

    @property
    def m(self) -> int:
        return len(self.items)

    @property
    def Q(self) -> int:
        return self.objective.Q

    def column(self, w: int) -> tuple[int, ...]:
        return tuple(it.realizations[w] for it in self.items)

    def sample_scenario(self, rng) -> int:
        cum = np.cumsum([float(p) for p in self.probs])
        k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        return min(k, self.s - 1)


def make_scenario_instance(realizations: Sequence[Sequence], probs: Sequence, costs: Sequence,
                           objective: Objective, metadata: dict | None = None) -> ScenarioInstance:
    """realizations[e][w] is item e's subset under scenario w.

    Duplicate scenarios are merged (first occurrence kept, probabilities
    summed); costs are scaled to integers.
    """
    masks = [[to_mask(x) for x in row] for row in realizations]
    s = len(probs)
    if any(len(row) != s for row in masks):
        raise InputError("every item needs one realization per scenario")
    ps = normalize_probs(probs)
    int_costs, scale = scale_costs(costs)
    if len(int_costs) != len(masks):
        raise InputError("one cost per item is required")
    keep: dict[tuple, int] = {}
    merged_p: list[Fraction] = []
    kept_cols: list[int] = []
    for w in range(s):
        col = tuple(row[w] for row in masks)
        if col in keep:
            merged_p[keep[col]] += ps[w]
        else:
            keep[col] = len(kept_cols)
            kept_cols.append(w)
            merged_p.append(ps[w])
    items = [Item(e, int_costs[e], realizations=tuple(masks[e][w] for w in kept_cols))
             for e in range(len(masks))]
    meta = dict(metadata or {})
    if scale != 1:
        meta["cost_scale"] = scale
    if len(kept_cols) != s:
        meta.setdefault("s_before_merge", s)
    return ScenarioInstance(items, merged_p, objective, objective.n, meta)


# --------------------------------------------------------------------------
# realization sources


class RealizationSource:
    """Reveals item realizations on probe; observations are immutable."""

    def __init__(self):
        self.observed: dict[int, int] = {}

    def _reveal(self, item_id: int) -> int:
        raise NotImplementedError

    def observe(self, item_id: int) -> int:
        if item_id in self.observed:
            return self.observed[item_id]
        v = self._reveal(item_id)
        self.observed[item_id] = v
        return v


class FixedRealization(RealizationSource):
    """Caller-provided realization vector (one mask per item)."""

    def __init__(self, masks: Sequence[int]):
        super().__init__()
        self.masks = tuple(masks)

    def _reveal(self, item_id):
        return self.masks[item_id]


class ScenarioRealization(RealizationSource):
    def __init__(self, instance: ScenarioInstance, scenario: int):
        super().__init__()
        if not 0 <= scenario < instance.s:
            raise InputError(f"scenario {scenario} out of range [0, {instance.s})")
        self.scenario = scenario
        self.instance = instance

    def _reveal(self, item_id):
        return self.instance.real[item_id][self.scenario]


def sampled_source(instance, rng) -> RealizationSource:
    """Draw a hidden realization up front (keeps draws independent of probe order)."""
    if instance.model == "scenario":
        return ScenarioRealization(instance, instance.sample_scenario(rng))
    return FixedRealization(instance.sample_realization(rng))


# --------------------------------------------------------------------------
# transcripts


@dataclass
class RoundRecord:
    items: list[int]
    observed: list[int]
    cost: int
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"items": list(self.items), "observed": [from_mask(m) for m in self.observed],
                "cost": self.cost, "params": self.params}


@dataclass
class PolicyTranscript:
    rounds: list[RoundRecord]
    total_cost: int
    covered: bool
    final_f_value: int
    Q: int

    def __post_init__(self):
        probed = [e for r in self.rounds for e in r.items]
        if len(probed) != len(set(probed)):
            raise InvariantViolation("an item was probed twice")
        if self.total_cost != sum(r.cost for r in self.rounds):
            raise InvariantViolation("total cost does not match round costs")
        if self.covered != (self.final_f_value == self.Q):
            raise InvariantViolation("covered flag disagrees with final f value")

    @property
    def n_rounds(self) -> int:
        return sum(1 for r in self.rounds if r.items)

    @property
    def probed(self) -> list[int]:
        return [e for r in self.rounds for e in r.items]

    def to_dict(self) -> dict:
        return {"rounds": [r.to_dict() for r in self.rounds], "total_cost": self.total_cost,
                "covered": self.covered, "final_f_value": self.final_f_value, "Q": self.Q}


def build_transcript(rounds: list[RoundRecord], objective: Objective) -> PolicyTranscript:
    R = 0
    for r in rounds:
        for m in r.observed:
            R |= m
    fv = objective.value(R)
    return PolicyTranscript(rounds, sum(r.cost for r in rounds), fv == objective.Q, fv, objective.Q)


# --------------------------------------------------------------------------
# JSON instance files


def _frac_str(p: Fraction) -> str:
    return str(p)


def objective_to_dict(f: Objective) -> dict:
    return {"family": f.family, "params": f.params()}


def objective_from_dict(d: dict, groundset_size: int) -> Objective:
    fam = d.get("family")
    params = dict(d.get("params", {}))
    if fam not in FAMILIES:
        raise InputError(f"unknown objective family {fam!r}")
    if fam == "TruncatedCoverage":
        return TruncatedCoverage(groundset_size, params["Q"], params.get("relevant"))
    if fam == "FilterEval":
        f = FilterEval(params["n_filters"], params["queries"])
        if f.n != groundset_size:
            raise InputError("FilterEval groundset must be 2 * n_filters")
        return f
    key = "values" if fam == "TruncatedAdditive" else "weights"
    return FAMILIES[fam](groundset_size, params["Q"], params[key])


def instance_to_dict(inst) -> dict:
    d = {"model": inst.model, "groundset_size": inst.groundset_size,
         "objective": objective_to_dict(inst.objective)}
    if inst.metadata:
        d["metadata"] = inst.metadata
    if inst.model == "independent":
        d["items"] = [{"id": it.id, "cost": it.cost,
                       "outcomes": [{"subset": from_mask(m), "prob": _frac_str(p)} for m, p in it.outcomes]}
                      for it in inst.items]
    else:
        d["items"] = [{"id": it.id, "cost": it.cost,
                       "realizations": [from_mask(m) for m in it.realizations]} for it in inst.items]
        d["scenarios"] = [{"prob": _frac_str(p)} for p in inst.probs]
    return d


def instance_from_dict(d: dict):
    try:
        model = d["model"]
        n = int(d["groundset_size"])
        f = objective_from_dict(d["objective"], n)
        raw_items = sorted(d["items"], key=lambda it: it["id"])
        meta = dict(d.get("metadata", {}))
        costs, scale = scale_costs([it["cost"] for it in raw_items])
        if scale != 1:
            meta["cost_scale"] = meta.get("cost_scale", 1) * scale
        if model == "independent":
            items = [make_independent_item(it["id"], c, [(o["subset"], o["prob"]) for o in it["outcomes"]])
                     for it, c in zip(raw_items, costs)]
            return IndependentInstance(items, n, f, meta)
        if model == "scenario":
            probs = [sc["prob"] for sc in d["scenarios"]]
            return make_scenario_instance([it["realizations"] for it in raw_items], probs, costs, f, meta)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed instance file: {exc!r}") from exc
    raise InputError(f"unknown model {model!r}")


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def save_instance(inst, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(instance_to_dict(inst)))


def load_instance(path):
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read instance {path}: {exc}") from exc
    return instance_from_dict(d)


def product_bounded(sizes: Iterable[int], cap: int) -> bool:
    """True when the product of ``sizes`` is at most ``cap``."""
    prod = 1
    for k in sizes:
        prod *= k
        if prod > cap:
            return False
    return True

