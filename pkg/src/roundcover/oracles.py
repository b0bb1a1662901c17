"""Exact baselines and lower bounds for small instances."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .core import (
    IndependentInstance,
    InfeasibleError,
    InputError,
    Objective,
    ScenarioInstance,
    product_bounded,
)

SCENARIO_GUARD = 12
INDEPENDENT_GUARD_M = 6
INDEPENDENT_GUARD_SUPPORT = 4096
ENUMERATION_GUARD_M = 4
OFFLINE_EXACT_M = 40


class GuardExceeded(InputError):
    """Instance too large for an exact oracle."""


# --------------------------------------------------------------------------
# adaptive optimum, scenario model


def _check_scenario_guard(instance: ScenarioInstance):
    if instance.s > SCENARIO_GUARD or instance.m > SCENARIO_GUARD:
        raise GuardExceeded(f"exact adaptive optimum needs s, m <= {SCENARIO_GUARD} "
                            f"(got s={instance.s}, m={instance.m})")


def optimal_adaptive_scenario(instance: ScenarioInstance) -> Fraction:
    """Minimum expected cost over all adaptive policies.

    Memoized on (compatible scenario bitset, realized elements).  Items whose
    probe cannot change the state are skipped.
    """
    _check_scenario_guard(instance)
    f, Q = instance.objective, instance.Q
    real, costs, weights = instance.real, instance.costs, instance.weights

    @lru_cache(maxsize=None)
    def value(H: int, R: int) -> Fraction:
        if f.value(R) >= Q:
            return Fraction(0)
        members = [w for w in range(instance.s) if H >> w & 1]
        total = sum(weights[w] for w in members)
        best = None
        for e in range(instance.m):
            branches: dict[int, int] = {}
            for w in members:
                branches[real[e][w]] = branches.get(real[e][w], 0) | (1 << w)
            if len(branches) == 1:
                (v,) = branches
                if R | v == R:
                    continue
            exp = Fraction(costs[e])
            for v, Hv in branches.items():
                wv = sum(weights[w] for w in range(instance.s) if Hv >> w & 1)
                exp += Fraction(wv, total) * value(Hv, R | v)
                if best is not None and exp >= best:
                    break
            if best is None or exp < best:
                best = exp
        if best is None:
            raise InfeasibleError("no item makes progress on an uncovered state")
        return best

    return value((1 << instance.s) - 1, 0)


def brute_force_adaptive_scenario(instance: ScenarioInstance) -> Fraction:
    """Decision-tree enumeration over probe histories, without state compression.

    Every unprobed item is tried at every node, including useless ones.
    Exponential in m; intended as a cross-check for m <= 6.
    """
    _check_scenario_guard(instance)
    f, Q = instance.objective, instance.Q
    real, costs = instance.real, instance.costs
    probs = instance.probs

    def tree(probed: tuple[int, ...], H: list[int]) -> Fraction:
        rep = H[0]
        R = 0
        for e in probed:
            R |= real[e][rep]
        if f.value(R) >= Q:
            return Fraction(0)
        pH = sum(probs[w] for w in H)
        best = None
        for e in range(instance.m):
            if e in probed:
                continue
            groups: dict[int, list[int]] = {}
            for w in H:
                groups.setdefault(real[e][w], []).append(w)
            exp = Fraction(costs[e])
            for sub in groups.values():
                exp += sum(probs[w] for w in sub) / pH * tree(probed + (e,), sub)
            if best is None or exp < best:
                best = exp
        if best is None:
            raise InfeasibleError("all items probed without covering")
        return best

    return tree((), list(range(instance.s)))


# --------------------------------------------------------------------------
# adaptive optimum, independent model


def _check_independent_guard(instance: IndependentInstance, max_m: int):
    sizes = [len(it.outcomes) for it in instance.items]
    if instance.m > max_m or not product_bounded(sizes, INDEPENDENT_GUARD_SUPPORT):
        raise GuardExceeded(f"exact adaptive optimum needs m <= {max_m} and support product "
                            f"<= {INDEPENDENT_GUARD_SUPPORT}")


def optimal_adaptive_independent(instance: IndependentInstance) -> Fraction:
    """Exact optimum by recursion on (probed set, realized elements)."""
    _check_independent_guard(instance, INDEPENDENT_GUARD_M)
    f, Q = instance.objective, instance.Q
    items = instance.items
    inf = None

    @lru_cache(maxsize=None)
    def value(probed: int, R: int):
        if f.value(R) >= Q:
            return Fraction(0)
        best = inf
        for it in items:
            if probed >> it.id & 1:
                continue
            exp = Fraction(it.cost)
            for x, p in it.outcomes:
                sub = value(probed | (1 << it.id), R | x)
                if sub is inf:
                    exp = inf
                    break
                exp += p * sub
            if exp is not inf and (best is inf or exp < best):
                best = exp
        return best

    out = value(0, 0)
    if out is inf:
        raise InfeasibleError("some realization cannot be covered")
    return out


def enumerate_adaptive_independent(instance: IndependentInstance) -> Fraction:
    """Full decision-tree enumeration over outcome histories (m <= 4)."""
    _check_independent_guard(instance, ENUMERATION_GUARD_M)
    f, Q = instance.objective, instance.Q
    items = instance.items

    def tree(history: tuple[tuple[int, int], ...]):
        R = 0
        for _, x in history:
            R |= x
        if f.value(R) >= Q:
            return Fraction(0)
        done = {e for e, _ in history}
        best = None
        for it in items:
            if it.id in done:
                continue
            exp = Fraction(it.cost)
            ok = True
            for x, p in it.outcomes:
                sub = tree(history + ((it.id, x),))
                if sub is None:
                    ok = False
                    break
                exp += p * sub
            if ok and (best is None or exp < best):
                best = exp
        return best

    out = tree(())
    if out is None:
        raise InfeasibleError("some realization cannot be covered")
    return out


# --------------------------------------------------------------------------
# offline optimum for a fixed realization


@dataclass(frozen=True)
class OfflineBound:
    cost: int
    exact: bool


def _fractional_bound(gap: int, gains: Sequence[int], costs: Sequence[int]):
    """Ceiling of the cheapest fractional purchase of marginal gains summing to ``gap``.

    Valid lower bound for any completion by submodularity; integer because
    costs are integers.  Returns ``math.inf`` when the gains cannot reach gap.
    """
    if gap <= 0:
        return 0
    # float keys order small-integer ratios exactly
    order = sorted((c / g, g, c) for g, c in zip(gains, costs) if g > 0)
    need = gap
    lb = 0
    for _, g, c in order:
        if g >= need:
            return lb + -(-c * need // g)
        lb += c
        need -= g
    return math.inf


def _reduce_items(masks: Sequence[int], costs: Sequence[int]) -> list[tuple[int, int]]:
    """Drop empty, duplicate and dominated (subset mask at no lower cost) items."""
    cand = sorted(((c, -bin(x).count("1"), x) for x, c in zip(masks, costs) if x), key=lambda t: (t[0], t[1], t[2]))
    kept: list[tuple[int, int]] = []
    for c, _, x in cand:
        if any(x | y == y and cy <= c for y, cy in kept):
            continue
        kept.append((x, c))
    return kept


def item_costs(instance) -> list[int]:
    if instance.model == "scenario":
        return list(instance.costs)
    return [it.cost for it in instance.items]


def offline_optimal(instance, realization: Sequence[int]) -> OfflineBound:
    """Minimum-cost item set covering Q under a known realization (one mask per item).

    Exact branch-and-bound up to 40 items; beyond that the root fractional
    bound is returned with ``exact=False``.
    """
    f: Objective = instance.objective
    Q = f.Q
    masks = list(realization)
    costs = item_costs(instance)
    if len(masks) != len(costs):
        raise InputError("realization must give one mask per item")
    full = 0
    for x in masks:
        full |= x
    if f.value(full) < Q:
        raise InfeasibleError("realization cannot reach Q")
    if Q == 0:
        return OfflineBound(0, True)
    items = _reduce_items(masks, costs)
    if len(items) > OFFLINE_EXACT_M:
        f0 = f.value(0)
        gains = [f.value(x) - f0 for x, _ in items]
        lb = _fractional_bound(Q - f0, gains, [c for _, c in items])
        return OfflineBound(lb, False)
    return OfflineBound(_branch_and_bound(f, items), True)


def _greedy_cover(f: Objective, items: list[tuple[int, int]]) -> int:
    R, cost = 0, 0
    fR = f.value(0)
    left = list(items)
    while fR < f.Q:
        best, bi = None, -1
        for i, (x, c) in enumerate(left):
            g = f.value(R | x) - fR
            if g > 0 and (best is None or g * best[1] > best[0] * c):
                best, bi = (g, c), i
        x, c = left.pop(bi)
        R |= x
        cost += c
        fR = f.value(R)
    return cost


def _branch_and_bound(f: Objective, items: list[tuple[int, int]]) -> int:
    Q = f.Q
    best = [_greedy_cover(f, items)]

    def search(R: int, fR: int, cost: int, left: list[tuple[int, int]]):
        if fR >= Q:
            if cost < best[0]:
                best[0] = cost
            return
        gains = [f.value(R | x) - fR for x, _ in left]
        useful = [(x, c, g) for (x, c), g in zip(left, gains) if g > 0]
        if not useful:
            return
        lb = cost + _fractional_bound(Q - fR, [g for *_, g in useful], [c for _, c, _ in useful])
        if lb >= best[0]:
            return
        union = R
        for x, _, _ in useful:
            union |= x
        if f.value(union) < Q:
            return
        # branch on the densest item: take it, then forbid it
        k = max(range(len(useful)), key=lambda i: (useful[i][2] / useful[i][1], -i))
        x, c, _ = useful[k]
        rest = [(y, cy) for i, (y, cy, _) in enumerate(useful) if i != k]
        R2 = R | x
        search(R2, f.value(R2), cost + c, rest)
        search(R, fR, cost, rest)

    search(0, f.value(0), 0, items)
    return best[0]


def offline_optimal_exhaustive(instance, realization: Sequence[int]) -> int:
    """Subset enumeration; a reference for the branch-and-bound (m <= 20)."""
    masks = list(realization)
    costs = item_costs(instance)
    if len(masks) > 20:
        raise GuardExceeded("exhaustive offline optimum limited to 20 items")
    f = instance.objective
    best = None
    for sub in range(1 << len(masks)):
        R, c = 0, 0
        for i in range(len(masks)):
            if sub >> i & 1:
                R |= masks[i]
                c += costs[i]
        if (best is None or c < best) and f.value(R) >= f.Q:
            best = c
    if best is None:
        raise InfeasibleError("realization cannot reach Q")
    return best


# --------------------------------------------------------------------------
# information-theoretic bound


@dataclass(frozen=True)
class EntropyBound:
    bits: float
    heuristic: bool


def entropy_lower_bound(instance: ScenarioInstance) -> EntropyBound:
    """Shannon entropy of the scenario prior in bits (log2 s when uniform).

    A valid bound on expected tests for unit-cost binary tests; flagged
    heuristic when costs are non-unit or some test has more than two outcomes.
    """
    probs = instance.probs
    if len(set(probs)) == 1:
        bits = math.log2(len(probs))
    else:
        bits = -sum(float(p) * math.log2(float(p)) for p in probs if p > 0)
    bits = max(bits, 0.0)
    non_unit = any(c != instance.costs[0] for c in instance.costs) or (instance.costs and instance.costs[0] != 1)
    multiway = any(len(set(row)) > 2 for row in instance.real)
    return EntropyBound(bits, bool(non_unit or multiway))
