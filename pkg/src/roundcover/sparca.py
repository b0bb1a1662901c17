"""Scenario (correlated) solver: SParCA, the NSC recursion, SSPC and the 2r-round variant.

Scores are computed in exact integer arithmetic: scenario probabilities are
scaled to integer weights over a common denominator, and the relative-gain
terms of all large parts share the LCM of their residual targets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .core import (
    InputError,
    InvariantViolation,
    Objective,
    RealizationSource,
    RoundRecord,
    ScenarioInstance,
    build_transcript,
    from_mask,
    residual,
    to_fraction,
)


@dataclass(frozen=True)
class Threshold:
    """A fraction delta in (0, 1], either rational or of the form base^(-1/root).

    ``reached(count, total)`` decides count >= delta * total exactly.
    """

    num: int = 1
    den: int = 1
    base: int | None = None
    root: int | None = None

    @classmethod
    def of(cls, delta) -> "Threshold":
        if isinstance(delta, Threshold):
            return delta
        d = to_fraction(delta)
        if not 0 < d <= 1:
            raise InputError(f"threshold must lie in (0, 1], got {d}")
        return cls(d.numerator, d.denominator)

    @classmethod
    def root_of(cls, base: int, root: int) -> "Threshold":
        if base < 1 or root < 1:
            raise InputError("root threshold needs base >= 1, root >= 1")
        return cls(base=int(base), root=int(root))

    def reached(self, count: int, total: int) -> bool:
        if self.base is None:
            return count * self.den >= self.num * total
        # count >= base^(-1/root) * total  <=>  count^root * base >= total^root
        return count**self.root * self.base >= total**self.root

    def __str__(self):
        if self.base is None:
            return str(Fraction(self.num, self.den))
        return f"{self.base}^(-1/{self.root})"

    def approx(self) -> float:
        if self.base is None:
            return self.num / self.den
        return self.base ** (-1.0 / self.root)


@dataclass(frozen=True)
class SparcaConfig:
    delta: object = Fraction(1)
    epsilon: object | None = None
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "delta", Threshold.of(self.delta))
        if self.epsilon is not None:
            object.__setattr__(self, "epsilon", Threshold.of(self.epsilon))


# --------------------------------------------------------------------------
# partitions


@dataclass
class ScenarioPartition:
    parts: list[tuple[int, ...]]
    large: list[int]
    realized: list[int]  # S(Z) for each part
    residual_target: list[int]  # Q_Z = Q - f(S(Z))

    @property
    def large_parts(self) -> list[tuple[int, ...]]:
        return [self.parts[i] for i in self.large]


def _is_large(size: int, f_value: int, Q: int, total: int, delta: Threshold,
              epsilon: Threshold | None) -> bool:
    if not delta.reached(size, total):
        return False
    return epsilon is None or epsilon.reached(Q - f_value, Q)


def partition_by_prefix(instance: ScenarioInstance, chosen: Sequence[int], live: Sequence[int],
                        f: Objective | None = None, delta=Fraction(1), epsilon=None,
                        total: int | None = None) -> ScenarioPartition:
    """Group ``live`` scenarios by their realization vector on ``chosen`` items."""
    f = f or instance.objective
    delta = Threshold.of(delta)
    epsilon = None if epsilon is None else Threshold.of(epsilon)
    total = len(live) if total is None else total
    groups: dict[tuple, list[int]] = {}
    for w in live:
        key = tuple(instance.real[e][w] for e in chosen)
        groups.setdefault(key, []).append(w)
    parts, realized, qz, large = [], [], [], []
    for key, members in groups.items():
        S = 0
        for x in key:
            S |= x
        fS = f.value(S)
        if _is_large(len(members), fS, f.Q, total, delta, epsilon):
            large.append(len(parts))
        parts.append(tuple(members))
        realized.append(S)
        qz.append(f.Q - fS)
    return ScenarioPartition(parts, large, realized, qz)


@dataclass
class ItemSplit:
    big: tuple[int, ...]
    rest: tuple[int, ...]
    big_realization: int
    classes: dict[int, list[int]] = field(repr=False, default_factory=dict)


def _realization_key(mask: int) -> tuple[int, ...]:
    return tuple(from_mask(mask))


def _largest_class(sizes: dict[int, int]) -> int:
    """Realization of the largest class; ties go to the lexicographically smallest realization."""
    best, best_n = None, -1
    for x, n in sizes.items():
        if n > best_n or (n == best_n and _realization_key(x) < _realization_key(best)):
            best, best_n = x, n
    return best


def split_by_item(instance: ScenarioInstance, Z: Sequence[int], e: int) -> ItemSplit:
    """Split Z by item e's realization into the largest class B_e(Z) and the rest L_e(Z)."""
    if not Z:
        raise InputError("split_by_item needs a non-empty scenario set")
    row = instance.real[e]
    classes: dict[int, list[int]] = {}
    for w in Z:
        classes.setdefault(row[w], []).append(w)
    b = _largest_class({x: len(v) for x, v in classes.items()})
    big = tuple(classes[b])
    rest = tuple(w for w in Z if row[w] != b)
    return ItemSplit(big, rest, b, classes)


def scenario_score(instance: ScenarioInstance, e: int, partition: ScenarioPartition,
                   f: Objective | None = None) -> Fraction:
    """Information gain plus relative function gain over large parts, per unit cost."""
    f = f or instance.objective
    w = instance.weights
    row = instance.real[e]
    total = Fraction(0)
    for i in partition.large:
        Z = partition.parts[i]
        S, qz = partition.realized[i], partition.residual_target[i]
        split = split_by_item(instance, Z, e)
        total += Fraction(sum(w[x] for x in split.rest), instance.denom)
        if qz > 0:
            fS = f.Q - qz
            gain = sum(w[x] * (f.value(S | row[x]) - fS) for x in Z)
            total += Fraction(gain, instance.denom * qz)
    return total / instance.costs[e]


# --------------------------------------------------------------------------
# the greedy list


class _Part:
    __slots__ = ("members", "S", "fS")

    def __init__(self, members, S, fS):
        self.members = members
        self.S = S
        self.fS = fS


class ScenarioGreedyList:
    """Lazily built SParCA/SSPC list for one round.

    Only large parts are tracked: refinement never makes a small part large
    again, and in SSPC mode parts past the value target stay past it.
    """

    def __init__(self, instance: ScenarioInstance, remaining: Sequence[int], live: Sequence[int],
                 f: Objective, delta: Threshold, epsilon: Threshold | None = None):
        self.instance = instance
        self.f = f
        self.delta = delta
        self.epsilon = epsilon
        self.total = len(live)
        self.remaining = sorted(remaining)
        self.order: list[int] = []
        self.scores: list[Fraction] = []
        fS = f.value(0)
        self._parts = []
        if _is_large(len(live), fS, f.Q, self.total, delta, epsilon):
            self._parts = [_Part(tuple(live), 0, fS)]

    def __len__(self):
        return len(self.order) + len(self.remaining)

    def __getitem__(self, i: int) -> int:
        while len(self.order) <= i:
            if not self.remaining:
                raise IndexError(i)
            self.extend_one()
        return self.order[i]

    def materialize(self) -> list[int]:
        if len(self):
            self[len(self) - 1]
        return list(self.order)

    def partition(self) -> ScenarioPartition:
        """Current large parts (small parts are not tracked)."""
        parts = [p.members for p in self._parts]
        return ScenarioPartition(parts, list(range(len(parts))), [p.S for p in self._parts],
                                 [self.f.Q - p.fS for p in self._parts])

    def extend_one(self) -> int:
        if not self._parts:
            # no large part left: every score is zero, take the rest in id order
            self.order.extend(self.remaining)
            self.scores.extend([Fraction(0)] * len(self.remaining))
            self.remaining = []
            return self.order[-1]
        inst, f = self.instance, self.f
        Q = f.Q
        w = inst.weights
        qzs = [Q - p.fS for p in self._parts]
        L = 1
        for q in qzs:
            if q > 0:
                L = L * q // math.gcd(L, q)
        best, best_num = None, None
        for e in self.remaining:
            row = inst.real[e]
            num = 0
            for part, qz in zip(self._parts, qzs):
                classes: dict[int, list] = {}
                for x in part.members:
                    c = classes.get(row[x])
                    if c is None:
                        classes[row[x]] = [1, w[x]]
                    else:
                        c[0] += 1
                        c[1] += w[x]
                if len(classes) > 1:
                    b = _largest_class({k: v[0] for k, v in classes.items()})
                    info = sum(v[1] for k, v in classes.items() if k != b)
                    num += info * L
                if qz > 0:
                    S, fS = part.S, part.fS
                    scale = L // qz
                    for x, (_, wt) in classes.items():
                        g = f.value(S | x) - fS
                        if g:
                            num += wt * g * scale
            cost = inst.costs[e]
            if best is None or num * inst.costs[best] > best_num * cost:
                best, best_num = e, num
        self.remaining.remove(best)
        self.order.append(best)
        self.scores.append(Fraction(best_num, inst.denom * L * inst.costs[best]))
        self._refine(best)
        return best

    def _refine(self, e: int) -> None:
        row = self.instance.real[e]
        f, Q = self.f, self.f.Q
        out = []
        for part in self._parts:
            classes: dict[int, list[int]] = {}
            for x in part.members:
                classes.setdefault(row[x], []).append(x)
            for x, members in classes.items():
                if not self.delta.reached(len(members), self.total):
                    continue
                S = part.S | x
                fS = part.fS if S == part.S else f.value(S)
                if self.epsilon is not None and not self.epsilon.reached(Q - fS, Q):
                    continue
                out.append(_Part(tuple(members), S, fS))
        self._parts = out


# --------------------------------------------------------------------------
# probing


@dataclass
class SparcaResult:
    probed: list[int]
    observed: list[int]
    realized: int
    live: tuple[int, ...]
    cost: int
    params: dict

    def record(self) -> RoundRecord:
        return RoundRecord(self.probed, self.observed, self.cost, self.params)


def stop_rule(f: Objective, delta: Threshold, epsilon: Threshold | None, total: int):
    """Predicate (n_live, f_value) -> True when the round's stopping rule fires."""
    Q = f.Q

    def stopped(n_live: int, fv: int) -> bool:
        if not delta.reached(n_live, total):
            return True
        if epsilon is None:
            return fv >= Q
        return not epsilon.reached(Q - fv, Q)

    return stopped


def probe_scenario_list(instance: ScenarioInstance, glist: ScenarioGreedyList, live: Sequence[int],
                        source: RealizationSource) -> SparcaResult:
    f = glist.f
    stopped = stop_rule(f, glist.delta, glist.epsilon, len(live))
    H = tuple(live)
    R, cost, probed, observed = 0, 0, [], []
    fv = f.value(0)
    i = 0
    while not stopped(len(H), fv):
        if i >= len(glist):
            raise InvariantViolation("scenario list exhausted before the stopping rule fired")
        e = glist[i]
        v = source.observe(e)
        row = instance.real[e]
        H = tuple(x for x in H if row[x] == v)
        if not H:
            raise InputError(f"observed realization of item {e} is incompatible with every live scenario")
        probed.append(e)
        observed.append(v)
        cost += instance.costs[e]
        R |= v
        fv = f.value(R)
        i += 1
    params = {"delta": str(glist.delta), "s": len(live), "Q": f.Q}
    if glist.epsilon is not None:
        params["epsilon"] = str(glist.epsilon)
    return SparcaResult(probed, observed, R, H, cost, params)


def run_scenario_round(instance: ScenarioInstance, remaining: Sequence[int], live: Sequence[int],
                       f: Objective, delta: Threshold, epsilon: Threshold | None,
                       source: RealizationSource, cache: dict | None = None,
                       key=None) -> SparcaResult:
    glist = cache.get(key) if cache is not None and key is not None else None
    if glist is None:
        glist = ScenarioGreedyList(instance, remaining, live, f, delta, epsilon)
        if cache is not None and key is not None:
            cache[key] = glist
    return probe_scenario_list(instance, glist, live, source)


def sparca_run(instance: ScenarioInstance, config: SparcaConfig, source: RealizationSource,
               cache: dict | None = None) -> SparcaResult:
    """One SParCA (or SSPC, when ``config.epsilon`` is set) call on the full instance."""
    live = tuple(range(instance.s))
    remaining = tuple(range(instance.m))
    key = ("sparca", str(config.delta), str(config.epsilon))
    return run_scenario_round(instance, remaining, live, instance.objective, config.delta,
                              config.epsilon, source, cache, key)


def nsc_solve(r: int, instance: ScenarioInstance, source: RealizationSource,
              config: SparcaConfig | None = None, cache: dict | None = None):
    """r-round adaptive scenario submodular cover.

    Round k runs classic SParCA on the surviving scenarios H with
    delta = |H|^(-1/(r-k+1)) and the residual objective.
    """
    if r < 1:
        raise InputError("rounds must be >= 1")
    live = tuple(range(instance.s))
    probed: set[int] = set()
    R = 0
    rounds = []
    for k in range(1, r + 1):
        f_k = residual(instance.objective, R)
        if f_k.Q == 0:
            break
        delta = Threshold.root_of(len(live), r - k + 1)
        remaining = tuple(e for e in range(instance.m) if e not in probed)
        key = ("nsc", remaining, live, R, delta)
        res = run_scenario_round(instance, remaining, live, f_k, delta, None, source, cache, key)
        probed.update(res.probed)
        R |= res.realized
        live = res.live
        rounds.append(res.record())
    return build_transcript(rounds, instance.objective)


def nsc2r_solve(r: int, instance: ScenarioInstance, source: RealizationSource,
                cache: dict | None = None):
    """2r-round variant: repeated SSPC with delta = s^(-1/r), epsilon = Q^(-1/r)."""
    if r < 1:
        raise InputError("rounds must be >= 1")
    delta = Threshold.root_of(instance.s, r)
    epsilon = Threshold.root_of(instance.Q, r)
    live = tuple(range(instance.s))
    probed: set[int] = set()
    R = 0
    rounds = []
    for _ in range(2 * r):
        f_k = residual(instance.objective, R)
        if f_k.Q == 0:
            break
        remaining = tuple(e for e in range(instance.m) if e not in probed)
        key = ("sspc", remaining, live, R, delta, epsilon)
        res = run_scenario_round(instance, remaining, live, f_k, delta, epsilon, source, cache, key)
        probed.update(res.probed)
        R |= res.realized
        live = res.live
        rounds.append(res.record())
    return build_transcript(rounds, instance.objective)
