"""Set-based rounds: probe a cost-budgeted prefix of each permutation round in one batch."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    IndependentInstance,
    InputError,
    RealizationSource,
    ScenarioInstance,
    residual,
    to_fraction,
)
from .parca import GreedyList, ParcaConfig, root_delta
from .sparca import ScenarioGreedyList, Threshold, stop_rule

MU_TRIALS = 200
EXACT_OUTCOME_CAP = 4096
MODES = ("small_r", "large_r")


@dataclass(frozen=True)
class SetRoundPolicy:
    """Conversion of the r-round permutation policy into set-based rounds.

    small_r: r rounds, budget ceil((r/eta) * mu).  large_r: 2r ParCA rounds
    (independent) or 4r SSPC rounds (scenario), budget ceil(4 * mu).
    """

    r: int
    mode: str = "small_r"
    eta: Fraction | None = Fraction(1, 10)
    mu_trials: int = MU_TRIALS
    seed: int = 0
    parca: ParcaConfig = field(default_factory=ParcaConfig)

    def __post_init__(self):
        if self.r < 1:
            raise InputError("rounds must be >= 1")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "small_r":
            eta = to_fraction(self.eta)
            if not 0 < eta < 1:
                raise InputError("eta must lie in (0, 1)")
            object.__setattr__(self, "eta", eta)
        if self.mu_trials < 1:
            raise InputError("mu_trials must be >= 1")

    def budget(self, mu: Fraction) -> int:
        if self.mode == "small_r":
            return math.ceil(Fraction(self.r) / self.eta * mu)
        return math.ceil(4 * mu)

    def n_rounds(self, model: str) -> int:
        if self.mode == "small_r":
            return self.r
        return 2 * self.r if model == "independent" else 4 * self.r


@dataclass
class SetRound:
    items: list[int]
    observed: list[int]
    cost: int
    mu: Fraction
    budget: int
    success: bool
    # list position at which the permutation stopping rule fires, if within the batch
    stop_index: int | None

    def to_dict(self) -> dict:
        return {"items": self.items, "cost": self.cost, "mu": str(self.mu), "budget": self.budget,
                "success": self.success, "stop_index": self.stop_index}


@dataclass
class SetRoundTranscript:
    rounds: list[SetRound]
    total_cost: int
    covered: bool
    final_f_value: int
    Q: int

    @property
    def rounds_used(self) -> int:
        return sum(1 for r in self.rounds if r.items)

    @property
    def successes(self) -> int:
        return sum(1 for r in self.rounds if r.success)

    def to_dict(self) -> dict:
        return {"rounds": [r.to_dict() for r in self.rounds], "total_cost": self.total_cost,
                "covered": self.covered, "final_f_value": self.final_f_value, "Q": self.Q}


def _state_rng(seed: int, key) -> np.random.Generator:
    digest = hashlib.sha256(repr((seed, key)).encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


# --------------------------------------------------------------------------
# one permutation round, abstracted over the two models


class _IndependentRound:
    """ParCA list on the unprobed items; stops once f_T(S) > tau."""

    def __init__(self, items, f, delta: Fraction, config: ParcaConfig, seed, m_total, c_max):
        self.f = f
        self.tau = f.Q * (1 - delta)
        self.items = {it.id: it for it in items}
        self.glist = GreedyList(items, f, self.tau, config, seed=seed, m_total=m_total, c_max=c_max)

    def cost_of(self, i: int) -> int:
        return self.glist[i].cost

    def id_at(self, i: int) -> int:
        return self.glist[i].id

    def __len__(self):
        return len(self.glist)

    def stop_index(self, outcomes: Sequence[int]) -> int | None:
        """Index after which the rule fires when the list realizes to ``outcomes`` (a prefix)."""
        R = 0
        if self.f.value(R) > self.tau:
            return 0
        for i, x in enumerate(outcomes):
            R |= x
            if self.f.value(R) > self.tau:
                return i + 1
        return None

    def expected_cost(self, M: int, rng) -> Fraction:
        exact = self._enumerate()
        if exact is not None:
            return exact
        total = 0
        for _ in range(M):
            R, cost, i = 0, 0, 0
            fR = self.f.value(0)
            while fR <= self.tau:
                it = self.glist[i]
                k = int(rng.choice(len(it.outcomes), p=[float(p) for _, p in it.outcomes]))
                R |= it.outcomes[k][0]
                cost += it.cost
                fR = self.f.value(R)
                i += 1
            total += cost
        return Fraction(total, M)

    def _enumerate(self) -> Fraction | None:
        """Exact expectation by walking the list, or None beyond the outcome cap."""
        f, tau = self.f, self.tau
        frontier = [(0, Fraction(1))] if f.value(0) <= tau else []
        exp = Fraction(0)
        i = 0
        while frontier:
            it = self.glist[i]
            exp += it.cost * sum(p for _, p in frontier)
            nxt: dict[int, Fraction] = {}
            for S, p in frontier:
                for x, q in it.outcomes:
                    T = S | x
                    if f.value(T) <= tau:
                        nxt[T] = nxt.get(T, 0) + p * q
            if len(nxt) > EXACT_OUTCOME_CAP:
                return None
            frontier = list(nxt.items())
            i += 1
        return exp


class _ScenarioRound:
    """SParCA/SSPC list on the live scenarios."""

    def __init__(self, instance: ScenarioInstance, remaining, live, f, delta: Threshold,
                 epsilon: Threshold | None):
        self.instance = instance
        self.live = tuple(live)
        self.f = f
        self.glist = ScenarioGreedyList(instance, remaining, live, f, delta, epsilon)
        self.stopped = stop_rule(f, delta, epsilon, len(live))

    def cost_of(self, i: int) -> int:
        return self.instance.costs[self.glist[i]]

    def id_at(self, i: int) -> int:
        return self.glist[i]

    def __len__(self):
        return len(self.glist)

    def stop_index(self, outcomes: Sequence[int]) -> int | None:
        H, R = self.live, 0
        if self.stopped(len(H), self.f.value(0)):
            return 0
        for i, v in enumerate(outcomes):
            row = self.instance.real[self.glist[i]]
            H = tuple(w for w in H if row[w] == v)
            R |= v
            if self.stopped(len(H), self.f.value(R)):
                return i + 1
        return None

    def _cost_under(self, w: int) -> int:
        H, R, cost, i = self.live, 0, 0, 0
        while not self.stopped(len(H), self.f.value(R)):
            e = self.glist[i]
            v = self.instance.real[e][w]
            H = tuple(x for x in H if self.instance.real[e][x] == v)
            R |= v
            cost += self.instance.costs[e]
            i += 1
        return cost

    def expected_cost(self, M: int, rng) -> Fraction:
        weights = self.instance.weights
        if len(self.live) <= EXACT_OUTCOME_CAP:
            tot = sum(weights[w] for w in self.live)
            return Fraction(sum(weights[w] * self._cost_under(w) for w in self.live), tot)
        p = np.array([weights[w] for w in self.live], dtype=float)
        draws = rng.choice(len(self.live), size=M, p=p / p.sum())
        return Fraction(sum(self._cost_under(self.live[int(k)]) for k in draws), M)


# --------------------------------------------------------------------------


def estimate_round_cost(round_state, M: int = MU_TRIALS, rng=None) -> Fraction:
    """Expected probing cost of one permutation round under the conditional distribution.

    Exact when the conditional outcome space has at most 4096 points,
    otherwise the mean over M simulated realizations.
    """
    if M < 1:
        raise InputError("M must be >= 1")
    if round_state.f.Q == 0:
        return Fraction(0)
    return round_state.expected_cost(M, np.random.default_rng(rng))


def _round_for(policy: SetRoundPolicy, instance, k: int, probed: set, R: int, live,
               c_max: int):
    f_k = residual(instance.objective, R)
    if instance.model == "independent":
        if policy.mode == "small_r":
            delta = root_delta(f_k.Q, policy.r - k + 1)
        else:
            delta = root_delta(instance.Q, policy.r)
        remaining = [it for it in instance.items if it.id not in probed]
        key = ("set-ind", policy.mode, k, tuple(it.id for it in remaining), R, delta)
        return key, lambda: _IndependentRound(remaining, f_k, delta, policy.parca, [policy.parca.rng_seed, k],
                                              instance.m, c_max)
    if policy.mode == "small_r":
        delta, epsilon = Threshold.root_of(len(live), policy.r - k + 1), None
    else:
        delta, epsilon = Threshold.root_of(instance.s, policy.r), Threshold.root_of(instance.Q, policy.r)
    remaining = tuple(e for e in range(instance.m) if e not in probed)
    key = ("set-scn", policy.mode, remaining, tuple(live), R, str(delta), str(epsilon))
    return key, lambda: _ScenarioRound(instance, remaining, live, f_k, delta, epsilon)


def run_set_based(policy: SetRoundPolicy, instance, oracle: RealizationSource,
                  cache: dict | None = None) -> SetRoundTranscript:
    """Run the set-based conversion against a hidden realization.

    Each round probes the maximal list prefix within budget as one batch and
    pays for all of it.  small_r always spends exactly r rounds (empty
    batches once covered) and may end uncovered.
    """
    if not isinstance(instance, (IndependentInstance, ScenarioInstance)):
        raise InputError("unsupported instance type")
    cache = {} if cache is None else cache
    n_rounds = policy.n_rounds(instance.model)
    c_max = max(instance.costs) if instance.model == "scenario" else max(it.cost for it in instance.items)
    f = instance.objective
    probed: set[int] = set()
    R = 0
    live = tuple(range(instance.s)) if instance.model == "scenario" else None
    rounds = []
    for k in range(1, n_rounds + 1):
        if f.value(R) >= f.Q:
            rounds.append(SetRound([], [], 0, Fraction(0), 0, True, 0))
            continue
        key, make = _round_for(policy, instance, k, probed, R, live, c_max)
        entry = cache.get(key)
        if entry is None:
            rs = make()
            mu = estimate_round_cost(rs, policy.mu_trials, _state_rng(policy.seed, key))
            entry = cache[key] = (rs, mu)
        rs, mu = entry
        budget = policy.budget(mu)
        batch, spent, i = [], 0, 0
        while i < len(rs) and spent + rs.cost_of(i) <= budget:
            batch.append(rs.id_at(i))
            spent += rs.cost_of(i)
            i += 1
        observed = [oracle.observe(e) for e in batch]
        stop = rs.stop_index(observed)
        for e, v in zip(batch, observed):
            probed.add(e)
            R |= v
        if live is not None:
            live = tuple(w for w in live if all(instance.real[e][w] == v for e, v in zip(batch, observed)))
            if not live:
                raise InputError("observed realizations are incompatible with every scenario")
        rounds.append(SetRound(batch, observed, spent, mu, budget, stop is not None, stop))
    fv = f.value(R)
    return SetRoundTranscript(rounds, sum(r.cost for r in rounds), fv >= f.Q, fv, f.Q)


# --------------------------------------------------------------------------
# the doubling-cost example: exact coverage needs the last item


def doubling_example_costs(m: int) -> list[int]:
    """Item i (1-based) costs 2^i and succeeds w.p. 1/2; item m is deterministic."""
    return [2**i for i in range(1, m + 1)]


def doubling_permutation_cost(m: int) -> Fraction:
    """Expected cost of probing items 1..m in order until the first success."""
    costs = doubling_example_costs(m)
    return sum((Fraction(costs[i - 1], 2 ** (i - 1)) for i in range(1, m + 1)), Fraction(0))


def doubling_set_cost(m: int, cuts: Sequence[int]) -> Fraction:
    """Expected cost of the set-based solution with round boundaries ``cuts``.

    cuts = (i(1), ..., i(r-1)); round j probes items i(j-1)+1 .. i(j) and is
    needed with probability 2^-i(j-1).
    """
    costs = doubling_example_costs(m)
    bounds = [0, *cuts, m]
    if any(b > a for a, b in zip(bounds[1:], bounds)):
        raise InputError("cuts must be non-decreasing within [0, m]")
    total = Fraction(0)
    for a, b in zip(bounds, bounds[1:]):
        total += Fraction(sum(costs[a:b]), 2**a)
    return total


def doubling_best_set_cost(m: int, r: int) -> Fraction:
    """Minimum over all r-round cut points (exact coverage requires reaching item m)."""
    from itertools import combinations_with_replacement

    return min(doubling_set_cost(m, cuts) for cuts in combinations_with_replacement(range(m + 1), r - 1))
