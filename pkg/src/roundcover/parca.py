"""Independent-items solver: partial covering (ParCA) and the r-round SSC recursion."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    IndependentInstance,
    InputError,
    InvariantViolation,
    Item,
    Objective,
    RealizationSource,
    RoundRecord,
    build_transcript,
    product_bounded,
    residual,
    to_fraction,
)

EXACT_SUPPORT_CAP = 10**6
K_CAP = 10**6


class ScoreOverflow(InputError):
    """Exact score enumeration would exceed the support-product guard."""


def normalize_delta(delta) -> Fraction:
    """Largest power of two 2^-k (k >= 0) not exceeding ``delta``."""
    delta = to_fraction(delta)
    if not 0 < delta <= 1:
        raise InputError(f"delta must lie in (0, 1], got {delta}")
    k = 0
    while Fraction(1, 2**k) > delta:
        k += 1
    return Fraction(1, 2**k)


def root_delta(base: int, root: int) -> Fraction:
    """Power-of-two normalization of base^(-1/root), computed with integers."""
    if base < 1 or root < 1:
        raise InputError("root_delta needs base >= 1 and root >= 1")
    k = 0
    while 2 ** (k * root) < base:
        k += 1
    return Fraction(1, 2**k)


def default_sample_count(m: int, c_max: int, constant: int = 4) -> int:
    return min(constant * m * m * c_max * math.ceil(math.log2(m * c_max + 2)), K_CAP)


def default_epsilon(m: int, c_max: int) -> Fraction:
    return Fraction(1, m * m * c_max)


@dataclass(frozen=True)
class ParcaConfig:
    delta: Fraction = Fraction(1)
    sampler: str = "exact"
    K: int | None = None
    sample_constant: int = 4
    epsilon: Fraction | None = None
    rng_seed: int = 0

    def __post_init__(self):
        d = to_fraction(self.delta)
        object.__setattr__(self, "delta", d)
        if not 0 < d <= 1:
            raise InputError(f"delta must lie in (0, 1], got {d}")
        if self.sampler not in ("exact", "sampled"):
            raise InputError(f"sampler must be 'exact' or 'sampled', got {self.sampler!r}")
        if self.K is not None and self.K < 1:
            raise InputError("K must be >= 1")
        if self.epsilon is not None and to_fraction(self.epsilon) <= 0:
            raise InputError("epsilon must be positive")


# --------------------------------------------------------------------------
# scores


def _prefix_distribution(prefix: Sequence[Item], f: Objective, tau: Fraction) -> dict[int, Fraction]:
    """Distribution of the union of prefix realizations, restricted to f(S) <= tau."""
    dist = {0: Fraction(1)} if f.value(0) <= tau else {}
    for it in prefix:
        nxt: dict[int, Fraction] = {}
        for S, p in dist.items():
            for x, q in it.outcomes:
                T = S | x
                if f.value(T) <= tau:
                    nxt[T] = nxt.get(T, 0) + p * q
        dist = nxt
    return dist


def _gain_from_distribution(item: Item, dist: dict[int, Fraction], f: Objective) -> Fraction:
    Q = f.Q
    total = Fraction(0)
    for S, p in dist.items():
        fS = f.value(S)
        acc = Fraction(0)
        for x, q in item.outcomes:
            g = f.value(S | x) - fS
            if g:
                acc += q * g
        if acc:
            total += p * acc / (Q - fS)
    return total


def score_exact(item: Item, prefix: Sequence[Item], f: Objective, tau) -> Fraction:
    """Exact greedy score: expected relative marginal gain over live prefix outcomes, per unit cost."""
    tau = to_fraction(tau)
    if not product_bounded((len(it.outcomes) for it in prefix), EXACT_SUPPORT_CAP):
        raise ScoreOverflow("prefix support product exceeds 10^6; use score_sampled instead")
    return _gain_from_distribution(item, _prefix_distribution(prefix, f, tau), f) / item.cost


def _sample_item(item: Item, cum: np.ndarray, rng) -> int:
    k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return item.outcomes[min(k, len(item.outcomes) - 1)][0]


def _cumulative(item: Item) -> np.ndarray:
    return np.cumsum([float(p) for _, p in item.outcomes])


def _estimate_gain(item: Item, cum, prefix_samples: Sequence[int], prefix_values: Sequence[int],
                   f: Objective, tau: Fraction, rng) -> Fraction:
    Q = f.Q
    counts: Counter = Counter()
    deterministic = len(item.outcomes) == 1
    for S, fS in zip(prefix_samples, prefix_values):
        if fS > tau:
            continue
        x = item.outcomes[0][0] if deterministic else _sample_item(item, cum, rng)
        g = f.value(S | x) - fS
        if g:
            counts[(g, Q - fS)] += 1
    total = sum((Fraction(g * c, rem) for (g, rem), c in counts.items()), Fraction(0))
    return total / len(prefix_samples)


def score_sampled(item: Item, prefix: Sequence[Item], f: Objective, tau, K: int, rng) -> Fraction:
    """Monte-Carlo estimate of :func:`score_exact` from K joint samples."""
    if K < 1:
        raise InputError("K must be >= 1")
    tau = to_fraction(tau)
    rng = np.random.default_rng(rng)
    cums = [_cumulative(it) for it in prefix]
    samples = []
    for _ in range(K):
        S = 0
        for it, cum in zip(prefix, cums):
            S |= it.outcomes[0][0] if len(it.outcomes) == 1 else _sample_item(it, cum, rng)
        samples.append(S)
    values = [f.value(S) for S in samples]
    return _estimate_gain(item, _cumulative(item), samples, values, f, tau, rng) / item.cost


# --------------------------------------------------------------------------
# the greedy list


class GreedyList:
    """Non-adaptive ParCA list over ``items`` for residual objective ``f``.

    Built lazily: ``self[i]`` computes list entries up to position i.  The
    list never reads realizations, so lazy and eager construction agree.
    Exact mode tracks the distribution of the prefix union restricted to
    outcomes with f(S) <= tau; sampled mode tracks K joint prefix samples.
    """

    def __init__(self, items: Sequence[Item], f: Objective, tau: Fraction, config: ParcaConfig,
                 seed=None, m_total: int | None = None, c_max: int | None = None):
        self.f = f
        self.tau = to_fraction(tau)
        self.config = config
        self.remaining = sorted(items, key=lambda it: it.id)
        self.order: list[Item] = []
        self.scores: list[Fraction | None] = []
        self.fallback_from: int | None = None
        m = m_total or max(len(self.remaining), 1)
        cm = c_max or max((it.cost for it in self.remaining), default=1)
        self.epsilon = to_fraction(config.epsilon) if config.epsilon is not None else default_epsilon(m, cm)
        if config.sampler == "exact":
            self._dist = {0: Fraction(1)} if f.value(0) <= self.tau else {}
        else:
            self.K = config.K or default_sample_count(m, cm, config.sample_constant)
            self._rng = np.random.default_rng(seed if seed is not None else config.rng_seed)
            self._samples = [0] * self.K
            self._values = [f.value(0)] * self.K
            self._cums = {it.id: _cumulative(it) for it in self.remaining}

    def __len__(self):
        return len(self.order) + len(self.remaining)

    def __getitem__(self, i: int) -> Item:
        while len(self.order) <= i:
            if not self.remaining:
                raise IndexError(i)
            self.extend_one()
        return self.order[i]

    def materialize(self) -> list[Item]:
        if len(self):
            self[len(self) - 1]
        return list(self.order)

    def _append(self, item: Item, score) -> None:
        self.remaining.remove(item)
        self.order.append(item)
        self.scores.append(score)

    def extend_one(self) -> Item:
        if self.fallback_from is not None:
            it = self.remaining[0]
            self._append(it, None)
            return it
        if self.config.sampler == "exact":
            return self._extend_exact()
        return self._extend_sampled()

    def _extend_exact(self) -> Item:
        best, best_score = None, None
        if not self._dist:
            # every outcome already beyond tau: all scores are zero
            best, best_score = self.remaining[0], Fraction(0)
        else:
            if len(self._dist) > EXACT_SUPPORT_CAP:
                raise ScoreOverflow("exact prefix distribution exceeds 10^6 states; use the sampled scorer")
            for it in self.remaining:
                sc = _gain_from_distribution(it, self._dist, self.f) / it.cost
                if best is None or sc > best_score:
                    best, best_score = it, sc
        f, tau = self.f, self.tau
        nxt: dict[int, Fraction] = {}
        for S, p in self._dist.items():
            for x, q in best.outcomes:
                T = S | x
                if f.value(T) <= tau:
                    nxt[T] = nxt.get(T, 0) + p * q
        self._dist = nxt
        self._append(best, best_score)
        return best

    def _extend_sampled(self) -> Item:
        best, best_score, max_gain = None, None, Fraction(0)
        for it in self.remaining:
            g = _estimate_gain(it, self._cums[it.id], self._samples, self._values, self.f, self.tau, self._rng)
            max_gain = max(max_gain, g)
            sc = g / it.cost
            if best is None or sc > best_score:
                best, best_score = it, sc
        if max_gain < self.epsilon:
            # low-score tail: fall back to id order for the rest of the list
            self.fallback_from = len(self.order)
            it = self.remaining[0]
            self._append(it, None)
            return it
        cum = self._cums[best.id]
        for k, S in enumerate(self._samples):
            x = best.outcomes[0][0] if len(best.outcomes) == 1 else _sample_item(best, cum, self._rng)
            T = S | x
            if T != S:
                self._samples[k] = T
                self._values[k] = self.f.value(T)
        self._append(best, best_score)
        return best


def build_next_list_item(state: GreedyList, remaining: Sequence[Item] | None = None,
                         config: ParcaConfig | None = None) -> Item:
    """Append one maximal-score item (ties: lowest id) to the list and return it."""
    if not state.remaining:
        raise InputError("no remaining items")
    return state.extend_one()


# --------------------------------------------------------------------------
# probing


@dataclass
class ParcaResult:
    probed: list[int]
    observed: list[int]
    realized: int
    cost: int
    delta: Fraction
    tau: Fraction
    list: GreedyList = field(repr=False)

    def record(self, **params) -> RoundRecord:
        p = {"delta": str(self.delta), "tau": str(self.tau)}
        p.update(params)
        return RoundRecord(self.probed, self.observed, self.cost, p)


def probe_list(glist: GreedyList, source: RealizationSource, delta: Fraction = Fraction(0)) -> ParcaResult:
    """Probe list items in order while f(R) <= tau."""
    f, tau = glist.f, glist.tau
    R, cost, probed, observed = 0, 0, [], []
    fR = f.value(0)
    i = 0
    while fR <= tau:
        if i >= len(glist):
            raise InvariantViolation(
                f"list exhausted with f(R)={fR} <= tau={tau}; instance is not feasible")
        it = glist[i]
        x = source.observe(it.id)
        probed.append(it.id)
        observed.append(x)
        cost += it.cost
        R |= x
        fR = f.value(R)
        i += 1
    return ParcaResult(probed, observed, R, cost, delta, tau, glist)


def run_partial_cover(items: Sequence[Item], f: Objective, delta_eff: Fraction, config: ParcaConfig,
                      source: RealizationSource, seed=None, cache: dict | None = None,
                      key=None, m_total=None, c_max=None) -> ParcaResult:
    tau = f.Q * (1 - delta_eff)
    glist = None
    if cache is not None and key is not None:
        glist = cache.get(key)
    if glist is None:
        glist = GreedyList(items, f, tau, config, seed=seed, m_total=m_total, c_max=c_max)
        if cache is not None and key is not None:
            cache[key] = glist
    return probe_list(glist, source, delta_eff)


def parca_run(instance: IndependentInstance, config: ParcaConfig, oracle: RealizationSource,
              cache: dict | None = None) -> ParcaResult:
    """One ParCA call on the full instance with ``config.delta`` (power-of-two normalized)."""
    delta = normalize_delta(config.delta)
    c_max = max(it.cost for it in instance.items)
    return run_partial_cover(instance.items, instance.objective, delta, config, oracle,
                             seed=config.rng_seed, cache=cache, key=("parca", delta),
                             m_total=instance.m, c_max=c_max)


def ssc_solve(r: int, instance: IndependentInstance, oracle: RealizationSource,
              config: ParcaConfig | None = None, cache: dict | None = None):
    """r-round adaptive stochastic submodular cover.

    Round k runs ParCA on the unprobed items with the residual objective and
    delta = Q_k^(-1/(r-k+1)), power-of-two normalized.
    """
    if r < 1:
        raise InputError("rounds must be >= 1")
    config = config or ParcaConfig()
    c_max = max(it.cost for it in instance.items)
    probed: set[int] = set()
    R = 0
    rounds = []
    for k in range(1, r + 1):
        f_k = residual(instance.objective, R)
        if f_k.Q == 0:
            break
        delta = root_delta(f_k.Q, r - k + 1)
        remaining = [it for it in instance.items if it.id not in probed]
        key = ("ssc", k, tuple(it.id for it in remaining), R, delta)
        res = run_partial_cover(remaining, f_k, delta, config, oracle,
                                seed=[config.rng_seed, k], cache=cache, key=key,
                                m_total=instance.m, c_max=c_max)
        probed.update(res.probed)
        R |= res.realized
        rounds.append(res.record(Q=f_k.Q))
    return build_transcript(rounds, instance.objective)
