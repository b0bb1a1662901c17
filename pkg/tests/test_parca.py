import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roundcover.core import (
    FixedRealization,
    IndependentInstance,
    InputError,
    TruncatedCoverage,
    make_independent_item,
    residual,
    sampled_source,
)
from roundcover.generators import gen_random_independent
from roundcover.parca import (
    GreedyList,
    ParcaConfig,
    ScoreOverflow,
    build_next_list_item,
    default_epsilon,
    default_sample_count,
    normalize_delta,
    parca_run,
    probe_list,
    root_delta,
    score_exact,
    score_sampled,
    ssc_solve,
)

half = Fraction(1, 2)


def det(i, subset, cost=1):
    return make_independent_item(i, cost, [(subset, 1)])


def coin(i, subset, p=half, cost=1, other=()):
    return make_independent_item(i, cost, [(subset, p), (other, 1 - p)])


def brute_score(item, prefix, f, tau):
    """Enumerate every joint outcome of prefix and item."""
    total = Fraction(0)
    for combo in itertools.product(*(it.outcomes for it in prefix), item.outcomes):
        p = Fraction(1)
        S = 0
        for x, q in combo[:-1]:
            S |= x
            p *= q
        x, q = combo[-1]
        fS = f.value(S)
        if fS <= tau:
            total += p * q * Fraction(f.value(S | x) - fS, f.Q - fS)
    return total / item.cost


def test_score_exact_single_deterministic():
    f = TruncatedCoverage(4, 4)
    assert score_exact(det(0, [0]), [], f, 3) == Fraction(1, 4)


def test_score_exact_empty_item():
    f = TruncatedCoverage(4, 4)
    assert score_exact(det(0, []), [], f, 3) == 0


def test_score_exact_two_item_prefix_matches_enumeration():
    f = TruncatedCoverage(5, 4)
    prefix = [coin(0, [0, 1], Fraction(1, 3)), coin(1, [1, 2], Fraction(3, 4), other=[4])]
    item = coin(2, [2, 3], Fraction(2, 5), cost=2)
    for tau in (0, 1, 2, 3):
        assert score_exact(item, prefix, f, tau) == brute_score(item, prefix, f, tau)


def test_score_exact_guard():
    f = TruncatedCoverage(12, 12)
    prefix = [make_independent_item(i, 1, [([i], Fraction(1, 4)), ([], Fraction(1, 4)),
                                           ([11], Fraction(1, 4)), ([10], Fraction(1, 4))]) for i in range(10)]
    with pytest.raises(ScoreOverflow):
        score_exact(det(10, [0]), prefix, f, 11)


def test_score_sampled_deterministic_items_exact():
    f = TruncatedCoverage(5, 5)
    prefix = [det(0, [0, 1]), det(1, [1, 2])]
    item = det(2, [3], cost=3)
    for K in (1, 7, 50):
        assert score_sampled(item, prefix, f, 4, K, rng=K) == score_exact(item, prefix, f, 4)


def test_score_sampled_zero_gain_item():
    f = TruncatedCoverage(4, 4)
    prefix = [coin(0, [0, 1]), coin(1, [2])]
    assert score_sampled(det(2, []), prefix, f, 3, 500, rng=0) == 0


def test_score_sampled_consistency_three_items():
    # fixed 3-item instance: two-item prefix scoring the third
    f = TruncatedCoverage(6, 4)
    prefix = [coin(0, [0, 1], Fraction(3, 4)), coin(1, [2], Fraction(1, 2), other=[0])]
    item = coin(2, [3, 4], Fraction(9, 10), other=[3])
    m, c_max = 3, 1
    K = 10 * m * m * c_max * math.ceil(math.log2(m * c_max))
    g = score_exact(item, prefix, f, 3)
    assert g == Fraction(427, 480)  # hand enumeration over the four prefix outcomes
    hits = sum(abs(score_sampled(item, prefix, f, 3, K, rng=seed) - g) <= g / 10 for seed in range(100))
    assert hits >= 95


def test_next_item_single_remaining():
    f = TruncatedCoverage(3, 3)
    gl = GreedyList([det(4, [1])], f, Fraction(2), ParcaConfig())
    assert build_next_list_item(gl).id == 4


def test_next_item_prefers_cheaper_identical_item():
    f = TruncatedCoverage(3, 3)
    items = [coin(0, [0], cost=2), coin(1, [0], cost=1)]
    gl = GreedyList(items, f, Fraction(2), ParcaConfig())
    assert build_next_list_item(gl).id == 1
    assert gl.scores[0] == Fraction(1, 6)


def test_next_item_tie_goes_to_lower_id():
    f = TruncatedCoverage(3, 3)
    gl = GreedyList([det(0, [1]), det(1, [2])], f, Fraction(2), ParcaConfig())
    assert build_next_list_item(gl).id == 0


def test_next_item_requires_remaining():
    f = TruncatedCoverage(3, 3)
    gl = GreedyList([det(0, [1])], f, Fraction(2), ParcaConfig())
    gl.materialize()
    with pytest.raises(InputError):
        build_next_list_item(gl)


def test_parca_full_coverage_with_inverse_q_delta():
    for seed in range(20):
        inst = gen_random_independent(6, 6, rng=seed, cost_max=3)
        src = sampled_source(inst, np.random.default_rng(seed))
        res = parca_run(inst, ParcaConfig(delta=Fraction(1, inst.Q)), src)
        assert inst.objective.value(res.realized) == inst.Q


def test_parca_delta_one_stops_at_first_progress():
    f = TruncatedCoverage(3, 3)
    items = [det(0, []), coin(1, [0], other=[]), det(2, [1, 2]), det(3, [0])]
    inst = IndependentInstance(items, 3, f)
    res = parca_run(inst, ParcaConfig(delta=1), FixedRealization([0, 0, 0b110, 1]))
    assert f.value(res.realized) > 0
    # every probe before the last left f at zero
    assert all(f.value(x) == 0 for x in res.observed[:-1])


def test_parca_single_deterministic_item():
    f = TruncatedCoverage(2, 2)
    inst = IndependentInstance([det(0, [0, 1], cost=5)], 2, f)
    res = parca_run(inst, ParcaConfig(delta=Fraction(1, 2)), FixedRealization([3]))
    assert res.probed == [0] and res.cost == 5


def test_delta_normalization():
    assert normalize_delta(Fraction(1, 3)) == Fraction(1, 4)
    assert normalize_delta(1) == 1
    assert normalize_delta(Fraction(1, 2)) == Fraction(1, 2)
    assert root_delta(9, 2) == Fraction(1, 4)  # 9^(-1/2) = 1/3 -> 1/4
    assert root_delta(1, 3) == 1
    with pytest.raises(InputError):
        normalize_delta(0)


@settings(max_examples=50, deadline=None)
@given(num=st.integers(1, 1000), den=st.integers(1, 1000))
def test_normalized_delta_never_exceeds_request(num, den):
    d = Fraction(min(num, den), den)
    nd = normalize_delta(d)
    assert nd <= d < 2 * nd


@settings(max_examples=40, deadline=None)
@given(base=st.integers(1, 5000), root=st.integers(1, 8))
def test_root_delta_is_power_of_two_below_root(base, root):
    d = root_delta(base, root)
    assert d ** root * base <= 1
    assert (2 * d) ** root * base > 1 or d == 1


def test_default_sampling_parameters():
    assert default_sample_count(4, 1) == 4 * 16 * 3
    assert default_sample_count(1000, 1000) == 10**6
    assert default_epsilon(4, 2) == Fraction(1, 32)


def test_ssc_r1_equals_parca_full():
    for seed in range(10):
        inst = gen_random_independent(6, 6, rng=seed, cost_max=2)
        real = inst.sample_realization(np.random.default_rng(seed))
        t = ssc_solve(1, inst, FixedRealization(real))
        res = parca_run(inst, ParcaConfig(delta=Fraction(1, inst.Q)), FixedRealization(real))
        assert t.probed == res.probed and t.total_cost == res.cost


def test_ssc_first_round_residual_bound():
    for seed in range(30):
        inst = gen_random_independent(8, 8, rng=seed, Q=8)
        real = inst.sample_realization(np.random.default_rng(seed))
        for r in (2, 3):
            t = ssc_solve(r, inst, FixedRealization(real))
            R = 0
            for x in t.rounds[0].observed:
                R |= x
            q_hat = residual(inst.objective, R).Q
            assert q_hat ** r < inst.Q ** (r - 1)


def test_ssc_deterministic_instance_same_across_seeds():
    f = TruncatedCoverage(4, 4)
    items = [det(0, [0, 1]), det(1, [1, 2], cost=2), det(2, [3]), det(3, [2, 3])]
    inst = IndependentInstance(items, 4, f)
    outs = {tuple(ssc_solve(2, inst, sampled_source(inst, np.random.default_rng(s))).probed) for s in range(5)}
    assert len(outs) == 1


def test_ssc_rejects_zero_rounds():
    inst = gen_random_independent(3, 3, rng=0)
    with pytest.raises(InputError):
        ssc_solve(0, inst, FixedRealization(inst.sample_realization(np.random.default_rng(0))))


def test_lazy_and_eager_lists_agree():
    for seed in range(15):
        inst = gen_random_independent(6, 6, rng=seed, cost_max=3)
        f = inst.objective
        tau = f.Q * (1 - Fraction(1, 4))
        lazy = GreedyList(inst.items, f, tau, ParcaConfig())
        eager = GreedyList(inst.items, f, tau, ParcaConfig())
        eager.materialize()
        real = inst.sample_realization(np.random.default_rng(seed))
        a = probe_list(lazy, FixedRealization(real))
        b = probe_list(eager, FixedRealization(real))
        assert a.probed == b.probed
        assert [it.id for it in lazy.materialize()] == [it.id for it in eager.order]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), r=st.integers(1, 4))
def test_ssc_covers_within_round_budget(seed, r):
    inst = gen_random_independent(6, 7, rng=seed, cost_max=3)
    src = sampled_source(inst, np.random.default_rng(seed))
    t = ssc_solve(r, inst, src)
    assert t.covered
    assert len(t.rounds) <= r


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_sampled_mode_still_covers(seed):
    inst = gen_random_independent(6, 7, rng=seed, cost_max=2)
    src = sampled_source(inst, np.random.default_rng(seed))
    t = ssc_solve(2, inst, src, ParcaConfig(sampler="sampled", rng_seed=seed))
    assert t.covered


def test_sampled_list_is_seed_deterministic():
    inst = gen_random_independent(6, 7, rng=3, cost_max=2)
    f = inst.objective
    a = GreedyList(inst.items, f, Fraction(f.Q - 1), ParcaConfig(sampler="sampled"), seed=11)
    b = GreedyList(inst.items, f, Fraction(f.Q - 1), ParcaConfig(sampler="sampled"), seed=11)
    assert [it.id for it in a.materialize()] == [it.id for it in b.materialize()]


def test_low_score_tail_falls_back_to_id_order():
    f = TruncatedCoverage(3, 3)
    items = [det(0, []), det(1, []), det(2, [0, 1, 2]), det(3, [])]
    gl = GreedyList(items, f, Fraction(2), ParcaConfig(sampler="sampled", K=20))
    order = [it.id for it in gl.materialize()]
    assert order[0] == 2
    assert gl.fallback_from == 1 and order[1:] == [0, 1, 3]
