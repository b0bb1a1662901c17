from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import roundcover.setbased as sb
from roundcover.core import (
    FixedRealization,
    IndependentInstance,
    InputError,
    ScenarioRealization,
    TruncatedCoverage,
    make_independent_item,
    make_scenario_instance,
    residual,
    sampled_source,
)
from roundcover.generators import gen_odt, gen_random_independent, gen_random_scenario
from roundcover.parca import ParcaConfig
from roundcover.setbased import (
    SetRoundPolicy,
    doubling_best_set_cost,
    doubling_example_costs,
    doubling_permutation_cost,
    doubling_set_cost,
    estimate_round_cost,
    run_set_based,
)
from roundcover.sparca import Threshold, nsc_solve

half = Fraction(1, 2)


def det_instance(costs=(1, 2, 3)):
    items = [make_independent_item(i, c, [([i], 1)]) for i, c in enumerate(costs)]
    return IndependentInstance(items, len(costs), TruncatedCoverage(len(costs), len(costs)))


def test_policy_validation():
    with pytest.raises(InputError):
        SetRoundPolicy(0)
    with pytest.raises(InputError):
        SetRoundPolicy(2, "medium")
    with pytest.raises(InputError):
        SetRoundPolicy(2, eta=Fraction(3, 2))


def test_budgets_and_round_counts():
    p = SetRoundPolicy(3, "small_r", Fraction(1, 10))
    assert p.budget(Fraction(7, 3)) == 70
    assert p.n_rounds("independent") == p.n_rounds("scenario") == 3
    q = SetRoundPolicy(3, "large_r")
    assert q.budget(Fraction(7, 3)) == 10
    assert q.n_rounds("independent") == 6 and q.n_rounds("scenario") == 12


def test_mu_on_deterministic_instance():
    inst = det_instance()
    t = run_set_based(SetRoundPolicy(1), inst, FixedRealization([1, 2, 4]))
    # tau = 9/4 forces all three items, so the round costs exactly 6
    assert t.rounds[0].mu == 6
    assert t.rounds[0].budget == 60
    assert t.covered and t.total_cost == 6


def test_mu_zero_target():
    inst = det_instance()
    rs = sb._IndependentRound(inst.items, residual(inst.objective, 0b111), Fraction(1, 2), ParcaConfig(),
                              0, 3, 3)
    assert estimate_round_cost(rs, 10, 0) == 0


def test_mu_exact_matches_monte_carlo_independent(monkeypatch):
    items = [make_independent_item(0, 1, [([0], half), ([], half)]),
             make_independent_item(1, 2, [([1], Fraction(1, 3)), ([0], Fraction(2, 3))]),
             make_independent_item(2, 3, [([0, 1], 1)])]
    inst = IndependentInstance(items, 2, TruncatedCoverage(2, 2))
    rs = sb._IndependentRound(inst.items, inst.objective, Fraction(1, 4), ParcaConfig(), 0, 3, 3)
    exact = estimate_round_cost(rs, 10, 0)
    monkeypatch.setattr(sb, "EXACT_OUTCOME_CAP", 0)
    mc = estimate_round_cost(rs, 20000, 1)
    assert abs(mc - exact) <= exact / 20


def test_mu_exact_matches_monte_carlo_scenario(monkeypatch):
    real = [[1, 2], [2, 2], [3, 3]]
    inst = make_scenario_instance(real, [Fraction(1, 4), Fraction(3, 4)], [1, 1, 5], TruncatedCoverage(2, 2))
    rs = sb._ScenarioRound(inst, range(3), range(2), inst.objective, Threshold.of(half), None)
    exact = estimate_round_cost(rs, 10, 0)
    monkeypatch.setattr(sb, "EXACT_OUTCOME_CAP", 0)
    mc = estimate_round_cost(rs, 20000, 1)
    assert abs(mc - exact) <= exact / 20


def test_small_r_spends_exactly_r_rounds():
    for seed in range(10):
        inst = gen_random_scenario(6, 5, 6, rng=seed, cost_max=3)
        for r in (1, 2, 3):
            for w in range(inst.s):
                t = run_set_based(SetRoundPolicy(r), inst, ScenarioRealization(inst, w))
                assert len(t.rounds) == r and t.rounds_used <= r


def test_large_r_round_caps():
    for seed in range(6):
        inst = gen_random_scenario(6, 5, 6, rng=seed, cost_max=3)
        ind = gen_random_independent(5, 5, rng=seed, cost_max=3)
        for r in (1, 2):
            for w in range(inst.s):
                t = run_set_based(SetRoundPolicy(r, "large_r"), inst, ScenarioRealization(inst, w))
                assert len(t.rounds) <= 4 * r
            t = run_set_based(SetRoundPolicy(r, "large_r"), ind, sampled_source(ind, np.random.default_rng(seed)))
            assert len(t.rounds) <= 2 * r


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), r=st.integers(1, 3), mode=st.sampled_from(["small_r", "large_r"]))
def test_batch_cost_accounting(seed, r, mode):
    inst = gen_random_scenario(6, 6, 6, rng=seed, cost_max=4)
    for w in range(inst.s):
        t = run_set_based(SetRoundPolicy(r, mode), inst, ScenarioRealization(inst, w))
        seen = []
        for rd in t.rounds:
            assert rd.cost == sum(inst.costs[e] for e in rd.items) <= rd.budget or not rd.items
            seen += rd.items
        assert len(seen) == len(set(seen))
        assert t.total_cost == sum(inst.costs[e] for e in seen)


def test_successful_batch_contains_permutation_round():
    for seed in range(5):
        inst = gen_odt(24, 10, 0.5, rng=seed)
        for w in range(inst.s):
            t = run_set_based(SetRoundPolicy(2), inst, ScenarioRealization(inst, w))
            first = t.rounds[0]
            if first.success:
                perm = nsc_solve(2, inst, ScenarioRealization(inst, w))
                assert first.items[:first.stop_index] == perm.rounds[0].items


def test_tiny_eta_always_covers():
    for seed in range(10):
        inst = gen_random_scenario(6, 6, 6, rng=seed, cost_max=3)
        for w in range(inst.s):
            t = run_set_based(SetRoundPolicy(2, eta=Fraction(1, 1000)), inst, ScenarioRealization(inst, w))
            assert t.covered


def test_small_r_exact_coverage_at_least_one_minus_eta():
    eta = Fraction(1, 10)
    for seed in range(6):
        inst = gen_odt(32, 12, 0.5, "random", rng=seed)
        for r in (1, 2, 3):
            cache = {}
            cov = sum(inst.probs[w] for w in range(inst.s)
                      if run_set_based(SetRoundPolicy(r, eta=eta), inst, ScenarioRealization(inst, w), cache).covered)
            assert cov >= 1 - eta


def test_doubling_costs():
    assert doubling_example_costs(3) == [2, 4, 8]
    # closed form: every item contributes 2^i / 2^(i-1) = 2
    assert doubling_permutation_cost(8) == 16
    for m in range(1, 10):
        assert doubling_permutation_cost(m) == 2 * m


def test_doubling_set_cost_formula():
    def closed(m, a):
        head = 2 ** (a + 1) - 2
        tail = 2 ** (m + 1) - 2 ** (a + 1)
        return head + Fraction(tail, 2**a)

    for a in range(9):
        assert doubling_set_cost(8, [a]) == closed(8, a)
    assert doubling_best_set_cost(8, 2) == 60
    assert doubling_best_set_cost(8, 1) == 510
    with pytest.raises(InputError):
        doubling_set_cost(8, [5, 3])
