import itertools
from fractions import Fraction

import numpy as np
import pytest

from roundcover.core import (
    InfeasibleError,
    InputError,
    ScenarioRealization,
    dumps_canonical,
    evaluate,
    instance_to_dict,
    verify_monotone_submodular,
)
from roundcover.generators import (
    ELEM_STAR,
    gen_correlated_knapsack,
    gen_filter_eval,
    gen_graph_coverage,
    gen_hard_instance,
    gen_odt,
    gen_odt_from_table,
    hard_instance_layout,
    hard_instance_top_down,
    odt_reduction,
    read_edge_list,
    read_table,
    top_out_degree_subgraph,
)
from roundcover.oracles import optimal_adaptive_scenario


def test_graph_isolated_node():
    inst = gen_graph_coverage([], nodes=[5], rng=0)
    it = inst.items[0]
    assert it.outcomes == ((1, 1),)
    assert inst.Q == 1


def test_graph_star_with_certain_edges():
    inst = gen_graph_coverage([(0, 1), (0, 2), (0, 3)], p=1, samples=1, delta=1, rng=0)
    assert inst.items[0].outcomes == ((0b1111, 1),)
    assert inst.Q == 4


def test_graph_target_rounds_up():
    inst = gen_graph_coverage([(0, 1), (1, 2)], delta=0.5, rng=0)
    assert inst.Q == 2  # ceil(1.5)


def test_graph_errors():
    with pytest.raises(InputError):
        gen_graph_coverage([])
    with pytest.raises(InputError):
        gen_graph_coverage([(0, 1)], p=0)


def test_graph_empirical_distribution():
    inst = gen_graph_coverage([(0, 1), (0, 2)], p=0.1, samples=500, rng=3)
    probs = dict(inst.items[0].outcomes)
    assert sum(probs.values()) == 1
    assert all(x & 1 for x in probs)
    assert all(p.denominator in (1, 2, 4, 5, 10, 20, 25, 50, 100, 125, 250, 500) for p in probs.values())


def test_top_degree_ties_lowest_id(tmp_path):
    edges = [(3, 0), (3, 1), (1, 0), (1, 3), (2, 0), (0, 2)]
    assert top_out_degree_subgraph(edges, 2) == [(3, 1), (1, 3)]
    p = tmp_path / "g.txt"
    p.write_text("# comment\n3 0\n3\t1\n\n1 0\n")
    assert read_edge_list(p) == [(3, 0), (3, 1), (1, 0)]


def test_odt_two_scenarios_one_test():
    inst = odt_reduction(np.array([[1], [0]]), [1])
    assert inst.s == 2 and inst.Q == 1
    # under scenario 0 the test eliminates scenario 1, and vice versa
    assert list(inst.real[0]) == [0b10, 0b01]


def test_odt_duplicate_rows_merge():
    inst = odt_reduction(np.array([[1, 0], [1, 0], [0, 1]]), [1, 1])
    assert inst.s == 2 and inst.metadata["s_original"] == 3 and inst.metadata["kept_rows"] == [0, 2]


def test_odt_all_identical_rejected():
    with pytest.raises(InputError):
        odt_reduction(np.array([[1, 0], [1, 0]]), [1, 1])


def test_odt_random_costs_from_weighted_set():
    inst = gen_odt(16, 2000, 0.5, "random", rng=0)
    vals, counts = np.unique(inst.costs, return_counts=True)
    assert list(vals) == [1, 4, 7, 10]
    assert np.allclose(counts / 2000, [0.1, 0.2, 0.4, 0.3], atol=0.04)


def test_odt_identifies_every_scenario():
    inst = gen_odt(32, 12, 0.5, rng=1)
    for w in range(inst.s):
        assert evaluate(inst.objective, []) == 0
        R = 0
        for row in inst.real:
            R |= row[w]
        # everything except the true scenario gets eliminated
        assert R == ((1 << inst.s) - 1) & ~(1 << w)


def test_table_without_unknowns_ignores_seed():
    table = [[1, 0, 1], [0, 0, 1], [1, 1, 0]]
    a = dumps_canonical(instance_to_dict(gen_odt_from_table(table, rng=1)))
    b = dumps_canonical(instance_to_dict(gen_odt_from_table(table, rng=99)))
    assert a == b


def test_all_unknown_table_distinct_rows():
    table = [[None, None]] * 4
    # four uniform draws from four row patterns: 4 * (1 - (3/4)^4) distinct on average
    expected = Fraction(175, 64)
    enum = Fraction(sum(len(set(zip(bits[::2], bits[1::2]))) for bits in itertools.product((0, 1), repeat=8)), 256)
    assert enum == expected
    counts = []
    for seed in range(600):
        try:
            counts.append(gen_odt_from_table(table, rng=seed).s)
        except InputError:
            counts.append(1)
    assert max(counts) <= 4
    se = np.std(counts, ddof=1) / np.sqrt(len(counts))
    assert abs(np.mean(counts) - float(expected)) <= 3 * se


def test_read_table(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("1,0,?\n0,,1\nunknown,1,-1\n")
    assert read_table(p) == [[1, 0, None], [0, None, 1], [None, 1, None]]
    p.write_text("1,2\n")
    with pytest.raises(InputError):
        read_table(p)


def test_table_415_by_79_shape():
    rng = np.random.default_rng(0)
    table = [[None if x < 0.3 else int(x < 0.65) for x in row] for row in rng.random((415, 79))]
    inst = gen_odt_from_table(table, rng=0)
    assert inst.m == 79 and inst.metadata["s_original"] == 415 and 2 <= inst.s <= 415


def test_hard_instance_shape():
    for ell, r in [(1, 1), (2, 1), (1, 3), (2, 2)]:
        h = gen_hard_instance(ell, r)
        lay = hard_instance_layout(ell, r)
        N = 2**ell
        assert h.s == 2 ** (r * ell)
        assert h.m == ell * (N**r - 1) // (N - 1) + N**r == lay["z_offset"] + lay["leaves"]
        for w in range(h.s):
            stars = [e for e in range(h.m) if h.real[e][w] == 1 << ELEM_STAR]
            assert stars == [lay["z_offset"] + w]


def test_hard_instance_top_down_cost():
    for ell, r in [(1, 1), (2, 1), (1, 3), (2, 2), (4, 1)]:
        h = gen_hard_instance(ell, r)
        for w in range(h.s):
            t = hard_instance_top_down(h, ScenarioRealization(h, w))
            assert t.covered and t.total_cost == r * ell + 1


def test_hard_instance_guard():
    with pytest.raises(InputError):
        gen_hard_instance(7, 3)
    with pytest.raises(InputError):
        gen_hard_instance(0, 1)


def test_filter_single_query_certain_pass():
    inst = gen_filter_eval(1, [[0]], [1])
    assert inst.Q == 1
    assert inst.items[0].outcomes == ((1 << inst.objective.true_element(0), 1),)


def test_filter_two_disjoint_queries():
    assert gen_filter_eval(2, [[0], [1]], [0.5, 0.5]).Q == 2


def test_filter_false_filter_settles_query():
    inst = gen_filter_eval(3, [[0, 1, 2]], [0.5, 0.5, 0.5])
    f = inst.objective
    assert f.value(1 << f.false_element(1)) == 3 == f.Q


def test_filter_probability_range():
    with pytest.raises(InputError):
        gen_filter_eval(1, [[0]], [Fraction(3, 2)])


def test_knapsack_single_full_item():
    inst = gen_correlated_knapsack([[3, 0], [3, 1]], [Fraction(1, 2)] * 2, [5, 1], 3)
    assert optimal_adaptive_scenario(inst) == 5


def test_knapsack_clamps():
    inst = gen_correlated_knapsack([[10]], [1], [1], 3)
    assert inst.real[0][0] == 1 << 3
    assert inst.objective.value(inst.real[0][0]) == 3


def test_knapsack_two_scenarios_hand_tree():
    inst = gen_correlated_knapsack([[2, 0, 1], [0, 2, 1]], [Fraction(1, 2)] * 2, [1, 1, 1], 2)
    # probe item 0: done in scenario 0, otherwise item 1 finishes
    assert optimal_adaptive_scenario(inst) == Fraction(3, 2)


def test_knapsack_infeasible():
    with pytest.raises(InfeasibleError):
        gen_correlated_knapsack([[1, 0]], [1], [1, 1], 2)


@pytest.mark.parametrize("make", [
    lambda: gen_graph_coverage([(0, 1), (1, 2), (2, 0), (0, 3)], rng=1),
    lambda: gen_odt(16, 6, 0.5, "random", rng=2),
    lambda: gen_odt_from_table([[1, None], [0, 1], [None, 0]], rng=3),
    lambda: gen_hard_instance(1, 2),
    lambda: gen_filter_eval(3, [[0, 1], [2]], [0.5, 0.25, 1]),
    lambda: gen_correlated_knapsack([[2, 0, 1], [0, 2, 1]], [Fraction(1, 2)] * 2, [1, 1, 1], 2),
])
def test_generated_instances_valid_and_deterministic(make):
    a, b = make(), make()
    assert verify_monotone_submodular(a.objective, "sampled", 300, rng=0).passed
    assert dumps_canonical(instance_to_dict(a)) == dumps_canonical(instance_to_dict(b))
