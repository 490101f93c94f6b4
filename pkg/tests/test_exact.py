import math

import numpy as np
import pytest
from scipy.linalg import block_diag
from scipy.special import gammaln, logsumexp

from hamcount import (
    DomainError,
    ExactValue,
    LogMatrix,
    OracleCapError,
    UndirectedGraph,
    adjacency_matrix,
    complete_digraph,
    count_hc_undirected,
    cycle_profile,
    enumerate_cycles,
    gen_dense_digraph,
    hamilton_dp,
    hamilton_enum,
    hamilton_expand,
    override_settings,
    permanent_enum,
    permanent_expand,
    permanent_ryser,
)

from .graphs import complete_graph, cycle_graph, directed_cycle, path_graph


def random_matrix(rng, n, zeros=0.2):
    values = rng.uniform(0.1, 1.0, size=(n, n))
    values[rng.random((n, n)) < zeros] = 0.0
    return LogMatrix.from_linear(values)


def test_exact_value():
    assert ExactValue.from_count(0).is_zero
    assert ExactValue.from_count(0).value == 0.0
    assert ExactValue.from_count(9).format() == "9"
    assert float(ExactValue.from_count(9)) == 9.0
    assert ExactValue.zero().format() == "0.0"
    assert ExactValue(1000.0).value == math.inf
    assert ExactValue(1000.0).format() == "overflow"
    assert ExactValue(math.log(2.5)).isclose(ExactValue(math.log(2.5) + 1e-12))
    assert not ExactValue(0.0).isclose(ExactValue.zero())


@pytest.mark.parametrize(
    "n, ham, per",
    [(3, 2, 2), (4, 6, 9), (5, 24, 44), (6, 120, 265)],
)
def test_complete_digraph_counts(n, ham, per):
    a = adjacency_matrix(complete_digraph(n))
    for oracle in (hamilton_enum, hamilton_dp, hamilton_expand):
        assert oracle(a).count == ham
    for oracle in (permanent_enum, permanent_ryser, permanent_expand):
        assert oracle(a).count == per


def test_directed_cycle_counts():
    a = adjacency_matrix(directed_cycle(3))
    assert hamilton_dp(a).count == 1
    assert permanent_ryser(a).count == 1
    assert hamilton_dp(adjacency_matrix(directed_cycle(12))).count == 1


def test_integer_pathway_at_larger_orders():
    a = adjacency_matrix(complete_digraph(8))
    assert hamilton_dp(a).count == 5040
    assert permanent_ryser(a).count == 14833


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7, 8])
def test_hamilton_oracles_agree(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(10):
        a = random_matrix(rng, n)
        expected = hamilton_enum(a)
        assert hamilton_dp(a).isclose(expected)
        assert hamilton_expand(a).isclose(expected)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6, 7])
def test_permanent_oracles_agree(n):
    rng = np.random.default_rng(200 + n)
    for _ in range(10):
        a = random_matrix(rng, n)
        expected = permanent_enum(a)
        assert permanent_ryser(a).isclose(expected)
        assert permanent_expand(a).isclose(expected)


def test_binary_oracles_agree_on_dense_digraphs():
    for seed in range(10):
        a = adjacency_matrix(gen_dense_digraph(8, 0.6, seed))
        assert hamilton_enum(a).count == hamilton_dp(a).count
        assert hamilton_expand(a).count == hamilton_dp(a).count
        assert permanent_enum(a).count == permanent_ryser(a).count


def test_float_pathway_matches_integer_pathway():
    a = adjacency_matrix(gen_dense_digraph(14, 0.7, 5))
    exact_ham = hamilton_dp(a)
    exact_per = permanent_ryser(a)
    with override_settings(integer_pathway_cap=0):
        assert hamilton_dp(a).count is None
        assert hamilton_dp(a).log_value == pytest.approx(
            math.log(exact_ham.count), rel=1e-9
        )
        # inclusion-exclusion cancels, so the float permanent is looser
        assert permanent_ryser(a).log_value == pytest.approx(
            math.log(exact_per.count), abs=1e-5
        )


def test_ryser_over_several_blocks():
    # two independent blocks: the permanent factorizes
    rng = np.random.default_rng(7)
    b1 = rng.uniform(0.2, 1.0, size=(8, 8))
    b2 = rng.uniform(0.2, 1.0, size=(8, 8))
    expected = (
        permanent_ryser(LogMatrix.from_linear(b1)).log_value
        + permanent_ryser(LogMatrix.from_linear(b2)).log_value
    )
    value = permanent_ryser(LogMatrix.from_linear(block_diag(b1, b2)))
    assert value.log_value == pytest.approx(expected, rel=1e-6)


def test_hamilton_dp_constant_matrix():
    n = 12
    a = LogMatrix.from_linear(np.full((n, n), 0.5))
    expected = float(gammaln(n)) + n * math.log(0.5)
    assert hamilton_dp(a).log_value == pytest.approx(expected, rel=1e-9)


def test_empty_and_order_one():
    empty = LogMatrix(np.zeros((0, 0)))
    assert permanent_enum(empty).count == 1
    assert permanent_ryser(empty).count == 1
    with pytest.raises(DomainError):
        hamilton_enum(empty)
    with pytest.raises(DomainError):
        hamilton_dp(empty)
    single = LogMatrix.from_linear([[3.0]])
    assert hamilton_enum(single).log_value == pytest.approx(math.log(3.0))
    assert hamilton_dp(single).log_value == pytest.approx(math.log(3.0))
    assert hamilton_expand(single).log_value == pytest.approx(math.log(3.0))


def test_oracle_caps():
    with pytest.raises(OracleCapError) as e:
        hamilton_dp(LogMatrix(np.zeros((30, 30))))
    assert e.value.cap == 22
    assert "HAM_ORACLE_CAP" in str(e.value)
    assert e.value.exit_code == 6
    with pytest.raises(OracleCapError):
        permanent_enum(LogMatrix(np.zeros((10, 10))))
    with override_settings(ham_oracle_cap=5, per_oracle_cap=5):
        with pytest.raises(OracleCapError):
            hamilton_dp(adjacency_matrix(complete_digraph(6)))
        with pytest.raises(OracleCapError) as e:
            permanent_ryser(adjacency_matrix(complete_digraph(6)))
        assert "PER_ORACLE_CAP" in str(e.value)


def test_cycle_profile_complete5():
    profile = cycle_profile(adjacency_matrix(complete_digraph(5)))
    assert [v.count for v in profile] == [0, 24, 20, 0, 0, 0]


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_cycle_profile_splits_the_permanent(n):
    rng = np.random.default_rng(300 + n)
    values = rng.uniform(0.1, 1.0, size=(n, n))
    np.fill_diagonal(values, 0.0)
    a = LogMatrix.from_linear(values)
    profile = cycle_profile(a)
    assert len(profile) == n + 1
    assert profile[1].isclose(hamilton_enum(a))
    logs = [v.log_value for v in profile]
    assert float(logsumexp(logs)) == pytest.approx(
        permanent_enum(a).log_value, rel=1e-9
    )


def test_enumerate_cycles():
    cycles = enumerate_cycles(adjacency_matrix(complete_digraph(4)))
    assert [c for c, _ in cycles] == [
        (1, 2, 3, 4, 1),
        (1, 2, 4, 3, 1),
        (1, 3, 2, 4, 1),
        (1, 3, 4, 2, 1),
        (1, 4, 2, 3, 1),
        (1, 4, 3, 2, 1),
    ]
    assert all(w == 0.0 for _, w in cycles)
    assert enumerate_cycles(adjacency_matrix(directed_cycle(5))) == [
        ((1, 2, 3, 4, 5, 1), 0.0)
    ]


@pytest.mark.parametrize(
    "graph, expected",
    [
        (complete_graph(4), 3),
        (complete_graph(5), 12),
        (complete_graph(6), 60),
        (cycle_graph(5), 1),
        (path_graph(5), 0),
        (UndirectedGraph(2, ((1, 2),)), 0),
    ],
)
def test_count_hc_undirected(graph, expected):
    assert count_hc_undirected(graph) == expected
    with override_settings(enum_cap=2):
        assert count_hc_undirected(graph) == expected


def test_count_hc_undirected_pathways_agree():
    rng = np.random.default_rng(11)
    for n in range(4, 9):
        for _ in range(5):
            pairs = [
                (a, b)
                for a in range(1, n + 1)
                for b in range(a + 1, n + 1)
                if rng.random() < 0.6
            ]
            g = UndirectedGraph(n, tuple(pairs))
            by_enumeration = count_hc_undirected(g)
            with override_settings(enum_cap=2):
                assert count_hc_undirected(g) == by_enumeration


@pytest.mark.parametrize("n", [2, 3, 5, 8, 10])
def test_hamilton_is_at_most_the_permanent(n):
    rng = np.random.default_rng(300 + n)
    for _ in range(20):
        a = random_matrix(rng, n, zeros=0.4)
        ham = hamilton_dp(a)
        per = permanent_ryser(a)
        assert ham.log_value <= per.log_value + 1e-6
    for seed in range(5):
        a = adjacency_matrix(gen_dense_digraph(n + 2, 0.5, seed))
        assert hamilton_dp(a).count <= permanent_ryser(a).count
