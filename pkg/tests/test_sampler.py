import itertools
import math

import numpy as np
import pytest

from hamcount import (
    DomainError,
    HamiltonianCycle,
    LogMatrix,
    SamplerNumericError,
    ScaledInstance,
    ScalingDiagnostics,
    SelectionVector,
    Settings,
    adjacency_matrix,
    br,
    complete_digraph,
    gen_dense_digraph,
    hamilton_dp,
    prepare,
    recover,
    run_trial,
    shc_trace,
    trial_rng,
    validate_cycle,
)

from .graphs import directed_cycle


class FixedStream:
    def __init__(self, value):
        self.value = value
        self.calls = 0

    def random(self, size=None):
        self.calls += 1
        return self.value


def hand_scaled(linear) -> ScaledInstance:
    c = LogMatrix.from_linear(linear)
    return ScaledInstance(
        c=c,
        log_l=0.0,
        gamma_log=None,
        epsilon=None,
        diagnostics=ScalingDiagnostics(0, 0.0, 0.0),
        b_row_sums=np.ones(c.order),
        b_col_sums=np.ones(c.order),
    )


def test_selection_vector_validation():
    assert SelectionVector((1,)).n == 1
    sel = SelectionVector([2, 3, 2, 1])
    assert sel.pi == (2, 3, 2, 1)
    assert sel[2] == 3
    with pytest.raises(DomainError):
        SelectionVector((2, 2))
    with pytest.raises(DomainError):
        SelectionVector((3, 1))
    with pytest.raises(DomainError):
        SelectionVector((1, 2, 1))
    with pytest.raises(DomainError):
        SelectionVector(())


@pytest.mark.parametrize(
    "pi, vertices",
    [
        ((1,), (1, 1)),
        ((2, 1), (1, 2, 1)),
        ((2, 2, 1), (1, 3, 2, 1)),
        ((3, 2, 1), (1, 2, 3, 1)),
        ((2, 3, 2, 1), (1, 3, 4, 2, 1)),
        ((4, 2, 2, 1), (1, 3, 2, 4, 1)),
        ((2, 2, 2, 2, 1), (1, 5, 4, 3, 2, 1)),
    ],
)
def test_recover(pi, vertices):
    assert recover(pi).vertices == vertices


def test_shc_trace_matches_recover():
    a = adjacency_matrix(complete_digraph(4))
    assert shc_trace(a, (2, 3, 2, 1)) == [(2, 1), (4, 2), (1, 3), (3, 4)]
    cycle = recover((2, 3, 2, 1), a)
    assert set(cycle.edges) == {(2, 1), (4, 2), (1, 3), (3, 4)}
    assert cycle.log_weight == 0.0
    with pytest.raises(DomainError):
        shc_trace(a, (2, 1))


def test_every_selection_vector_of_order5_is_a_distinct_cycle():
    a = adjacency_matrix(complete_digraph(5))
    seen = set()
    for head in itertools.product(*(range(2, 6 - k + 1) for k in range(1, 5))):
        pi = (*head, 1)
        cycle = recover(pi, a)
        validate_cycle(complete_digraph(5), cycle.vertices)
        assert set(shc_trace(a, pi)) == set(cycle.edges)
        seen.add(cycle.vertices)
    assert len(seen) == 24


def test_hamiltonian_cycle_str():
    assert str(HamiltonianCycle((1, 3, 2, 1))) == "1 3 2 1"
    assert HamiltonianCycle((1, 3, 2, 1)).edges == ((1, 3), (3, 2), (2, 1))


def test_trial_rng_is_counter_based():
    a = trial_rng(7, 3).random(4)
    b = trial_rng(7, 3).random(4)
    c = trial_rng(7, 4).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_run_trial_picks_first_rows_with_zero_draws(complete5_instance):
    stream = FixedStream(0.0)
    outcome = run_trial(complete5_instance, stream)
    assert outcome.accepted
    assert outcome.levels_completed == 5
    assert outcome.selection.pi == (2, 2, 2, 2, 1)
    assert outcome.cycle.vertices == (1, 5, 4, 3, 2, 1)
    assert stream.calls == 5


def test_run_trial_rejects_at_the_first_level(complete5_instance):
    stream = FixedStream(np.nextafter(1.0, 0.0))
    outcome = run_trial(complete5_instance, stream)
    assert not outcome.accepted
    assert outcome.rejection_level == 1
    assert outcome.levels_completed == 0
    assert outcome.selection is None
    assert stream.calls == 1


def test_acceptance_rate_matches_ham_over_br(complete5_instance):
    inst = complete5_instance
    expected = math.exp(hamilton_dp(inst.c).log_value - br(inst.c))
    trials = 4000
    accepted = sum(run_trial(inst, trial_rng(11, i)).accepted for i in range(trials))
    se = math.sqrt(expected * (1 - expected) / trials)
    assert abs(accepted / trials - expected) <= 4 * se


def test_directed_cycle_always_recovers_the_cycle():
    g = directed_cycle(6)
    inst = prepare(adjacency_matrix(g), 0.25)
    accepted = 0
    for i in range(300):
        outcome = run_trial(inst, trial_rng(5, i))
        if outcome.accepted and all(g.has_edge(*e) for e in outcome.cycle.edges):
            assert outcome.cycle.vertices == (1, 2, 3, 4, 5, 6, 1)
            accepted += 1
    assert accepted > 0


@pytest.mark.parametrize("n, alpha", [(12, 0.75), (30, 0.8), (50, 0.8)])
def test_accepted_trials_are_consistent(n, alpha):
    g = gen_dense_digraph(n, alpha, seed=n)
    inst = prepare(adjacency_matrix(g), 0.25)
    for i in range(200):
        outcome = run_trial(inst, trial_rng(n, i))
        if not outcome.accepted:
            assert 1 <= outcome.rejection_level <= n
            continue
        cycle = outcome.cycle
        trace = shc_trace(inst.c, outcome.selection)
        assert [col for _, col in trace] == list(range(1, n + 1))
        # the entry picked in column k is the arc entering vertex k
        assert {(row, col) for row, col in trace} == set(cycle.edges)
        assert sorted(cycle.vertices[1:-1]) == list(range(2, n + 1))
        assert cycle.log_weight == pytest.approx(
            sum(inst.c.entries[t - 1, h - 1] for t, h in cycle.edges)
        )


@pytest.mark.parametrize(
    "u, accepted", [(0.4471, True), (0.4473, False), (0.0, True)]
)
def test_order2_all_ones_level_probability(u, accepted):
    # p(2) = (g(1)/e) / (g(2)/e)**2 = 1 / 2.236160...
    inst = hand_scaled([[1.0, 1.0], [1.0, 1.0]])
    outcome = run_trial(inst, FixedStream(u))
    assert outcome.accepted is accepted
    assert outcome.clamp_events == 0
    if accepted:
        assert outcome.selection.pi == (2, 1)
        assert outcome.cycle.vertices == (1, 2, 1)
    else:
        assert outcome.rejection_level == 1


def test_run_trial_raises_on_probabilities_above_one():
    # entries of 2 make the level-1 probabilities sum to about 1.3375
    inst = hand_scaled([[0.0, 2.0], [2.0, 0.0]])
    with pytest.raises(SamplerNumericError) as e:
        run_trial(inst, FixedStream(0.5))
    assert e.value.level == 1
    assert e.value.total == pytest.approx(2 * (4.064856 / math.e) / 2.236160, rel=1e-5)


def test_run_trial_renormalizes_within_tolerance(caplog):
    inst = hand_scaled([[0.0, 2.0], [2.0, 0.0]])
    settings = Settings(clamp_tolerance=1.0)
    with caplog.at_level("WARNING", logger="hamcount.sampler"):
        outcome = run_trial(inst, FixedStream(0.99), settings=settings)
    assert outcome.accepted
    assert outcome.cycle.vertices == (1, 2, 1)
    # once at level 1 and once at the last level
    assert outcome.clamp_events == 2
    assert caplog.text.count("renormalized selection probabilities") == 2
