import asyncio

import pytest

from hamcount import (
    DomainError,
    Settings,
    TrialGroup,
    TrialGroupError,
    TrialOutcome,
    TrialRunner,
    current_trialgroup,
    run_chunk,
    run_trial,
    trial_rng,
)


@pytest.mark.asyncio
async def test_trialgroup_naming():
    async with TrialGroup(name="XYZ") as tg:
        assert tg.get_name() == "XYZ"
        assert current_trialgroup.get() is tg
    async with TrialGroup() as tg:
        assert tg.get_name().startswith("trials-")
    async with TrialGroup(span=(64, 128)) as tg:
        assert tg.get_name() == "trials[64:128]"
        task = tg.create_task(asyncio.sleep(0))
    assert tg.chunk_count == 1
    assert task.get_name() == "trials[64:128]#1"
    with pytest.raises(LookupError):
        current_trialgroup.get()


@pytest.mark.asyncio
async def test_trialgroup_error():
    async def fail(exc):
        await asyncio.sleep(0)
        raise exc

    with pytest.raises(TrialGroupError) as e:
        async with TrialGroup() as tg:
            tg.create_task(fail(ZeroDivisionError()))
            tg.create_task(fail(KeyError("x")))
    assert ZeroDivisionError in e.value.get_error_types()
    assert "of 2 chunk(s) failed" in str(e.value)


def test_run_chunk(complete5_instance):
    settings = Settings()
    summary = run_chunk(complete5_instance, 3, 10, 30, settings)
    assert (summary.start, summary.stop) == (10, 30)
    expected = [
        i
        for i in range(10, 30)
        if run_trial(complete5_instance, trial_rng(3, i), settings=settings).accepted
    ]
    assert list(summary.accepted) == expected
    assert summary.outcomes == ()
    kept = run_chunk(complete5_instance, 3, 10, 30, settings, keep_outcomes=True)
    assert kept.accepted == summary.accepted
    assert len(kept.outcomes) == len(expected)
    assert all(o.accepted and o.cycle is not None for o in kept.outcomes)


@pytest.mark.asyncio
async def test_runner_fixed_count(complete5_instance):
    settings = Settings(chunk_size=16)
    async with TrialRunner(complete5_instance, 1, settings=settings) as runner:
        tally = await runner.run(100)
    assert tally.trials == 100
    assert not tally.stopped_early
    assert tally.counted == tally.acceptances
    assert 0 < tally.acceptances < 100


@pytest.mark.asyncio
async def test_runner_stops_at_target(complete5_instance):
    settings = Settings(chunk_size=8)
    async with TrialRunner(complete5_instance, 2, settings=settings) as runner:
        tally = await runner.run(10_000, target=5)
    assert tally.stopped_early
    assert tally.acceptances == 5
    accepted = [
        i
        for i in range(tally.trials)
        if run_trial(complete5_instance, trial_rng(2, i)).accepted
    ]
    # the last trial consumed is the fifth acceptance
    assert len(accepted) == 5
    assert accepted[-1] == tally.trials - 1


@pytest.mark.asyncio
async def test_runner_counting_predicate(complete5_instance):
    def starts_with_two(outcome: TrialOutcome) -> bool:
        return outcome.cycle.vertices[1] == 2

    async with TrialRunner(complete5_instance, 4) as runner:
        tally = await runner.run(
            10_000, target=3, counts=starts_with_two, keep_outcomes=True
        )
    assert tally.counted == 3
    assert starts_with_two(tally.accepted[-1])
    assert tally.acceptances >= 3


@pytest.mark.asyncio
@pytest.mark.parametrize("chunk_size", [1, 7, 64, 1000])
async def test_runner_independent_of_chunking(complete5_instance, chunk_size):
    async with TrialRunner(complete5_instance, 9, settings=Settings()) as runner:
        reference = await runner.run(2000, target=40, keep_outcomes=True)
    settings = Settings(chunk_size=chunk_size)
    async with TrialRunner(complete5_instance, 9, settings=settings) as runner:
        tally = await runner.run(2000, target=40, keep_outcomes=True)
    assert tally.trials == reference.trials
    assert [o.selection for o in tally.accepted] == [
        o.selection for o in reference.accepted
    ]


@pytest.mark.asyncio
async def test_runner_process_pool(complete5_instance):
    settings = Settings(chunk_size=32)
    async with TrialRunner(complete5_instance, 5, settings=settings) as runner:
        single = await runner.run(500, target=20, keep_outcomes=True)
    async with TrialRunner(
        complete5_instance, 5, threads=3, settings=settings
    ) as runner:
        pooled = await runner.run(500, target=20, keep_outcomes=True)
    assert pooled.trials == single.trials
    assert pooled.clamp_events == single.clamp_events
    assert [o.cycle for o in pooled.accepted] == [o.cycle for o in single.accepted]


@pytest.mark.asyncio
async def test_runner_validation(complete5_instance):
    with pytest.raises(DomainError):
        TrialRunner(complete5_instance, 0, threads=0)
    async with TrialRunner(complete5_instance, 0) as runner:
        with pytest.raises(DomainError):
            await runner.run(-1)
        tally = await runner.run(0)
    assert tally.trials == 0
    assert tally.accepted == []


@pytest.mark.asyncio
async def test_runner_keeps_counters_only_by_default(complete5_instance):
    settings = Settings(chunk_size=50)
    async with TrialRunner(complete5_instance, 6, settings=settings) as runner:
        counted = await runner.run(400)
        kept = await runner.run(400, keep_outcomes=True)
    assert counted.accepted == []
    assert counted.acceptances == kept.acceptances == len(kept.accepted)
    assert counted.trials == kept.trials == 400
    assert counted.clamp_events == kept.clamp_events


@pytest.mark.asyncio
async def test_runner_predicate_without_keeping(complete5_instance):
    def starts_with_two(outcome: TrialOutcome) -> bool:
        return outcome.cycle.vertices[1] == 2

    async with TrialRunner(complete5_instance, 4) as runner:
        tally = await runner.run(10_000, target=3, counts=starts_with_two)
    assert tally.counted == 3
    assert tally.accepted == []
