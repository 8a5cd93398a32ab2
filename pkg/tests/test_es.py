import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esadapt.adaptation import Constant, Controller, OneFifth, PeriodicAdvisor
from esadapt.advisor import ScriptedProvider, SurrogateOneFifthProvider
from esadapt.es import (
    GAUSSIAN,
    UNIFORM_BALL,
    BudgetExhausted,
    EsState,
    mutate,
    run,
    step,
)
from esadapt.problems import make_instance
from esadapt.records import format_run, load_run, parse_run, save_run

from conftest import CountingObjective, make_box_instance


@pytest.mark.parametrize("mode", [GAUSSIAN, UNIFORM_BALL])
def test_mutate_tiny_sigma(mode):
    x = np.ones(7)
    y = mutate(x, 1e-12, np.random.default_rng(0), mode)
    assert np.linalg.norm(y - x) < 1e-9 * np.sqrt(7)


def test_uniform_ball_radius_bound():
    rng = np.random.default_rng(1)
    x = np.zeros(3)
    dists = np.array([np.linalg.norm(mutate(x, 0.4, rng, UNIFORM_BALL)) for _ in range(10_000)])
    assert dists.max() <= 0.4
    # radius ~ sigma * U^(1/d): P(r <= sigma/2) = 1/8 in 3-d
    assert np.mean(dists <= 0.2) == pytest.approx(1 / 8, abs=0.02)


def test_gaussian_squared_norm_concentration():
    rng = np.random.default_rng(2)
    x = np.zeros(1000)
    samples = [np.sum(mutate(x, 1.0, rng, GAUSSIAN) ** 2) / 1000 for _ in range(200)]
    assert abs(np.mean(samples) - 1.0) < 0.05


@pytest.mark.parametrize("sigma", [0.0, -1.0])
def test_mutate_rejects_nonpositive_sigma(sigma):
    with pytest.raises(ValueError):
        mutate(np.zeros(2), sigma, np.random.default_rng(0))


def test_mutate_rejects_unknown_mode():
    with pytest.raises(ValueError, match="mutation mode"):
        mutate(np.zeros(2), 0.1, np.random.default_rng(0), "cauchy")


def _scripted_step(offspring_value):
    """Step from f = 1.0 with an objective that always returns ``offspring_value``."""
    state = EsState(current_x=np.zeros(2), current_f=1.0, step_size=0.1)
    history = []
    new_state, rec = step(state, lambda x: offspring_value, Controller(Constant()), np.random.default_rng(0), history)
    return state, new_state, rec, history


def test_step_rejects_worse():
    state, new, rec, _ = _scripted_step(2.0)
    assert rec.accepted is False
    np.testing.assert_array_equal(new.current_x, state.current_x)
    assert new.current_f == 1.0


def test_step_accepts_better():
    state, new, rec, _ = _scripted_step(0.5)
    assert rec.accepted is True
    assert new.current_f == 0.5
    assert not np.array_equal(new.current_x, state.current_x)


def test_step_tie_keeps_parent():
    state, new, rec, _ = _scripted_step(1.0)
    assert rec.accepted is False
    np.testing.assert_array_equal(new.current_x, state.current_x)


def test_step_accounting():
    state, new, rec, history = _scripted_step(0.5)
    assert (new.generation, new.evaluations_used) == (1, 2)
    assert rec.generation == 1 and rec.sigma_used == 0.1 and rec.parent_f == 1.0
    assert history == [rec]


def test_step_budget_exhausted():
    state = EsState(current_x=np.zeros(2), current_f=1.0, step_size=0.1, generation=4, evaluations_used=5)
    calls = []
    with pytest.raises(BudgetExhausted):
        step(state, lambda x: calls.append(x) or 0.0, Controller(Constant()), np.random.default_rng(0), [], budget=5)
    assert calls == []


def test_step_uses_current_sigma_then_adapts():
    state = EsState(current_x=np.zeros(2), current_f=1.0, step_size=0.2)
    new, rec = step(state, lambda x: 0.0, Controller(OneFifth()), np.random.default_rng(0), [])
    assert rec.sigma_used == 0.2
    assert new.step_size == pytest.approx(0.3)


def test_state_rejects_nonpositive_sigma():
    with pytest.raises(ValueError):
        EsState(current_x=np.zeros(1), current_f=0.0, step_size=0.0)


def test_budget_one():
    inst = make_box_instance()
    rec = run(inst, Constant(), budget=1, seed=0)
    assert rec.records == []
    assert len(rec.best_so_far) == 1 and len(rec.sigma_trace) == 1


def test_budget_thousand_constant_sphere():
    inst = make_instance(1, 2, instance_seed=0)
    counter = CountingObjective(inst)
    rec = run(inst, Constant(), budget=1000, seed=3, objective=counter)
    assert counter.calls == 1000
    assert len(rec.best_so_far) == 1000 and len(rec.records) == 999
    assert all(b <= a for a, b in zip(rec.best_so_far, rec.best_so_far[1:]))
    assert set(rec.sigma_trace) == {0.1}


def test_current_f_matches_evaluation():
    inst = make_instance(3, 5, instance_seed=2)
    rec = run(inst, OneFifth(), budget=300, seed=1)
    for r in rec.records:
        assert r.accepted == (r.offspring_f < r.parent_f)
    # best_so_far is the running minimum of every evaluation
    values = [rec.best_so_far[0]] + [r.offspring_f for r in rec.records]
    np.testing.assert_array_equal(np.minimum.accumulate(values), rec.best_so_far)


def test_unknown_mutation_mode_rejected():
    with pytest.raises(ValueError):
        run(make_box_instance(), Constant(), 10, 0, mutation="levy")


def test_advisor_without_provider_rejected():
    with pytest.raises(ValueError, match="provider"):
        run(make_box_instance(), PeriodicAdvisor(), 10, 0)


def test_scripted_run_serialises_identically(tmp_path):
    inst = make_instance(2, 2, instance_seed=1)
    replies = [f"Recommended step size: {0.1 * 0.8**k}" for k in range(19)]
    texts = []
    for _ in range(2):
        rec = run(inst, PeriodicAdvisor(), 1000, seed=5, provider=ScriptedProvider(replies))
        texts.append(format_run(rec))
    assert texts[0] == texts[1]


def test_record_round_trip(tmp_path):
    inst = make_instance(8, 5, instance_seed=3)
    rec = run(inst, PeriodicAdvisor(), 200, seed=9, provider=SurrogateOneFifthProvider())
    path = save_run(rec, tmp_path / "run000.csv")
    back = load_run(path)
    assert back.records == rec.records
    assert back.sigma_trace == rec.sigma_trace
    assert back.best_so_far == rec.best_so_far
    assert back.transcripts == rec.transcripts
    assert (back.function_id, back.dimension, back.strategy, back.seed, back.budget) == (8, 5, "advisor:advisor", 9, 200)
    assert back.f_opt == inst.f_opt and back.instance_seed == 3
    assert format_run(back) == format_run(rec)


def test_record_header_and_columns():
    rec = run(make_instance(1, 2, instance_seed=0), Constant(), 3, seed=1)
    lines = format_run(rec).splitlines()
    assert lines[0].startswith("# function_id=1 dimension=2 strategy=constant seed=1 budget=3")
    assert lines[1] == "generation,sigma_used,parent_f,offspring_f,accepted,best_so_far"
    assert len(lines) == 2 + 3


def test_truncated_record_rejected():
    rec = run(make_instance(1, 2, instance_seed=0), Constant(), 5, seed=1)
    text = "\n".join(format_run(rec).splitlines()[:-1])
    with pytest.raises(ValueError, match="budget"):
        parse_run(text)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    fid=st.sampled_from([1, 2, 3, 5, 8]),
    strategy=st.sampled_from(["constant", "one-fifth", "advisor"]),
    mode=st.sampled_from([GAUSSIAN, UNIFORM_BALL]),
)
def test_monotone_and_deterministic(seed, fid, strategy, mode):
    inst = make_instance(fid, 3, instance_seed=seed % 1000)
    spec = {"constant": Constant(), "one-fifth": OneFifth(), "advisor": PeriodicAdvisor(period=20)}[strategy]

    def once():
        provider = SurrogateOneFifthProvider() if strategy == "advisor" else None
        counter = CountingObjective(inst)
        rec = run(inst, spec, 150, seed, mutation=mode, provider=provider, objective=counter)
        assert counter.calls == 150
        return rec

    a, b = once(), once()
    assert all(y <= x for x, y in zip(a.best_so_far, a.best_so_far[1:]))
    assert a.sigma_trace == b.sigma_trace and a.best_so_far == b.best_so_far
