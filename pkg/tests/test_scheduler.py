import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthcurriculum.catalog import canonical_catalog_256x512, select_curriculum
from depthcurriculum.scheduler import (
    CurriculumPlan,
    CurriculumScheduler,
    SchedulerFinishedError,
    plan_from_catalog,
    plan_from_json,
    plan_to_json,
)

from oracles import brute_scheduler_trace

CATALOG = canonical_catalog_256x512()


def make_plan(n=3, patience=2, min_decrease=0.99, mode="consecutive", **kw):
    syllabuses = tuple(select_curriculum(CATALOG, "A")[:n])
    if isinstance(patience, int):
        patience = (patience,) * n
    return CurriculumPlan(syllabuses, tuple(patience), min_decrease, mode, **kw)


def test_new_state_starts_at_zero():
    sched = CurriculumScheduler(make_plan(n=11, patience=50))
    assert sched.syllabus_index == 0
    assert sched.patience_counter == 0
    assert sched.train_history == []
    assert not sched.finished


def test_plan_validation():
    syl = tuple(select_curriculum(CATALOG, "A")[:2])
    with pytest.raises(ValueError):
        CurriculumPlan(syl, (1,), 0.5)  # mismatched lengths
    with pytest.raises(ValueError):
        CurriculumPlan(syl, (1, 2), 1.1)  # min_decrease out of range
    with pytest.raises(ValueError):
        CurriculumPlan(syl, (1, 0), 0.5)  # patience < 1
    with pytest.raises(ValueError):
        CurriculumPlan((), (), 0.5)  # empty plan
    with pytest.raises(ValueError):
        CurriculumPlan(syl, (1, 2), 0.5, mode="sometimes")


def test_lambda_zero_never_advances_on_decreasing():
    sched = CurriculumScheduler(make_plan(min_decrease=0.0, patience=1))
    loss = 100.0
    for _ in range(200):
        sched.record_loss(loss)
        loss *= 0.99
    assert sched.syllabus_index == 0
    assert sched.patience_counter == 0


def test_hand_trace_lambda_099():
    # losses 1.0, 0.95, 0.949, 0.9489 with min_decrease 0.99, patience 2:
    # 0.95 <= 0.99 (no violation, resets), 0.949 > 0.9405 (violation 1),
    # 0.9489 > 0.93951 (violation 2) -> advance exactly after step 4
    sched = CurriculumScheduler(make_plan(n=3, patience=2, min_decrease=0.99))
    assert not sched.record_loss(1.0)
    assert not sched.record_loss(0.95)
    assert not sched.record_loss(0.949)
    assert sched.syllabus_index == 0
    assert sched.record_loss(0.9489)
    assert sched.syllabus_index == 1
    assert sched.patience_counter == 0


def test_single_syllabus_plan_finishes():
    plan = make_plan(n=1, patience=1, min_decrease=1.0)
    sched = CurriculumScheduler(plan)
    sched.record_loss(1.0)
    assert not sched.finished  # 1.0 > 1.0 * 1.0 is false
    sched2 = CurriculumScheduler(plan)
    sched2.record_loss(1.0)
    assert sched2.record_loss(1.01)  # 1.01 > 1.0 -> violation -> finished
    assert sched2.finished


def test_record_loss_after_finished_raises():
    sched = CurriculumScheduler(make_plan(n=1, patience=1, min_decrease=0.5))
    sched.record_loss(1.0)
    sched.record_loss(1.0)
    assert sched.finished
    with pytest.raises(SchedulerFinishedError):
        sched.record_loss(1.0)
    with pytest.raises(SchedulerFinishedError):
        sched.current_syllabus()


def test_rejects_bad_losses():
    sched = CurriculumScheduler(make_plan())
    with pytest.raises(ValueError):
        sched.record_loss(float("nan"))
    with pytest.raises(ValueError):
        sched.record_loss(float("inf"))
    with pytest.raises(ValueError):
        sched.record_loss(-1.0)


def test_current_syllabus_follows_advances():
    plan = make_plan(n=3, patience=1, min_decrease=0.5)
    sched = CurriculumScheduler(plan)
    assert sched.current_syllabus() == plan.syllabuses[0]
    sched.record_loss(1.0)
    sched.record_loss(1.0)  # 1.0 > 0.5 -> advance
    assert sched.current_syllabus() == plan.syllabuses[1]
    sched.record_loss(1.0)
    sched.record_loss(1.0)
    assert sched.current_syllabus() == plan.syllabuses[2]
    sched.record_loss(1.0)
    sched.record_loss(1.0)
    assert sched.finished


def test_fresh_window_after_advance():
    # first loss of a new syllabus is never a violation, even if larger
    sched = CurriculumScheduler(make_plan(n=2, patience=1, min_decrease=1.0))
    sched.record_loss(1.0)
    assert sched.record_loss(2.0)  # violation -> advance
    assert not sched.record_loss(50.0)  # fresh window, no comparison
    assert sched.patience_counter == 0


def test_consecutive_resets_cumulative_does_not():
    losses = [1.0, 2.0, 0.5, 2.0, 0.5, 2.0]  # alternating violation / decrease
    cons = CurriculumScheduler(make_plan(n=2, patience=3, min_decrease=1.0, mode="consecutive"))
    for x in losses:
        cons.record_loss(x)
    assert cons.syllabus_index == 0  # streak never reaches 3
    cum = CurriculumScheduler(make_plan(n=2, patience=3, min_decrease=1.0, mode="cumulative"))
    advanced = [cum.record_loss(x) for x in losses]
    assert advanced == [False, False, False, False, False, True]
    assert cum.syllabus_index == 1


def test_history_never_drops_losses():
    sched = CurriculumScheduler(make_plan(n=2, patience=1, min_decrease=0.9))
    losses = [float(x) for x in np.random.default_rng(0).uniform(0.1, 2.0, 50)]
    recorded = 0
    for x in losses:
        if sched.finished:
            break
        sched.record_loss(x)
        recorded += 1
    assert sched.train_history == losses[:recorded]


def test_epoch_boundary_default_noop():
    sched = CurriculumScheduler(make_plan(n=2, patience=5))
    sched.record_loss(1.0)
    before = sched.state_dict()
    sched.epoch_boundary()
    after = sched.state_dict()
    before.pop("advanced_in_pass")
    after.pop("advanced_in_pass")
    assert before == after


def test_epoch_boundary_advances_when_enabled():
    plan = make_plan(n=2, patience=5, advance_on_epoch_end=True)
    sched = CurriculumScheduler(plan)
    sched.record_loss(1.0)
    assert sched.epoch_boundary()
    assert sched.syllabus_index == 1
    sched.record_loss(1.0)
    assert sched.epoch_boundary()  # at last syllabus -> finished
    assert sched.finished


def test_epoch_boundary_skips_if_patience_advanced_this_pass():
    plan = make_plan(n=3, patience=1, min_decrease=0.5, advance_on_epoch_end=True)
    sched = CurriculumScheduler(plan)
    sched.record_loss(1.0)
    sched.record_loss(1.0)  # patience advance to syllabus 1
    assert sched.syllabus_index == 1
    assert not sched.epoch_boundary()  # already advanced during this pass
    assert sched.syllabus_index == 1
    sched.record_loss(1.0)
    assert sched.epoch_boundary()  # no patience advance this pass
    assert sched.syllabus_index == 2


def test_monotone_index_and_replay_determinism():
    rng = np.random.default_rng(123)
    for _ in range(50):
        n = int(rng.integers(1, 6))
        plan = make_plan(
            n=n,
            patience=tuple(int(p) for p in rng.integers(1, 4, n)),
            min_decrease=float(rng.uniform(0, 1)),
            mode=("consecutive", "cumulative")[int(rng.integers(0, 2))],
        )
        losses = [float(x) for x in rng.uniform(0.0, 2.0, 60)]
        a = CurriculumScheduler(plan)
        b = CurriculumScheduler(plan)
        prev_index = 0
        for x in losses:
            if a.finished:
                break
            a.record_loss(x)
            b.record_loss(x)
            assert a.syllabus_index >= prev_index
            prev_index = a.syllabus_index
            assert a.state_dict() == b.state_dict()


@given(st.data())
@settings(max_examples=150, deadline=None)
def test_scheduler_matches_brute_force_oracle(data):
    n = data.draw(st.integers(1, 4))
    patience = tuple(data.draw(st.integers(1, 4)) for _ in range(n))
    min_decrease = data.draw(st.floats(0.0, 1.0, allow_nan=False))
    mode = data.draw(st.sampled_from(["consecutive", "cumulative"]))
    losses = data.draw(st.lists(st.floats(0.0, 10.0, allow_nan=False, allow_infinity=False), min_size=1, max_size=40))
    plan = make_plan(n=n, patience=patience, min_decrease=min_decrease, mode=mode)
    sched = CurriculumScheduler(plan)
    expected = brute_scheduler_trace(losses, patience, min_decrease, mode, n)
    got = []
    for x in losses:
        if sched.finished:
            break
        sched.record_loss(x)
        got.append((sched.syllabus_index, sched.patience_counter, sched.finished))
    assert got == expected


def test_state_dict_round_trip():
    plan = make_plan(n=3, patience=2, min_decrease=0.9)
    sched = CurriculumScheduler(plan)
    for x in [1.0, 1.1, 1.2, 0.9, 1.5]:
        sched.record_loss(x)
    snapshot = json.loads(json.dumps(sched.state_dict()))
    restored = CurriculumScheduler(plan)
    restored.load_state_dict(snapshot)
    for x in [1.4, 1.6, 0.2, 0.9]:
        if sched.finished:
            break
        sched.record_loss(x)
        restored.record_loss(x)
    assert sched.state_dict() == restored.state_dict()


def test_plan_json_round_trip():
    plan = plan_from_catalog(CATALOG, "A", 50, 0.999)
    text = plan_to_json(plan, CATALOG)
    payload = json.loads(text)
    assert payload["lambda"] == 0.999
    assert payload["syllabuses"] == [2, 5, 8, 11, 14, 17, 20, 23, 25, 28, 30]
    assert payload["patience"] == [50] * 11
    back = plan_from_json(text, CATALOG)
    assert back == plan


def test_plan_from_catalog_scalar_patience():
    plan = plan_from_catalog(CATALOG, [2, 5], 7, 0.5)
    assert plan.patience == (7, 7, 7)  # identity appended
    assert len(plan.syllabuses) == 3
