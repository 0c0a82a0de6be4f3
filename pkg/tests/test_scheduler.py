import random

import pytest

from amoebot import geometry as geo
from amoebot import oracles
from amoebot.engine import (
    ALGORITHM,
    CANDIDATE,
    DECLARE,
    ERODE,
    LEADER,
    SETUP,
    GuardedAction,
    Algorithm,
    Context,
    exec_declare,
    exec_erode,
    exec_setup,
    guard_declare,
    guard_erode,
    guard_setup,
)
from amoebot.generate import generate
from amoebot.scheduler import (
    Configuration,
    FixedPriority,
    Limits,
    LivelockError,
    PreconditionError,
    RoundAccountant,
    RoundStretcher,
    Scripted,
    UniformRandom,
    check_conventions,
    make_policy,
    run_async,
    run_sequential,
)

LINE3 = [(0, 0, 0), (1, -1, 0), (2, -2, 0)]


def test_singleton_sequential_and_async():
    c = Configuration(3, [(0, 0, 0)])
    seq = run_sequential(c)
    asy = run_async(c)
    for t in (seq, asy):
        assert [e.action for e in t.events] == [SETUP, DECLARE]
        assert t.rounds == 2 and t.ok
    assert [e.key() for e in seq.events] == [e.key() for e in asy.events]


def test_pair_all_schedules():
    s = oracles.enumerate_schedules([(0, 0, 0), (1, -1, 0)])
    # 2 setup orders x 2 eroders
    assert s.schedules == 4
    assert s.erosions == {1} and s.leaders == {1}
    assert s.max_rounds <= 3
    assert s.rounds == {2: 4}


def test_three_line_all_schedules():
    s = oracles.enumerate_schedules(LINE3)
    assert s.schedules == 32
    assert s.rounds == {2: 20, 3: 12}
    assert s.erosions == {2}


def test_round_stretcher_reaches_the_exhaustive_maximum_on_three_line():
    best = oracles.enumerate_schedules(LINE3).max_rounds
    for seed in range(5):
        t = run_sequential(Configuration(3, LINE3, None, seed), RoundStretcher(seed))
        assert t.rounds == best == 3


def test_first_round_ends_with_last_setup():
    c = generate("blob", 30, 5, 3)
    t = run_sequential(c, UniformRandom(9))
    setups = [e for e in t.events if e.action == SETUP]
    assert all(e.round == 0 for e in setups)
    last = max(e.step for e in setups)
    assert all(e.round >= 1 for e in t.events if e.step > last)


def test_accountant_disabled_member_is_satisfied():
    acct = RoundAccountant({1, 2})
    assert not acct.advance(1, [], [])
    assert acct.advance(None, [2], [5, 6])
    assert acct.round_index == 1 and acct.pending == {5, 6}


def _enabled_history(config, events):
    sysm = config.build_system()

    def en():
        return frozenset(i for i in range(len(sysm)) if ALGORITHM.first_enabled(Context(sysm, i)))

    hist = [en()]
    for ev in events:
        ALGORITHM.action(ev.action).body(Context(sysm, ev.amoebot))
        hist.append(en())
    return hist


@pytest.mark.parametrize("seed", range(12))
def test_accountant_matches_round_definition(seed):
    rng = random.Random(seed)
    dim = rng.choice((2, 3))
    c = generate(rng.choice(("blob", "growth", "line")), rng.randint(2, 25), seed, dim)
    policy = make_policy(rng.choice(("uniform-random", "fixed-priority", "round-stretcher")), seed)
    t = run_sequential(c, policy)
    hist = _enabled_history(c, t.events)
    assert t.rounds == oracles._rounds_from_history(hist, [e.amoebot for e in t.events])


def test_fixed_priority_takes_lowest_id():
    t = run_sequential(Configuration(3, LINE3), FixedPriority())
    assert [e.key() for e in t.events[:3]] == [(0, SETUP, None), (1, SETUP, None), (0, ERODE, 1)]


def test_scripted_policy_rejects_disabled_choice():
    with pytest.raises(Exception):
        run_sequential(Configuration(3, LINE3), Scripted([0, 0]))


def test_non_contractible_input_refused():
    ring = list(geo.PLANE_OFFSETS)
    with pytest.raises(PreconditionError):
        run_sequential(Configuration(3, ring))
    with pytest.raises(PreconditionError):
        run_sequential(Configuration(3, [(0, 0, 0), (4, 0, 0)]))


@pytest.mark.parametrize("mode", ["sequential", "async"])
def test_same_seed_same_trace(mode):
    c = generate("blob", 40, 3, 3)
    runner = run_sequential if mode == "sequential" else run_async
    a = runner(c, UniformRandom(7))
    b = runner(c, UniformRandom(7))
    assert [(e.key(), e.ops, e.round) for e in a.events] == [(e.key(), e.ops, e.round) for e in b.events]


@pytest.mark.parametrize("seed", range(6))
def test_async_runs_elect_one_leader(seed):
    dim = 2 if seed % 2 else 3
    c = generate("blob", 25 + seed, seed, dim)
    t = run_async(c, make_policy(("uniform-random", "fixed-priority", "round-stretcher")[seed % 3], seed))
    assert t.ok, t.violations
    assert t.erosions == len(c) - 1


def test_async_actions_overlap():
    c = generate("plane-disk", 30, 1, 2)
    t = run_async(c, UniformRandom(1))
    # more interleaving steps than the operations of one action at a time
    assert t.lock_failures > 0


def test_lock_budget_is_enforced():
    c = generate("plane-disk", 30, 1, 2)
    with pytest.raises(LivelockError):
        run_async(c, UniformRandom(1), Limits(lock_budget=0))


def test_action_budget_reports_violation():
    t = run_sequential(generate("line", 10), FixedPriority(), Limits(max_actions=5))
    assert not t.ok
    assert t.violations[0]["kind"] == "action-budget"


def test_conventions_hold_for_the_algorithm():
    r = check_conventions(ALGORITHM)
    assert r.validity and r.phase_structure and r.monotonicity
    assert "trivially" in r.monotonicity_note
    assert r.actions_checked > 100


def _moving_erode(ctx):
    ctx.write(None, CANDIDATE, False)
    ctx.move(0)
    exec_erode(ctx)


def _writing_guard(ctx):
    ctx.write(None, LEADER, ctx.read(None, LEADER))
    return guard_declare(ctx)


def test_conventions_catch_mutants():
    mover = Algorithm([GuardedAction(SETUP, guard_setup, exec_setup), GuardedAction(ERODE, guard_erode, _moving_erode),
                       GuardedAction(DECLARE, guard_declare, exec_declare)])
    writer = Algorithm([GuardedAction(SETUP, guard_setup, exec_setup), GuardedAction(ERODE, guard_erode, exec_erode),
                        GuardedAction(DECLARE, _writing_guard, exec_declare)])
    r1 = check_conventions(mover)
    assert not r1.phase_structure and not r1.passed
    r2 = check_conventions(writer)
    assert not r2.validity and not r2.passed


def test_safety_counterexample_is_reported():
    nodes = list(oracles.SAFETY_COUNTEREXAMPLE)
    # everyone sets up, then the center erodes first
    t = run_sequential(Configuration(3, nodes), Scripted(list(range(7)) + [0]))
    kinds = [v["kind"] for v in t.violations]
    assert kinds[0] == "safety"
    assert t.violations[0]["betti"] == (1, 1, 0)
    assert not t.ok


def test_stuck_ball_is_reported():
    t = run_sequential(Configuration(3, oracles.stuck_ball()), FixedPriority())
    assert t.erosions == 0 and t.leaders == 0
    assert [v["kind"] for v in t.violations] == ["no-progress", "leader-count"]
