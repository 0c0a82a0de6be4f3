import random

import pytest

from amoebot import geometry as geo
from amoebot.engine import (
    ALGORITHM,
    CANDIDATE,
    DECLARE,
    ERODE,
    SETUP,
    AmoebotSystem,
    Context,
    OperationFailed,
    SafetyViolation,
    can_erode,
    enabled_actions,
    execute,
    nbrcand_consistent,
)
from amoebot.geometry import DIM2, DIM3


def system(nodes, dim=DIM3, orientations=None):
    if orientations is None:
        orientations = [geo.IDENTITY] * len(nodes)
    return AmoebotSystem(nodes, orientations, dim)


def all_candidates(sysm):
    for i in range(len(sysm)):
        execute(sysm, i, SETUP)
    return sysm


def test_fresh_amoebot_can_only_setup():
    s = system([(0, 0, 0)])
    assert enabled_actions(s, 0) == [SETUP]
    execute(s, 0, SETUP)
    assert enabled_actions(s, 0) == [DECLARE]
    execute(s, 0, DECLARE)
    assert enabled_actions(s, 0) == []
    assert s.leaders() == [0]


def test_singleton_setup_issues_no_neighbor_writes():
    s = system([(0, 0, 0)])
    ops, rule = execute(s, 0, SETUP)
    assert rule is None
    assert [op for op in ops if op[0] == "Write"] == [("Write", None, "candidate", True)]


def test_setup_informs_neighbor():
    s = system([(0, 0, 0), (1, 1, 0)], orientations=[geo.ORIENTATIONS_3D[5], geo.ORIENTATIONS_3D[17]])
    execute(s, 0, SETUP)
    assert s.candidate == [True, None]
    back = s.back[0][s.nbr[0].index(1)]
    assert s.nbrcand[1][back] is True
    assert sum(s.nbrcand[1]) == 1
    # A's erosion waits for B's setup
    assert enabled_actions(s, 0) == []


def test_pair_erosion_enables_declare():
    s = all_candidates(system([(0, 0, 0), (1, -1, 0)]))
    assert enabled_actions(s, 0) == [ERODE] and enabled_actions(s, 1) == [ERODE]
    ops, rule = execute(s, 0, ERODE)
    assert rule == 1
    assert s.candidate == [False, True]
    assert not any(s.nbrcand[1])
    assert enabled_actions(s, 1) == [DECLARE]
    assert enabled_actions(s, 0) == []
    assert nbrcand_consistent(s) == []


def test_operations_on_empty_ports_fail():
    s = system([(0, 0, 0)])
    ctx = Context(s, 0)
    assert not ctx.connected(0)
    with pytest.raises(OperationFailed):
        ctx.read(0, CANDIDATE)


def test_execute_refuses_disabled_action():
    s = system([(0, 0, 0)])
    with pytest.raises(Exception):
        execute(s, 0, ERODE)


def test_second_leader_is_fatal():
    s = all_candidates(system([(0, 0, 0), (1, -1, 0)]))
    s.leader[1] = True
    with pytest.raises(SafetyViolation):
        s.store(0, "leader", None, True)


def test_rule_2_needs_connected_neighbors():
    # a path of three: the middle amoebot's neighbors are not adjacent
    s = all_candidates(system([(0, 0, 0), (1, -1, 0), (2, -2, 0)]))
    assert can_erode(Context(s, 1)) == 0
    assert can_erode(Context(s, 0)) == 1
    # a triangle: every amoebot sees two adjacent candidates
    t = all_candidates(system([(0, 0, 0), (1, -1, 0), (1, 0, -1)]))
    assert [can_erode(Context(t, i)) for i in range(3)] == [2, 2, 2]


def test_rule_2_stops_at_six_neighbors():
    nodes = [(0, 0, 0)] + list(geo.PLANE_OFFSETS)
    s = all_candidates(system(nodes))
    assert can_erode(Context(s, 0)) == 0


def test_rule_3_square_with_catty_corner():
    square = [(0, 0, 0), (1, 1, 0), (1, -1, 0), (2, 0, 0)]
    rng = random.Random(4)
    for _ in range(25):
        orient = [rng.choice(geo.ORIENTATIONS_3D) for _ in square]
        s = all_candidates(system(square, orientations=orient))
        assert [can_erode(Context(s, i)) for i in range(4)] == [3, 3, 3, 3]


def test_rule_3_probe_reads_b_first():
    square = [(0, 0, 0), (1, 1, 0), (1, -1, 0), (2, 0, 0)]
    s = all_candidates(system(square))
    ctx = Context(s, 0, [])
    assert can_erode(ctx) == 3
    probes = [op for op in ctx.log if op[0] == "Read" and op[2].startswith("nbrcand")]
    assert len(probes) == 1
    ports = sorted(p for p, j in enumerate(s.nbr[0]) if j >= 0)
    assert probes[0][1] == ports[0]


def test_rule_3_falls_back_to_d():
    square = [(0, 0, 0), (1, 1, 0), (1, -1, 0), (2, 0, 0)]
    s = all_candidates(system(square))
    ports = sorted(p for p, j in enumerate(s.nbr[0]) if j >= 0)
    b = s.nbr[0][ports[0]]
    # hide the catty corner from B only: the probe must ask D
    s.nbrcand[b] = [False] * 12
    ctx = Context(s, 0, [])
    assert can_erode(ctx) == 3
    probes = [op[1] for op in ctx.log if op[0] == "Read" and op[2].startswith("nbrcand")]
    assert probes == ports


def test_square_without_catty_corner_is_stuck_locally():
    s = all_candidates(system([(0, 0, 0), (1, 1, 0), (1, -1, 0)]))
    assert can_erode(Context(s, 0)) == 0


def test_no_square_rule_in_2d():
    ring = [(0, 0, 0)] + list(geo.PLANE_OFFSETS[:3])
    s = all_candidates(system(ring, DIM2))
    assert all(can_erode(Context(s, i)) != 3 for i in range(len(s)))


def test_rule_does_not_depend_on_orientation():
    rng = random.Random(11)
    nodes = [(0, 0, 0), (1, 1, 0), (1, -1, 0), (2, 0, 0), (1, 0, 1), (0, 1, 1), (-1, 1, 0)]
    baseline = None
    for _ in range(20):
        orient = [rng.choice(geo.ORIENTATIONS_3D) for _ in nodes]
        s = all_candidates(system(nodes, orientations=orient))
        rules = [can_erode(Context(s, i)) for i in range(len(s))]
        baseline = baseline or rules
        assert rules == baseline


def test_algorithm_actions_are_mutually_exclusive():
    rng = random.Random(2)
    nodes = [(0, 0, 0), (1, 1, 0), (1, -1, 0), (2, 0, 0), (1, 0, 1)]
    s = system(nodes, orientations=[rng.choice(geo.ORIENTATIONS_3D) for _ in nodes])
    while True:
        en = {i: enabled_actions(s, i) for i in range(len(s))}
        assert all(len(a) <= 1 for a in en.values())
        choices = [(i, a[0]) for i, a in en.items() if a]
        if not choices:
            break
        i, a = rng.choice(choices)
        execute(s, i, a)
    assert len(s.leaders()) == 1
    assert nbrcand_consistent(s) == []


def test_duplicate_nodes_rejected():
    with pytest.raises(ValueError):
        system([(0, 0, 0), (0, 0, 0)])


def test_2d_rejects_improper_3d_orientation():
    bad = next(o for o in geo.ORIENTATIONS_3D if o not in geo.ORIENTATIONS_2D)
    with pytest.raises(ValueError):
        AmoebotSystem([(0, 0, 0)], [bad], DIM2)


def test_guards_do_not_write():
    s = system([(0, 0, 0), (1, -1, 0)])
    for i in range(2):
        ctx = Context(s, i, [])
        ALGORITHM.enabled_actions(ctx)
        assert all(op[0] in ("Read", "Connected") for op in ctx.log)
