import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from amoebot import formats, geometry as geo, topology
from amoebot.cli import main, parse_limits
from amoebot.engine import ERODE
from amoebot.generate import SHAPES, GenerationError, generate
from amoebot.oracles import stuck_ball
from amoebot.replay import CHECK_GUARDS, CHECK_TOPOLOGY, replay
from amoebot.scheduler import Configuration, TraceEvent, UniformRandom, make_policy, run_async, run_sequential
from amoebot.stats import COLUMNS, summarize, to_csv

GOLDEN = Path(__file__).parent / "golden"


def _shapes(dim):
    return [s for s in SHAPES if dim == 3 or s != "square-gadget"]


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("size", [1, 7, 40])
def test_generators_give_contractible_systems(dim, size):
    for shape in _shapes(dim):
        c = generate(shape, size, 4, dim)
        assert len(c) == size
        assert topology.is_connected(c.nodes, dim) and topology.is_contractible(c.nodes, dim)
        for p in c.nodes:
            geo.check_node(p, dim)


def test_square_gadget_contains_a_square():
    nodes = set(generate("square-gadget", 4, 0, 3).nodes)
    assert any(sq.catty in nodes and geo.add(p, sq.a) in nodes and geo.add(p, sq.b) in nodes
               for p in nodes for sq in geo.squares_through(p))


def test_generator_errors():
    with pytest.raises(GenerationError):
        generate("square-gadget", 5, 0, 2)
    with pytest.raises(Exception):
        generate("pyramid", 5)


def test_generation_is_seeded():
    assert generate("blob", 30, 8, 3).nodes == generate("blob", 30, 8, 3).nodes
    assert generate("blob", 30, 8, 3).nodes != generate("blob", 30, 9, 3).nodes


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SHAPES), st.integers(1, 30), st.integers(0, 10**6), st.sampled_from([2, 3]),
       st.sampled_from(["seed", "identity", "explicit"]))
def test_config_roundtrip(shape, size, seed, dim, orient):
    if shape == "square-gadget" and dim == 2:
        return
    c = generate(shape, size, seed, dim)
    if orient == "identity":
        c.orientation_seed = None
    elif orient == "explicit":
        c.orientations = c.resolved_orientations()
    back = formats.config_from_dict(json.loads(formats.dumps_config(c)))
    assert back.dim == c.dim and back.nodes == c.nodes
    assert back.resolved_orientations() == c.resolved_orientations()


def test_bad_config_header(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"format": "amoebot-config", "version": 99, "dim": 3, "nodes": []}))
    with pytest.raises(formats.FormatError):
        formats.load_config(p)
    assert main(["run", str(p)]) == 2


def test_trace_roundtrip_and_determinism():
    c = generate("blob", 25, 2, 3)
    a = formats.dumps_trace(run_sequential(c, UniformRandom(5)))
    b = formats.dumps_trace(run_sequential(c, UniformRandom(5)))
    assert a == b
    header, events, summary = formats.loads_trace(a)
    assert header["n"] == 25 and summary["summary"]["leaders"] == 1
    assert formats.dumps_trace(run_sequential(c, UniformRandom(5))).splitlines()[1:-1] == [
        json.dumps(formats.event_to_dict(e), separators=(",", ":")) for e in events
    ]


def test_golden_files_are_reproduced(tmp_path):
    config = formats.load_config(GOLDEN / "config.json")
    assert formats.dumps_config(config) == (GOLDEN / "config.json").read_text()
    assert formats.dumps_config(generate("square-gadget", 6, 1, 3)) == (GOLDEN / "config.json").read_text()
    trace = run_sequential(config, UniformRandom(2))
    assert formats.dumps_trace(trace) == (GOLDEN / "trace.jsonl").read_text()
    formats.save_metrics(trace, tmp_path / "m.json")
    fresh, frozen = formats.load_metrics(tmp_path / "m.json"), formats.load_metrics(GOLDEN / "metrics.json")
    fresh.pop("wall_time")
    frozen.pop("wall_time")
    assert fresh == frozen


def test_golden_trace_replays():
    config = formats.load_config(GOLDEN / "config.json")
    header, events, _ = formats.load_trace(GOLDEN / "trace.jsonl")
    rep = replay(events, config, CHECK_TOPOLOGY, check_rounds=True)
    assert rep.ok and rep.rounds_checked and rep.leaders == 1
    assert sum(e.rule == 3 for e in events) == 2


@pytest.mark.parametrize("seed", range(4))
def test_fresh_trace_passes_both_replay_modes(seed):
    c = generate("growth", 30, seed, 2 + seed % 2)
    t = run_sequential(c, make_policy("round-stretcher", seed))
    for mode in (CHECK_GUARDS, CHECK_TOPOLOGY):
        rep = replay(t.events, c, mode, check_rounds=True)
        assert rep.ok, rep.divergence
        assert rep.events == len(t.events)


def test_deleted_erode_is_caught():
    c = generate("blob", 20, 1, 3)
    events = run_sequential(c, UniformRandom(1)).events
    k = next(i for i, e in enumerate(events) if e.action == ERODE)
    cut = [TraceEvent(i, e.amoebot, e.action, e.rule, e.ops, e.round) for i, e in enumerate(events[:k] + events[k + 1:])]
    rep = replay(cut, c)
    assert not rep.ok and rep.divergence is not None


def test_tampered_rule_is_caught():
    c = generate("blob", 15, 1, 3)
    events = run_sequential(c, UniformRandom(1)).events
    k = next(i for i, e in enumerate(events) if e.action == ERODE)
    e = events[k]
    events[k] = TraceEvent(e.step, e.amoebot, e.action, 4 - e.rule if e.rule != 2 else 1, e.ops, e.round)
    assert "rule" in replay(events, c).divergence["reason"]


@pytest.mark.parametrize("seed", range(3))
def test_async_commit_order_replays(seed):
    c = generate("plane-disk", 40, seed, 2) if seed % 2 else generate("blob", 40, seed, 3)
    t = run_async(c, UniformRandom(seed))
    assert t.ok
    rep = replay(t.events, c, CHECK_TOPOLOGY)
    assert rep.ok, rep.divergence


def test_stats_rows():
    metrics = []
    for seed in range(3):
        for dim in (2, 3):
            c = generate("square-gadget" if dim == 3 else "blob", 12, seed, dim)
            metrics.append(run_sequential(c, UniformRandom(seed)).metrics())
    rows = summarize(metrics)
    assert [r["dim"] for r in rows] == [2, 3]
    assert all(r["runs"] == 3 and r["erosions_eq_n_minus_1"] and r["rounds_le_n_plus_1"] for r in rows)
    assert rows[0]["rule3"] == 0 and rows[1]["rule3"] > 0
    text = to_csv(rows)
    assert text.splitlines()[0] == ",".join(COLUMNS)
    assert len(text.splitlines()) == 3


def test_parse_limits(tmp_path):
    assert parse_limits("max_actions=50,check_safety=false").max_actions == 50
    p = tmp_path / "l.json"
    p.write_text('{"lock_budget": 7}')
    assert parse_limits(str(p)).lock_budget == 7
    with pytest.raises(SystemExit):
        parse_limits("bogus=1")


def test_cli_end_to_end(tmp_path, capsys):
    cfg, tr, met = tmp_path / "c.json", tmp_path / "t.jsonl", tmp_path / "m.json"
    assert main(["gen", "--shape", "blob", "--size", "15", "--seed", "3", "-o", str(cfg)]) == 0
    assert main(["check-topology", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out.splitlines()[-1])["betti"] == [1, 0, 0]
    assert main(["run", str(cfg), "--mode", "async", "--policy", "fixed-priority", "--trace", str(tr), "--metrics", str(met)]) == 0
    assert main(["replay", str(tr), str(cfg), "--check", CHECK_TOPOLOGY]) == 0
    assert main(["stats", str(met), "-o", str(tmp_path / "s.csv")]) == 0
    assert "async,fixed-priority,1" in (tmp_path / "s.csv").read_text()


def test_cli_exit_codes(tmp_path):
    ring = tmp_path / "ring.json"
    formats.save_config(Configuration(3, list(geo.PLANE_OFFSETS)), ring)
    assert main(["check-topology", str(ring)]) == 1
    assert main(["run", str(ring)]) == 2
    assert main(["run", str(ring), "--no-precondition"]) == 1
    stuck = tmp_path / "ball.json"
    formats.save_config(Configuration(3, stuck_ball()), stuck)
    # contractible, accepted, but no amoebot can ever erode
    assert main(["run", str(stuck), "--policy", "fixed-priority"]) == 1


def test_cli_verify_oracles_report(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify-oracles", "--oracle", "hole-free", "--report", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["hole-free"]["checked"] == 1585 and doc["hole-free"]["passed"]
    assert main(["verify-oracles", "--oracle", "progress", "--samples", "20", "--size-range", "2:30"]) == 0
