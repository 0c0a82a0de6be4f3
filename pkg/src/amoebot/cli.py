"""Command line: gen, run, replay, check-topology, verify-oracles, stats."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

from . import formats, oracles, topology
from .generate import SHAPES, GenerationError, generate
from .replay import CHECK_GUARDS, CHECK_TOPOLOGY, replay
from .scheduler import POLICIES, Limits, PreconditionError, make_policy, run
from .stats import summarize, to_csv


def parse_limits(text: str | None) -> Limits:
    """Limits from a JSON file or inline ``key=value,...`` pairs."""
    if not text:
        return Limits()
    if Path(text).is_file():
        values = json.loads(Path(text).read_text())
    else:
        values = {}
        for item in text.split(","):
            key, _, val = item.partition("=")
            values[key.strip()] = json.loads(val)
    known = {f.name for f in fields(Limits)}
    unknown = set(values) - known
    if unknown:
        raise SystemExit(f"unknown limits: {', '.join(sorted(unknown))}")
    return Limits(**values)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, choices=(2, 3), default=3)
    p.add_argument("--policy", choices=sorted(POLICIES), default="uniform-random")
    p.add_argument("--mode", choices=("sequential", "async"), default="sequential")
    p.add_argument("--limits", help="JSON file or key=value list, e.g. max_actions=500,check_safety=false")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="amoebot", description="Leader election by erosion on triangular and FCC lattices")
    sub = ap.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a configuration")
    g.add_argument("--shape", choices=SHAPES, default="blob")
    g.add_argument("--size", type=int, required=True)
    g.add_argument("--orientations", choices=("randomize", "identity", "explicit"), default="randomize")
    g.add_argument("-o", "--output", required=True)

    r = sub.add_parser("run", parents=[common], help="run the algorithm on a configuration")
    r.add_argument("config")
    r.add_argument("--trace", help="trace output (JSON lines)")
    r.add_argument("--metrics", help="metrics output (JSON)")
    r.add_argument("--no-precondition", action="store_true", help="skip the contractibility check (negative tests)")

    p = sub.add_parser("replay", parents=[common], help="re-execute a trace")
    p.add_argument("trace")
    p.add_argument("config")
    p.add_argument("--check", choices=(CHECK_GUARDS, CHECK_TOPOLOGY), default=CHECK_GUARDS)

    t = sub.add_parser("check-topology", parents=[common], help="connectivity, Betti numbers and genus")
    t.add_argument("config")

    o = sub.add_parser("verify-oracles", parents=[common], help="run the geometric oracles")
    o.add_argument("--oracle", choices=("hole-free", "vertex-angles", "progress", "counterexamples", "all"), default="all")
    o.add_argument("--samples", type=int, default=1000)
    o.add_argument("--size-range", default="2:200")
    o.add_argument("--report", help="machine-readable report (JSON)")

    s = sub.add_parser("stats", parents=[common], help="summarize metrics files as CSV")
    s.add_argument("metrics", nargs="+")
    s.add_argument("-o", "--output")
    return ap


def cmd_gen(args) -> int:
    try:
        config = generate(args.shape, args.size, args.seed, args.dim)
    except GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return 1
    if args.orientations == "identity":
        config.orientation_seed = None
    elif args.orientations == "explicit":
        config.orientations = config.resolved_orientations()
    formats.save_config(config, args.output)
    print(f"wrote {len(config)} nodes to {args.output}")
    return 0


def cmd_run(args) -> int:
    config = formats.load_config(args.config)
    limits = parse_limits(args.limits)
    if args.no_precondition:
        limits.check_precondition = False
    try:
        trace = run(config, make_policy(args.policy, args.seed), args.mode, limits)
    except PreconditionError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    if args.trace:
        formats.save_trace(trace, args.trace)
    if args.metrics:
        formats.save_metrics(trace, args.metrics)
    m = trace.metrics()
    print(f"n={m['n']} rounds={m['rounds']} erosions={m['erosions']} leader={m['leader']} "
          f"rules={m['rule1']}/{m['rule2']}/{m['rule3']} steps={m['steps']}")
    for v in trace.violations:
        print(f"violation at event {v['event']}: {json.dumps(v)}", file=sys.stderr)
    return 0 if trace.ok else 1


def cmd_replay(args) -> int:
    config = formats.load_config(args.config)
    header, events, _ = formats.load_trace(args.trace)
    rep = replay(events, config, args.check, check_rounds=header.get("mode") == "sequential")
    print(f"replayed {rep.events} events; leaders={rep.leaders}; rounds checked: {rep.rounds_checked}")
    if rep.divergence:
        print(f"divergence: {json.dumps(rep.divergence)}", file=sys.stderr)
    for v in rep.topology_violations:
        print(f"topology violation: {json.dumps(v)}", file=sys.stderr)
    return 0 if rep.ok else 1


def cmd_check_topology(args) -> int:
    config = formats.load_config(args.config)
    connected = topology.is_connected(config.nodes, config.dim)
    cx = topology.build_dual_complex(config.nodes, config.dim)
    b = topology.betti(cx)
    out = {"n": len(config), "dim": config.dim, "connected": connected, "betti": list(b.as_tuple()),
           "euler": cx.euler_characteristic(), "contractible": connected and b.acyclic}
    if config.dim == 3:
        out["genus"] = topology.boundary_genus(cx)
    print(json.dumps(out))
    return 0 if out["contractible"] else 1


def cmd_verify_oracles(args) -> int:
    which = ("hole-free", "vertex-angles", "progress", "counterexamples") if args.oracle == "all" else (args.oracle,)
    report, ok = {}, True
    if "hole-free" in which:
        r = oracles.verify_small_neighborhoods_hole_free()
        report["hole-free"] = {"checked": r.checked, "by_size": r.by_size, "violators": r.violators,
                               "glued_violators": r.glued_violators, "negative_control_b1": r.negative_control["b1"],
                               "passed": r.passed}
        print(f"hole-free: {r.checked} subsets, {len(r.violators)} violators "
              f"({r.glued_violators} with pinch vertices glued) -> {'PASS' if r.passed else 'FAIL'}")
        ok &= r.passed
    if "vertex-angles" in which:
        a = oracles.verify_vertex_angles()
        report["vertex-angles"] = {"checked": a.checked, "classified": a.classified, "min_k": a.min_k,
                                   "failures": [asdict(x) for x in a.failures],
                                   "excluded": [asdict(x) for x in a.excluded], "passed": a.passed}
        print(f"vertex-angles: {a.checked} subsets, {a.classified} polyhedron vertices, "
              f"{len(a.excluded)} excluded {a.excluded_by_reason()}, {len(a.failures)} positive -> "
              f"{'PASS' if a.passed else 'FAIL'}")
        ok &= a.passed
    if "progress" in which:
        lo, _, hi = args.size_range.partition(":")
        p = oracles.sample_progress_lemma(args.samples, (int(lo), int(hi)), args.seed)
        report["progress"] = {"samples": p.samples, "counterexamples": p.counterexamples, "skipped": p.skipped,
                              "by_shape": p.by_shape, "passed": p.passed}
        print(f"progress: {p.samples} samples, {len(p.counterexamples)} without an erodable amoebot, "
              f"{len(p.skipped)} skipped -> {'PASS' if p.passed else 'FAIL'}")
        ok &= p.passed
    if "counterexamples" in which:
        c = oracles.check_counterexamples()
        report["counterexamples"] = dict(asdict(c), safety_broken=c.safety_broken, progress_broken=c.progress_broken)
        print(f"3D safety counterexample: betti {c.safety_before} -> {c.safety_after}, rule holds: {c.safety_rule_holds}")
        print(f"3D progress counterexample: {c.ball_size}-node ball, contractible: {c.ball_contractible}, "
              f"erodable: {c.ball_erodable}")
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=1, default=list) + "\n")
    return 0 if ok else 1


def cmd_stats(args) -> int:
    rows = summarize(formats.load_metrics(p) for p in args.metrics)
    text = to_csv(rows)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "run": cmd_run,
    "replay": cmd_replay,
    "check-topology": cmd_check_topology,
    "verify-oracles": cmd_verify_oracles,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.verb](args)
    except formats.FormatError as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
