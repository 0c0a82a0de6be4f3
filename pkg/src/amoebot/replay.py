"""Re-execute a trace sequentially and check it against the engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import topology
from .engine import ALGORITHM, ERODE, Context, EngineError
from .scheduler import Configuration, RoundAccountant, TraceEvent

CHECK_GUARDS = "check-guards"
CHECK_TOPOLOGY = "check-topology-each-erode"


@dataclass
class ReplayReport:
    events: int = 0
    divergence: Optional[dict] = None
    topology_violations: list[dict] = field(default_factory=list)
    rounds_checked: bool = False
    leaders: int = 0

    @property
    def ok(self) -> bool:
        return self.divergence is None and not self.topology_violations


def replay(
    events: Sequence[TraceEvent],
    config: Configuration,
    mode: str = CHECK_GUARDS,
    check_rounds: bool = False,
) -> ReplayReport:
    """Commit-order replay: each event's action must be enabled when it runs.

    Operation logs and fired rules must match the recorded ones.  With
    ``check_rounds`` the recorded round indices are recomputed (sequential
    traces only).  The replay also requires the trace to end in a
    quiescent state.
    """
    if mode not in (CHECK_GUARDS, CHECK_TOPOLOGY):
        raise ValueError(f"unknown replay mode {mode!r}")
    sysm = config.build_system()
    n = len(sysm)
    report = ReplayReport()
    tracker = topology.RemovalTracker(config.nodes, config.dim) if mode == CHECK_TOPOLOGY else None

    def enabled(i):
        a = ALGORITHM.first_enabled(Context(sysm, i))
        return a.name if a else None

    acct = RoundAccountant(i for i in range(n) if enabled(i)) if check_rounds else None

    def diverge(ev, reason):
        report.divergence = {"step": ev.step if ev is not None else None, "reason": reason}
        return report

    for k, ev in enumerate(events):
        if ev.step != k:
            return diverge(ev, f"step index {ev.step} out of sequence (expected {k})")
        if not 0 <= ev.amoebot < n:
            return diverge(ev, f"unknown amoebot {ev.amoebot}")
        if acct is not None and ev.round != acct.round_index:
            return diverge(ev, f"round {ev.round} recorded, {acct.round_index} recomputed")
        ctx = Context(sysm, ev.amoebot)
        actions = ALGORITHM.enabled_actions(ctx)
        if ev.action not in actions:
            return diverge(ev, f"{ev.action} not enabled for amoebot {ev.amoebot} (enabled: {actions})")
        rule = ALGORITHM.rule_fired(ctx, ev.action)
        if rule != ev.rule:
            return diverge(ev, f"rule {ev.rule} recorded, {rule} recomputed")
        ctx.log = []
        try:
            ALGORITHM.action(ev.action).body(ctx)
        except EngineError as exc:
            return diverge(ev, str(exc))
        if [tuple(op) for op in ctx.log] != [tuple(op) for op in ev.ops]:
            return diverge(ev, "operation log differs")
        report.events += 1
        if tracker is not None and ev.action == ERODE:
            tracker.remove(sysm.nodes[ev.amoebot])
            if not tracker.contractible():
                report.topology_violations.append({"step": ev.step, "amoebot": ev.amoebot, "betti": tracker.betti().as_tuple()})
        if acct is not None:
            en = [enabled(i) for i in range(n)]
            acct.advance(ev.amoebot, [j for j in acct.pending if not en[j]], (j for j in range(n) if en[j]))
    still = [i for i in range(n) if enabled(i)]
    if still:
        return diverge(None, f"trace ends while amoebots {still[:10]} are enabled")
    report.rounds_checked = acct is not None
    report.leaders = len(sysm.leaders())
    return report
