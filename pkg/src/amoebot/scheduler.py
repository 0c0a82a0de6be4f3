"""Unfair sequential and asynchronous adversaries with round accounting.

The sequential scheduler activates one enabled amoebot at a time and runs
its action atomically.  The asynchronous scheduler interleaves single
operations of many in-flight actions; every action runs under a lock on its
closed neighborhood, acquired by an atomic test-and-set.

Both produce a :class:`Trace` whose events are in commit order.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from . import geometry as geo
from . import topology
from .engine import (
    ALGORITHM,
    DECLARE,
    ERODE,
    READ,
    WRITE,
    Algorithm,
    AmoebotSystem,
    Context,
    EngineError,
    SafetyViolation,
    nbrcand_consistent,
)
from .geometry import Orientation


class SchedulerError(RuntimeError):
    pass


class PreconditionError(SchedulerError):
    """The initial configuration is not connected and contractible."""


class LivelockError(SchedulerError):
    pass


# ---------------------------------------------------------------------------
# configuration and limits


@dataclass
class Configuration:
    dim: int
    nodes: list[tuple[int, int, int]]
    orientations: Optional[list[Orientation]] = None
    orientation_seed: Optional[int] = None

    def __post_init__(self):
        self.nodes = [geo.check_node(p, self.dim) for p in self.nodes]
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate nodes")
        if self.orientations is not None and len(self.orientations) != len(self.nodes):
            raise ValueError("one orientation per node required")

    def __len__(self) -> int:
        return len(self.nodes)

    def resolved_orientations(self) -> list[Orientation]:
        if self.orientations is not None:
            return list(self.orientations)
        if self.orientation_seed is None:
            return [geo.IDENTITY] * len(self.nodes)
        return random_orientations(len(self.nodes), self.dim, self.orientation_seed)

    def with_orientations(self, seed: int) -> "Configuration":
        return Configuration(self.dim, list(self.nodes), None, seed)

    def check(self) -> None:
        if not self.nodes:
            raise PreconditionError("empty configuration")
        if not topology.is_connected(self.nodes, self.dim):
            raise PreconditionError("configuration is not connected")
        if not topology.is_contractible(self.nodes, self.dim):
            raise PreconditionError("configuration is not contractible")

    def build_system(self) -> AmoebotSystem:
        return AmoebotSystem(self.nodes, self.resolved_orientations(), self.dim)


def random_orientations(n: int, dim: int, seed: int) -> list[Orientation]:
    rng = random.Random(seed)
    group = geo.orientations_for(dim)
    return [rng.choice(group) for _ in range(n)]


@dataclass
class Limits:
    max_actions: Optional[int] = None  # default scales with n
    max_steps: Optional[int] = None  # async interleaving steps
    lock_budget: int = 100_000  # consecutive failed lock attempts
    check_safety: bool = True
    check_consistency: bool = True
    check_precondition: bool = True

    def actions_for(self, n: int) -> int:
        return self.max_actions if self.max_actions is not None else 4 * n + 16

    def steps_for(self, n: int, ports: int) -> int:
        return self.max_steps if self.max_steps is not None else (4 * n + 16) * (8 * ports + 8) + self.lock_budget


# ---------------------------------------------------------------------------
# trace


@dataclass
class TraceEvent:
    step: int
    amoebot: int
    action: str
    rule: Optional[int]
    ops: list
    round: int

    def key(self) -> tuple:
        return (self.amoebot, self.action, self.rule)


@dataclass
class Trace:
    header: dict
    events: list[TraceEvent] = field(default_factory=list)
    leader: Optional[int] = None
    leaders: int = 0
    rounds: int = 0
    erosions: int = 0
    rule_counts: dict = field(default_factory=lambda: {1: 0, 2: 0, 3: 0})
    violations: list[dict] = field(default_factory=list)
    lock_failures: int = 0
    steps: int = 0
    wall_time: float = 0.0

    @property
    def n(self) -> int:
        return self.header["n"]

    @property
    def ok(self) -> bool:
        return self.leaders == 1 and not self.violations

    def metrics(self) -> dict:
        h = self.header
        return {
            "n": h["n"],
            "dim": h["dim"],
            "mode": h["mode"],
            "policy": h["policy"],
            "seed": h["seed"],
            "rounds": self.rounds,
            "erosions": self.erosions,
            "leader": self.leader,
            "leaders": self.leaders,
            "rule1": self.rule_counts[1],
            "rule2": self.rule_counts[2],
            "rule3": self.rule_counts[3],
            "actions": len(self.events),
            "steps": self.steps,
            "lock_failures": self.lock_failures,
            "violations": len(self.violations),
            "wall_time": round(self.wall_time, 6),
        }


# ---------------------------------------------------------------------------
# adversary policies


class Policy:
    """Chooses the next amoebot to step among ``options`` (sorted ids)."""

    kind = "policy"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def choose(self, options: Sequence[int], view: "SchedulerView") -> int:
        raise NotImplementedError


class UniformRandom(Policy):
    kind = "uniform-random"

    def choose(self, options, view):
        return self.rng.choice(options)


class FixedPriority(Policy):
    kind = "fixed-priority"

    def choose(self, options, view):
        return options[0]


class RoundStretcher(Policy):
    """Tries to make rounds as numerous as possible.

    Sequentially: greedy one-step lookahead, activating whoever satisfies the
    most pending round members (so the round closes after as little progress
    as possible).  Asynchronously: starve pending members and step the others.
    """

    kind = "round-stretcher"

    def choose(self, options, view):
        if view.mode == "async":
            idle = [i for i in options if i not in view.pending]
            return self.rng.choice(idle or list(options))
        best, picks = None, []
        for i in options:
            score = view.lookahead(i)
            if best is None or score > best:
                best, picks = score, [i]
            elif score == best:
                picks.append(i)
        return self.rng.choice(picks)


class Scripted(Policy):
    """Follows a fixed id sequence, then falls back to lowest id."""

    kind = "scripted"

    def __init__(self, script: Iterable[int], seed: int = 0):
        super().__init__(seed)
        self.script = list(script)
        self.pos = 0

    def choose(self, options, view):
        if self.pos < len(self.script):
            i = self.script[self.pos]
            self.pos += 1
            if i not in options:
                raise SchedulerError(f"scripted choice {i} is not available (options {list(options)})")
            return i
        return options[0]


POLICIES = {cls.kind: cls for cls in (UniformRandom, FixedPriority, RoundStretcher)}


def make_policy(kind: str, seed: int = 0) -> Policy:
    try:
        return POLICIES[kind](seed)
    except KeyError:
        raise ValueError(f"unknown policy {kind!r}; choose from {sorted(POLICIES)}") from None


# ---------------------------------------------------------------------------
# rounds


class RoundAccountant:
    """Tracks E_i: the members enabled (or mid-action) when round i began."""

    def __init__(self, initial: Iterable[int]):
        self.round_index = 0
        self.pending: set[int] = set(initial)

    def advance(self, completed: Optional[int], disabled: Iterable[int], active: Iterable[int]) -> bool:
        """Record a commit by ``completed`` and members found disabled.

        ``active`` is consulted only when the round closes: it yields the
        amoebots enabled or mid-action at that moment (E of the next round).
        Returns True if a round closed.
        """
        if completed is not None:
            self.pending.discard(completed)
        self.pending.difference_update(disabled)
        if self.pending:
            return False
        self.round_index += 1
        self.pending = set(active)
        return True


def advance_round(acct: RoundAccountant, completed, disabled, active) -> RoundAccountant:
    acct.advance(completed, disabled, active)
    return acct


# ---------------------------------------------------------------------------
# shared machinery


class SchedulerView:
    """What a policy may see: mode, pending round members, and lookahead."""

    def __init__(self, run: "_Run"):
        self._run = run
        self.mode = run.mode

    @property
    def pending(self) -> set[int]:
        return self._run.rounds.pending

    def lookahead(self, i: int) -> int:
        return self._run.lookahead(i)


class _Run:
    mode = "sequential"

    def __init__(self, config: Configuration, policy: Policy, limits: Optional[Limits], algorithm: Algorithm):
        self.limits = limits or Limits()
        if self.limits.check_precondition:
            config.check()
        self.config = config
        self.policy = policy
        self.algorithm = algorithm
        self.system = config.build_system()
        self.n = len(self.system)
        self.enabled: list[Optional[str]] = [None] * self.n
        self.dirty: set[int] = set(range(self.n))
        self.tracker = topology.RemovalTracker(config.nodes, config.dim) if self.limits.check_safety else None
        self.broken = False  # candidate set currently not contractible
        self.trace = Trace(
            header={
                "format": "amoebot-trace",
                "version": 1,
                "mode": self.mode,
                "policy": policy.kind,
                "seed": policy.seed,
                "n": self.n,
                "dim": config.dim,
                "algorithm": algorithm.name,
            }
        )
        self.view = SchedulerView(self)

    # enabledness cache

    def _guard(self, i: int) -> Optional[str]:
        a = self.algorithm.first_enabled(Context(self.system, i))
        return a.name if a else None

    def refresh(self) -> None:
        for i in self.dirty:
            self.enabled[i] = self._guard(i)
        self.dirty.clear()

    def touch(self, j: int) -> None:
        """j's memory changed: j and its neighbors may see different guards."""
        self.dirty.add(j)
        self.dirty.update(self.system.neighbor_ids[j])

    # bookkeeping shared by both modes

    def violation(self, kind: str, **info) -> None:
        rec = {"kind": kind, "event": len(self.trace.events) - 1}
        rec.update(info)
        self.trace.violations.append(rec)

    def on_commit(self, i: int, action: str, rule: Optional[int], ops: list) -> None:
        tr = self.trace
        tr.events.append(TraceEvent(len(tr.events), i, action, rule, ops, self.rounds.round_index))
        if action == ERODE:
            tr.erosions += 1
            if rule is None:
                self.violation("erode-without-rule", amoebot=i)
            else:
                tr.rule_counts[rule] += 1
            if self.tracker is not None:
                self.tracker.remove(self.system.nodes[i])
                # report the erosion that breaks contractibility, not every later one
                ok = self.tracker.contractible()
                if not ok and not self.broken:
                    self.violation("safety", amoebot=i, betti=self.tracker.betti().as_tuple())
                self.broken = not ok
        elif action == DECLARE:
            tr.leaders = len(self.system.leaders())
            tr.leader = i

    def finish(self) -> Trace:
        tr = self.trace
        leaders = self.system.leaders()
        tr.leaders = len(leaders)
        tr.leader = leaders[0] if len(leaders) == 1 else None
        tr.rounds = self.rounds.round_index
        if len(leaders) != 1:
            self.violation("leader-count", leaders=leaders)
        if self.limits.check_consistency:
            bad = nbrcand_consistent(self.system)
            if bad:
                self.violation("nbrcand", pairs=bad[:10])
        return tr


# ---------------------------------------------------------------------------
# sequential


class _SequentialRun(_Run):
    mode = "sequential"

    def lookahead(self, i: int) -> int:
        """Pending members satisfied if i acts now (i itself plus those it disables)."""
        sysm = self.system
        ball = sysm.ball2(i)
        snap = sysm.snapshot(ball)
        act = self.algorithm.action(self.enabled[i])
        act.body(Context(sysm, i))
        pending = self.rounds.pending
        score = 1 if i in pending else 0
        for j in ball:
            if j != i and j in pending and self._guard(j) is None:
                score += 1
        sysm.restore(snap)
        return score

    def run(self) -> Trace:
        t0 = time.perf_counter()
        self.refresh()
        self.rounds = RoundAccountant(i for i in range(self.n) if self.enabled[i])
        budget = self.limits.actions_for(self.n)
        sysm = self.system
        while True:
            options = [i for i in range(self.n) if self.enabled[i]]
            if not options:
                if not sysm.leaders():
                    self.violation("no-progress", candidates=[i for i in range(self.n) if sysm.candidate[i] is not False])
                break
            if len(self.trace.events) >= budget:
                self.violation("action-budget", limit=budget)
                break
            i = self.policy.choose(options, self.view)
            if not self.enabled[i]:
                raise SchedulerError(f"policy chose disabled amoebot {i}")
            action = self.enabled[i]
            ctx = Context(sysm, i)
            rule = self.algorithm.rule_fired(ctx, action)
            ctx.log = []
            try:
                self.algorithm.action(action).body(ctx)
            except SafetyViolation as exc:
                self.violation("leader-uniqueness", amoebot=i, detail=str(exc))
                break
            for j in sysm.ball2(i):
                self.dirty.add(j)
            self.refresh()
            self.on_commit(i, action, rule, ctx.log)
            if self.limits.check_consistency:
                bad = nbrcand_consistent(sysm, sysm.neighbor_ids[i])
                if bad:
                    self.violation("nbrcand", pairs=bad)
            pend = self.rounds.pending
            self.rounds.advance(i, [j for j in pend if not self.enabled[j]], (j for j in range(self.n) if self.enabled[j]))
            self.trace.steps += 1
        self.trace.wall_time = time.perf_counter() - t0
        return self.finish()


def run_sequential(
    config: Configuration,
    policy: Optional[Policy] = None,
    limits: Optional[Limits] = None,
    algorithm: Algorithm = ALGORITHM,
) -> Trace:
    return _SequentialRun(config, policy or FixedPriority(), limits, algorithm).run()


# ---------------------------------------------------------------------------
# asynchronous


class _PlanContext(Context):
    """Context that reads live memory but buffers its own writes."""

    __slots__ = ("overlay", "effects", "_last_target")

    def __init__(self, system, me):
        super().__init__(system, me, [])
        self.overlay: dict = {}
        self.effects: list = []  # parallel to log: (target, var, index) or None
        self._last_target = me

    def _load(self, j, var, index):
        key = (j, var, index)
        if key in self.overlay:
            return self.overlay[key]
        return self.system.load(j, var, index)

    def _store(self, j, var, index, value):
        self.overlay[(j, var, index)] = value

    def _target(self, port):
        j = super()._target(port)
        self._last_target = j
        return j

    def read(self, port, var, index=None):
        value = super().read(port, var, index)
        self._sync_last(var, index)
        return value

    def write(self, port, var, value, index=None):
        super().write(port, var, value, index)
        self._sync_last(var, index)

    def connected(self, port):
        result = super().connected(port)
        if self.log is not None:
            self.effects.append(None)
        return result

    def move(self, port):
        super().move(port)
        if self.log is not None:
            self.effects.append(None)

    def _sync_last(self, var, index):
        if self.log is not None:
            self.effects.append((self._last_target, var, index))


@dataclass
class _Flight:
    amoebot: int
    locked: list[int]
    plan: list  # (op, effect)
    action: Optional[str]
    rule: Optional[int]
    pos: int = 0


class _AsyncRun(_Run):
    mode = "async"

    def __init__(self, *args):
        super().__init__(*args)
        self.holder: list[Optional[int]] = [None] * self.n
        self.flights: dict[int, _Flight] = {}
        self.blocked: set[int] = set()  # failed a lock since the last release

    def lookahead(self, i: int) -> int:
        return 0

    def _try_lock(self, i: int) -> bool:
        group = [i] + self.system.neighbor_ids[i]
        if any(self.holder[j] is not None for j in group):
            return False
        for j in group:
            self.holder[j] = i
        # the guard runs inside the lock step (it only reads locked memory);
        # body operations are interleaved one by one
        ctx = _PlanContext(self.system, i)
        ctx.log = None
        act = None
        for a in self.algorithm.actions:
            if a.guard(ctx):
                act = a
                break
        rule = self.algorithm.rule_fired(ctx, act.name) if act is not None else None
        ctx.log = []
        if act is not None:
            act.body(ctx)
        for op, eff in zip(ctx.log, ctx.effects):
            if eff is not None and eff[0] not in group:
                raise EngineError(f"amoebot {i} touched unlocked amoebot {eff[0]}")
        self.flights[i] = _Flight(i, group, list(zip(ctx.log, ctx.effects)), act.name if act else None, rule)
        return True

    def _step(self, f: _Flight) -> bool:
        """Apply the next operation; True once the flight has finished."""
        if f.pos < len(f.plan):
            op, eff = f.plan[f.pos]
            f.pos += 1
            if op[0] == WRITE:
                self.system.store(eff[0], eff[1], eff[2], op[3])
                self.touch(eff[0])
            elif op[0] == READ:
                live = self.system.load(*eff)
                if live != op[3]:
                    raise EngineError(f"isolation broken: amoebot {f.amoebot} read {op} but memory holds {live!r}")
            if f.pos < len(f.plan):
                return False
        for j in f.locked:
            self.holder[j] = None
        self.blocked.clear()
        del self.flights[f.amoebot]
        self.dirty.add(f.amoebot)
        return True

    def _active(self):
        return (j for j in range(self.n) if j in self.flights or self.enabled[j])

    def run(self) -> Trace:
        t0 = time.perf_counter()
        self.refresh()
        self.rounds = RoundAccountant(self._active())
        sysm = self.system
        max_steps = self.limits.steps_for(self.n, sysm.ports)
        budget = self.limits.lock_budget
        failures = 0
        tr = self.trace
        while True:
            self.refresh()
            options = sorted(
                set(self.flights) | {j for j in range(self.n) if self.enabled[j] and self.holder[j] is None and j not in self.blocked}
            )
            # an amoebot locked by someone else is never offered: its own
            # lock attempt cannot succeed until the holder releases
            if not options:
                if self.blocked:
                    raise SchedulerError("all enabled amoebots blocked with no action in flight")
                if not sysm.leaders():
                    self.violation("no-progress", candidates=[i for i in range(self.n) if sysm.candidate[i] is not False])
                break
            if tr.steps >= max_steps:
                self.violation("step-budget", limit=max_steps)
                break
            i = self.policy.choose(options, self.view)
            tr.steps += 1
            committed = None
            if i in self.flights:
                f = self.flights[i]
                try:
                    done = self._step(f)
                except SafetyViolation as exc:
                    self.violation("leader-uniqueness", amoebot=i, detail=str(exc))
                    break
                if done:
                    self.refresh()
                    if f.action is not None:
                        ops = [op for op, _ in f.plan]
                        self.on_commit(i, f.action, f.rule, ops)
                        committed = i
            elif self._try_lock(i):
                failures = 0
                f = self.flights[i]
                if f.pos >= len(f.plan):
                    self._step(f)
            else:
                tr.lock_failures += 1
                failures += 1
                self.blocked.add(i)
                if failures > budget:
                    raise LivelockError(f"{failures} consecutive failed lock attempts")
            self.refresh()
            pend = self.rounds.pending
            disabled = [j for j in pend if not self.enabled[j] and j not in self.flights]
            self.rounds.advance(committed, disabled, self._active())
        tr.wall_time = time.perf_counter() - t0
        if self.flights:
            self.violation("unfinished-actions", amoebots=sorted(self.flights))
        return self.finish()


def run_async(
    config: Configuration,
    interleaver: Optional[Policy] = None,
    limits: Optional[Limits] = None,
    algorithm: Algorithm = ALGORITHM,
) -> Trace:
    return _AsyncRun(config, interleaver or UniformRandom(0), limits, algorithm).run()


def run(config: Configuration, policy: Policy, mode: str = "sequential", limits: Optional[Limits] = None) -> Trace:
    if mode == "sequential":
        return run_sequential(config, policy, limits)
    if mode == "async":
        return run_async(config, policy, limits)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# framework conventions


@dataclass
class ConventionReport:
    validity: bool
    phase_structure: bool
    monotonicity: bool
    monotonicity_note: str
    failures: list[str] = field(default_factory=list)
    actions_checked: int = 0

    @property
    def passed(self) -> bool:
        return self.validity and self.phase_structure and self.monotonicity


def _walk_states(config: Configuration, seed: int):
    """Yield reachable systems along a random sequential run (fresh copies)."""
    rng = random.Random(seed)
    sysm = config.build_system()
    while True:
        yield sysm
        choices = [(i, a) for i in range(len(sysm)) for a in ALGORITHM.enabled_actions(Context(sysm, i))]
        if not choices:
            return
        i, a = rng.choice(choices)
        ALGORITHM.action(a).body(Context(sysm, i))


def check_conventions(
    algorithm: Algorithm,
    configs: Optional[Sequence[Configuration]] = None,
    seed: int = 0,
) -> ConventionReport:
    """Mechanical checks over operation logs of isolated action executions.

    Reachable states come from random runs of the reference algorithm; in
    every state each action whose guard holds is executed in isolation on a
    copy of the system.
    """
    if configs is None:
        from .generate import generate

        configs = [generate("blob", 12, seed, 3), generate("square-gadget", 8, seed, 3), generate("plane-disk", 7, seed, 2)]
    validity = phase = True
    failures: list[str] = []
    checked = 0
    saw_move = False
    for ci, config in enumerate(configs):
        for sysm in _walk_states(config, seed + ci):
            snap_all = sysm.snapshot(range(len(sysm)))
            for i in range(len(sysm)):
                for act in algorithm.actions:
                    gctx = Context(sysm, i, [])
                    try:
                        enabled = act.guard(gctx)
                    except EngineError as exc:
                        validity = False
                        failures.append(f"{act.name}: guard failed ({exc})")
                        continue
                    finally:
                        sysm.restore(snap_all)
                    if any(op[0] not in (READ, "Connected") for op in gctx.log):
                        validity = False
                        failures.append(f"{act.name}: guard performed {sorted({op[0] for op in gctx.log} - {READ, 'Connected'})}")
                    if not enabled:
                        continue
                    ctx = Context(sysm, i, [])
                    checked += 1
                    try:
                        act.body(ctx)
                    except EngineError as exc:
                        validity = False
                        failures.append(f"{act.name}: failed operation ({exc})")
                    finally:
                        sysm.restore(snap_all)
                    kinds = [op[0] for op in ctx.log]
                    if "Move" in kinds:
                        saw_move = True
                        # compute ops first, then at most one movement at the very end
                        if kinds.index("Move") != len(kinds) - 1:
                            phase = False
                            failures.append(f"{act.name}: movement before the end of the compute phase")
                    if getattr(algorithm, "stationary", True) and "Move" in kinds:
                        phase = False
                        failures.append(f"{act.name}: stationary algorithm issued Move")
    mono_note = "stationary algorithm: trivially monotonic" if not saw_move else "movement observed: not checked"
    dedup = sorted(set(failures))
    return ConventionReport(validity, phase, not saw_move, mono_note, dedup, checked)
