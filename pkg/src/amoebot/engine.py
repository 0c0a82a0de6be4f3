"""Amoebot state machine for leader election by erosion.

Each amoebot keeps ``candidate`` (None/True/False), ``leader`` and one
``nbrcand`` flag per port in public memory.  Actions are guard/body pairs
that touch memory only through the Connected/Read/Write operations of a
:class:`Context`, which also logs every operation.

Erosion rules are evaluated in the amoebot's local frame: port k stands for
the reference offset k, and adjacency/perpendicularity of offsets does not
depend on orientation.  Only the square rule needs a neighbor's port labels,
obtained by translating through the neighbor's orientation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

from . import geometry as geo
from .geometry import Orientation, Vec

SETUP = "Setup"
ERODE = "Erode"
DECLARE = "DeclareLeader"

CONNECTED = "Connected"
READ = "Read"
WRITE = "Write"
MOVE = "Move"

# public memory variables
CANDIDATE = "candidate"
LEADER = "leader"
NBRCAND = "nbrcand"

Op = tuple  # (operation, port or None, variable, value)


class EngineError(RuntimeError):
    """Internal inconsistency; the simulation cannot continue."""


class OperationFailed(EngineError):
    """An operation addressed a port with no neighbor."""


class SafetyViolation(EngineError):
    pass


def var_name(var: str, index: Optional[int]) -> str:
    return var if index is None else f"{var}({index})"


# ---------------------------------------------------------------------------
# local geometry tables


@lru_cache(maxsize=None)
def connected_masks(dim: int) -> tuple[bool, ...]:
    """connected_masks(dim)[mask]: do the offsets in ``mask`` induce a connected subgraph?"""
    offs = geo.offsets_for(dim)
    out = []
    for mask in range(1 << len(offs)):
        chosen = [offs[k] for k in range(len(offs)) if mask >> k & 1]
        out.append(geo.offsets_connected(chosen))
    return tuple(out)


@lru_cache(maxsize=None)
def square_ports(dim: int) -> frozenset[tuple[int, int]]:
    offs = geo.offsets_for(dim)
    return frozenset(
        (i, j)
        for i in range(len(offs))
        for j in range(len(offs))
        if i != j and geo.is_square_pair(offs[i], offs[j])
    )


@lru_cache(maxsize=None)
def translation_table(dim: int) -> dict[tuple[int, int], tuple[int, ...]]:
    """(my orientation id, neighbor orientation id) -> my port -> neighbor port."""
    os = geo.orientations_for(dim)
    k = geo.port_count(dim)
    return {
        (a, b): tuple(geo.translate_port(os[a], os[b], p, dim) for p in range(k))
        for a in range(len(os))
        for b in range(len(os))
    }


# ---------------------------------------------------------------------------
# system state


class AmoebotSystem:
    """Positions, orientations, port wiring and public memories of a system.

    Amoebot ids are list indices; they exist for the simulator only and are
    never visible to guards or action bodies.
    """

    def __init__(self, nodes: Sequence[Sequence[int]], orientations: Sequence[Orientation], dim: int = geo.DIM3):
        if len(nodes) != len(orientations):
            raise ValueError("one orientation per amoebot required")
        self.dim = dim
        self.nodes: list[Vec] = [geo.check_node(p, dim) for p in nodes]
        self.index = {p: i for i, p in enumerate(self.nodes)}
        if len(self.index) != len(self.nodes):
            raise ValueError("duplicate nodes in configuration")
        allowed = geo.orientations_for(dim)
        oid = {o: i for i, o in enumerate(allowed)}
        try:
            self.orient_id = [oid[o] for o in orientations]
        except KeyError as exc:
            raise ValueError(f"orientation {exc.args[0]} not allowed in {dim}D") from None
        self.orientations = list(orientations)
        self.ports = geo.port_count(dim)
        n = len(self.nodes)
        self.nbr: list[list[int]] = []
        self.back: list[list[int]] = []
        for i, p in enumerate(self.nodes):
            row, brow = [], []
            for k in range(self.ports):
                q = geo.add(p, geo.offset_of(self.orientations[i], k, dim))
                j = self.index.get(q, -1)
                row.append(j)
                brow.append(geo.back_port(self.orientations[i], self.orientations[j], k, dim) if j >= 0 else -1)
            self.nbr.append(row)
            self.back.append(brow)
        self.neighbor_ids = [[j for j in row if j >= 0] for row in self.nbr]
        self._trans = translation_table(dim)
        self.candidate: list[Optional[bool]] = [None] * n
        self.leader = [False] * n
        self.nbrcand = [[False] * self.ports for _ in range(n)]

    def __len__(self) -> int:
        return len(self.nodes)

    # memory -----------------------------------------------------------------

    def load(self, i: int, var: str, index: Optional[int]):
        if var == CANDIDATE:
            return self.candidate[i]
        if var == LEADER:
            return self.leader[i]
        if var == NBRCAND:
            return self.nbrcand[i][index]
        raise EngineError(f"unknown variable {var!r}")

    def store(self, i: int, var: str, index: Optional[int], value) -> None:
        if var == CANDIDATE:
            self.candidate[i] = value
        elif var == LEADER:
            if self.leader[i] and not value:
                raise SafetyViolation(f"amoebot {i} revoked leadership")
            if value and not self.leader[i] and any(self.leader):
                raise SafetyViolation(f"second leader {i}")
            self.leader[i] = value
        elif var == NBRCAND:
            self.nbrcand[i][index] = value
        else:
            raise EngineError(f"unknown variable {var!r}")

    def snapshot(self, ids) -> list:
        return [(i, self.candidate[i], self.leader[i], list(self.nbrcand[i])) for i in ids]

    def restore(self, snap) -> None:
        for i, cand, lead, nc in snap:
            self.candidate[i] = cand
            self.leader[i] = lead
            self.nbrcand[i] = nc

    def state_signature(self) -> tuple:
        return (tuple(self.candidate), tuple(self.leader), tuple(map(tuple, self.nbrcand)))

    # structure --------------------------------------------------------------

    def translate(self, i: int, port: int, my_port: int) -> int:
        """Label used by the neighbor at ``port`` for my direction ``my_port``."""
        j = self.nbr[i][port]
        return self._trans[(self.orient_id[i], self.orient_id[j])][my_port]

    def ball2(self, i: int) -> set[int]:
        out = {i}
        for j in self.neighbor_ids[i]:
            out.add(j)
            out.update(self.neighbor_ids[j])
        return out

    def leaders(self) -> list[int]:
        return [i for i, lead in enumerate(self.leader) if lead]


class Context:
    """Operation interface of one amoebot; logs operations when ``log`` is a list."""

    __slots__ = ("system", "me", "log")

    def __init__(self, system: AmoebotSystem, me: int, log: Optional[list] = None):
        self.system = system
        self.me = me
        self.log = log

    @property
    def ports(self) -> range:
        return range(self.system.ports)

    def _target(self, port: Optional[int]) -> int:
        if port is None:
            return self.me
        j = self.system.nbr[self.me][port]
        if j < 0:
            raise OperationFailed(f"amoebot {self.me}: no neighbor on port {port}")
        return j

    def _load(self, j: int, var: str, index: Optional[int]):
        return self.system.load(j, var, index)

    def _store(self, j: int, var: str, index: Optional[int], value) -> None:
        self.system.store(j, var, index, value)

    def connected(self, port: int) -> bool:
        result = self.system.nbr[self.me][port] >= 0
        if self.log is not None:
            self.log.append((CONNECTED, port, None, result))
        return result

    def read(self, port: Optional[int], var: str, index: Optional[int] = None):
        value = self._load(self._target(port), var, index)
        if self.log is not None:
            self.log.append((READ, port, var_name(var, index), value))
        return value

    def write(self, port: Optional[int], var: str, value, index: Optional[int] = None) -> None:
        j = self._target(port)
        if self.log is not None:
            self.log.append((WRITE, port, var_name(var, index), value))
        self._store(j, var, index, value)

    def move(self, port: int) -> None:
        # movement is outside this simulator; the operation is only recorded
        if self.log is not None:
            self.log.append((MOVE, port, None, None))

    # knowledge the model grants about neighbors (no operation involved)

    def neighbor_port(self, port: int) -> int:
        """The neighbor's port label that connects back through ``port``."""
        return self.system.back[self.me][port]

    def translate(self, port: int, my_port: int) -> int:
        return self.system.translate(self.me, port, my_port)


# ---------------------------------------------------------------------------
# the erosion algorithm


@dataclass(frozen=True)
class GuardedAction:
    name: str
    guard: Callable[[Context], bool]
    body: Callable[[Context], None]


def candidate_ports(ctx: Context) -> list[int]:
    return [p for p in ctx.ports if ctx.connected(p) and ctx.read(p, CANDIDATE) is True]


def can_erode(ctx: Context, cand_ports: Optional[list[int]] = None) -> int:
    """Which erosion rule holds (1, 2 or 3), or 0 if none."""
    if cand_ports is None:
        cand_ports = candidate_ports(ctx)
    count = len(cand_ports)
    if count == 1:
        return 1
    dim = ctx.system.dim
    if 2 <= count <= 5:
        mask = 0
        for p in cand_ports:
            mask |= 1 << p
        if connected_masks(dim)[mask]:
            return 2
    if count == 2:
        pb, pd = cand_ports
        if (pb, pd) in square_ports(dim):
            # the catty-corner node sits at my direction pd as seen from B,
            # and at my direction pb as seen from D
            if ctx.read(pb, NBRCAND, ctx.translate(pb, pd)):
                return 3
            if ctx.read(pd, NBRCAND, ctx.translate(pd, pb)):
                return 3
    return 0


def guard_setup(ctx: Context) -> bool:
    return ctx.read(None, CANDIDATE) is None


def exec_setup(ctx: Context) -> None:
    ctx.write(None, CANDIDATE, True)
    for p in ctx.ports:
        if ctx.connected(p):
            ctx.write(p, NBRCAND, True, ctx.neighbor_port(p))


def guard_erode(ctx: Context) -> bool:
    if ctx.read(None, CANDIDATE) is not True:
        return False
    cand = []
    for p in ctx.ports:
        if ctx.connected(p):
            c = ctx.read(p, CANDIDATE)
            if c is None:
                return False
            if c:
                cand.append(p)
    return can_erode(ctx, cand) > 0


def exec_erode(ctx: Context) -> None:
    ctx.write(None, CANDIDATE, False)
    for p in ctx.ports:
        if ctx.connected(p):
            ctx.write(p, NBRCAND, False, ctx.neighbor_port(p))


def guard_declare(ctx: Context) -> bool:
    # the leader test makes the final state quiescent
    if ctx.read(None, CANDIDATE) is not True or ctx.read(None, LEADER):
        return False
    for p in ctx.ports:
        if ctx.connected(p) and ctx.read(p, CANDIDATE) is not False:
            return False
    return True


def exec_declare(ctx: Context) -> None:
    ctx.write(None, LEADER, True)


class Algorithm:
    """An ordered collection of guarded actions."""

    name = "algorithm"
    stationary = True

    def __init__(self, actions: Sequence[GuardedAction]):
        self.actions = tuple(actions)

    def action(self, name: str) -> GuardedAction:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def enabled_actions(self, ctx: Context) -> list[str]:
        return [a.name for a in self.actions if a.guard(ctx)]

    def first_enabled(self, ctx: Context) -> Optional[GuardedAction]:
        for a in self.actions:
            if a.guard(ctx):
                return a
        return None

    def rule_fired(self, ctx: Context, action: str) -> Optional[int]:
        """Trace annotation: which erosion rule enabled an Erode."""
        if action != ERODE:
            return None
        return can_erode(ctx) or None


class ErosionLeaderElection(Algorithm):
    name = "erosion"

    def __init__(self):
        super().__init__(
            [
                GuardedAction(SETUP, guard_setup, exec_setup),
                GuardedAction(ERODE, guard_erode, exec_erode),
                GuardedAction(DECLARE, guard_declare, exec_declare),
            ]
        )


ALGORITHM = ErosionLeaderElection()


def enabled_actions(system: AmoebotSystem, i: int, algorithm: Algorithm = ALGORITHM) -> list[str]:
    return algorithm.enabled_actions(Context(system, i))


def execute(system: AmoebotSystem, i: int, action: str, algorithm: Algorithm = ALGORITHM) -> tuple[list[Op], Optional[int]]:
    """Run an action of amoebot i atomically; returns (operation log, rule fired)."""
    ctx = Context(system, i)
    act = algorithm.action(action)
    if not act.guard(ctx):
        raise EngineError(f"{action} is not enabled for amoebot {i}")
    rule = algorithm.rule_fired(ctx, action)
    ctx.log = []
    act.body(ctx)
    return ctx.log, rule


def nbrcand_consistent(system: AmoebotSystem, ids=None) -> list[tuple[int, int]]:
    """(amoebot, port) pairs violating nbrcand[p] == (neighbor is a candidate)."""
    bad = []
    for i in range(len(system)) if ids is None else ids:
        for p, j in enumerate(system.nbr[i]):
            expected = j >= 0 and system.candidate[j] is True
            if system.nbrcand[i][p] != expected:
                bad.append((i, p))
    return bad
