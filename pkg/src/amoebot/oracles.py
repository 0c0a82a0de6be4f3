"""Independent checks of the geometric facts the algorithm relies on.

* neighbor unions of at most five cells have no holes (exhaustive),
* vertex external angles of six to eleven neighbors (exhaustive),
* sampled progress: some amoebot of a contractible system can erode,
* exhaustive round counts over every sequential schedule of tiny systems,
* concrete 3D counterexamples for safety and progress.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Sequence

from . import geometry as geo
from . import topology
from .engine import ALGORITHM, Context, AmoebotSystem
from .geometry import DIM2, DIM3, REFERENCE_OFFSETS, Vec


def _subsets(sizes) -> list[int]:
    """12-bit masks with the given popcounts, in increasing mask order."""
    return [m for m in range(1 << 12) if bin(m).count("1") in sizes]


def _offsets(mask: int) -> list[Vec]:
    return [REFERENCE_OFFSETS[k] for k in range(12) if mask >> k & 1]


# ---------------------------------------------------------------------------
# hole-free small neighborhoods


@dataclass
class HoleReport:
    checked: int
    by_size: dict[int, int]
    violators: list[dict]
    checksum: int  # sum of visited masks
    glued_violators: int  # audit: same check with pinch vertices glued
    negative_control: dict
    consistency_failures: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violators and not self.consistency_failures and self.negative_control["b1"] > 0


def verify_small_neighborhoods_hole_free(max_size: int = 5, audit_glued: bool = True) -> HoleReport:
    by_size: dict[int, int] = {}
    violators = []
    inconsistent = []
    glued = 0
    checksum = 0
    for mask in _subsets(range(1, max_size + 1)):
        cells = _offsets(mask)
        by_size[len(cells)] = by_size.get(len(cells), 0) + 1
        checksum += mask
        cx = topology.build_dual_complex(cells, DIM3)
        b = topology.betti(cx)
        genera = topology.boundary_genus(cx)
        hole_free = b.b1 == 0 and b.b2 == 0
        if not hole_free or any(genera):
            violators.append({"mask": mask, "betti": b.as_tuple(), "genus": genera})
        if hole_free != (not any(genera)):
            inconsistent.append(mask)
        if audit_glued:
            bg = topology.betti(topology.build_dual_complex(cells, DIM3, glue_pinches=True))
            glued += bg.b1 > 0 or bg.b2 > 0
    # in-plane hexagon around the empty center: a solid torus
    ring = list(geo.PLANE_OFFSETS)
    cx = topology.build_dual_complex(ring, DIM3)
    rb = topology.betti(cx)
    control = {"cells": ring, "b1": rb.b1, "genus": topology.boundary_genus(cx)}
    return HoleReport(sum(by_size.values()), by_size, violators, checksum, glued, control, inconsistent)


# ---------------------------------------------------------------------------
# vertex angles


@dataclass(frozen=True)
class AngleReport:
    mask: int
    triangles: int
    k: int  # external angle = 2*pi - k*pi/3
    vertex_classified: bool
    reason: Optional[str] = None

    @property
    def angle_positive(self) -> bool:
        return self.k <= 5


@dataclass
class VertexAngleReport:
    checked: int
    by_size: dict[int, int]
    classified: int
    excluded: list[AngleReport]
    failures: list[AngleReport]
    min_k: Optional[int]

    @property
    def passed(self) -> bool:
        return not self.failures

    def excluded_by_reason(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.excluded:
            out[r.reason] = out.get(r.reason, 0) + 1
        return out


def vertex_angle(mask: int) -> AngleReport:
    """Surface triangles at v for an occupied neighbor set, and the filter verdict.

    Triangles {v, x, y} need x, y adjacent.  v is a polyhedron vertex when
    those triangles close up into cycles around v: every occupied neighbor
    lies on exactly two of them.
    """
    ids = [k for k in range(12) if mask >> k & 1]
    deg = {k: 0 for k in ids}
    triangles = 0
    for a, b in itertools.combinations(ids, 2):
        if geo.offsets_adjacent(REFERENCE_OFFSETS[a], REFERENCE_OFFSETS[b]):
            triangles += 1
            deg[a] += 1
            deg[b] += 1
    reason = None
    if triangles == 0:
        reason = "no-triangles"
    elif any(d == 0 for d in deg.values()):
        reason = "dangling"
    elif any(d != 2 for d in deg.values()):
        reason = "open-fan"
    return AngleReport(mask, triangles, triangles, reason is None, reason)


def verify_vertex_angles(sizes: Sequence[int] = range(6, 12)) -> VertexAngleReport:
    by_size: dict[int, int] = {}
    excluded, failures = [], []
    classified = 0
    min_k = None
    for mask in _subsets(set(sizes)):
        size = bin(mask).count("1")
        by_size[size] = by_size.get(size, 0) + 1
        r = vertex_angle(mask)
        if not r.vertex_classified:
            excluded.append(r)
            continue
        classified += 1
        min_k = r.k if min_k is None else min(min_k, r.k)
        if r.angle_positive:
            failures.append(r)
    return VertexAngleReport(sum(by_size.values()), by_size, classified, excluded, failures, min_k)


# ---------------------------------------------------------------------------
# progress sampling


def erodable(nodes: Sequence[Vec], dim: int) -> list[int]:
    """Indices of amoebots whose Erode guard holds when everyone is a candidate."""
    sysm = AmoebotSystem(nodes, [geo.IDENTITY] * len(nodes), dim)
    for i in range(len(sysm)):
        sysm.candidate[i] = True
        sysm.nbrcand[i] = [j >= 0 for j in sysm.nbr[i]]
    erode = ALGORITHM.action("Erode")
    return [i for i in range(len(sysm)) if erode.guard(Context(sysm, i))]


@dataclass
class ProgressReport:
    samples: int
    counterexamples: list[dict]
    skipped: list[dict]
    by_shape: dict[str, int]

    @property
    def passed(self) -> bool:
        return not self.counterexamples


PROGRESS_SHAPES = ("blob", "growth", "sphere-ish", "plane-disk", "line", "square-gadget")


def sample_progress_lemma(
    n: int,
    size_range: tuple[int, int] = (2, 200),
    seed: int = 0,
    dims: Sequence[int] = (DIM2, DIM3),
    shapes: Sequence[str] = PROGRESS_SHAPES,
) -> ProgressReport:
    from .generate import GenerationError, generate

    rng = random.Random(seed)
    lo, hi = size_range
    counter, skipped, by_shape = [], [], {}
    for _ in range(n):
        dim = rng.choice(list(dims))
        shape = rng.choice([s for s in shapes if dim == DIM3 or s != "square-gadget"])
        size = rng.randint(max(lo, 2), hi)
        s = rng.randrange(2**32)
        try:
            config = generate(shape, size, s, dim)
        except GenerationError as exc:
            skipped.append({"shape": shape, "size": size, "seed": s, "dim": dim, "error": str(exc)})
            continue
        by_shape[shape] = by_shape.get(shape, 0) + 1
        if not erodable(config.nodes, dim):
            counter.append({"shape": shape, "size": size, "seed": s, "dim": dim})
    return ProgressReport(n, counter, skipped, by_shape)


# ---------------------------------------------------------------------------
# exhaustive schedules


def _rounds_from_history(enabled_sets: list[frozenset], actors: list[int]) -> int:
    """Completed rounds, straight from the definition.

    ``enabled_sets[t]`` holds the amoebots enabled after t actions and
    ``actors[t]`` is who executed action t+1.  Round i starts at t_i with
    E_i = enabled_sets[t_i]; it completes at the first t whose prefix has
    every member either acting or observed disabled.
    """
    rounds = 0
    start = 0
    while enabled_sets[start]:
        owed = set(enabled_sets[start])
        t = start
        while owed:
            if t >= len(actors):
                return rounds  # unfinished round
            owed.discard(actors[t])
            t += 1
            owed -= owed - enabled_sets[t]
        rounds += 1
        start = t
    return rounds


@dataclass
class ScheduleSummary:
    schedules: int
    rounds: dict[int, int]
    erosions: set[int]
    leaders: set[int]

    @property
    def max_rounds(self) -> int:
        return max(self.rounds)


def enumerate_schedules(nodes: Sequence[Vec], dim: int = DIM3, limit: int = 1_000_000) -> ScheduleSummary:
    """Every sequential schedule of a small system, with its round count."""
    sysm = AmoebotSystem(nodes, [geo.IDENTITY] * len(nodes), dim)
    n = len(sysm)
    out = ScheduleSummary(0, {}, set(), set())

    def enabled():
        return {i: a for i in range(n) for a in ALGORITHM.enabled_actions(Context(sysm, i))}

    def walk(history, actors, erosions):
        en = enabled()
        history.append(frozenset(en))
        if not en:
            out.schedules += 1
            if out.schedules > limit:
                raise RuntimeError("too many schedules")
            r = _rounds_from_history(history, actors)
            out.rounds[r] = out.rounds.get(r, 0) + 1
            out.erosions.add(erosions)
            out.leaders.add(len(sysm.leaders()))
        for i, a in sorted(en.items()):
            snap = sysm.snapshot(range(n))
            ALGORITHM.action(a).body(Context(sysm, i))
            actors.append(i)
            walk(history, actors, erosions + (a == "Erode"))
            actors.pop()
            sysm.restore(snap)
        history.pop()

    walk([], [], 0)
    return out


# ---------------------------------------------------------------------------
# 3D counterexamples

# A satisfies the connected-neighbors rule (five neighbors in a path); the
# path's ends both touch (0,0,2), so removing A leaves a ring of six cells.
SAFETY_COUNTEREXAMPLE: tuple[Vec, ...] = (
    (0, 0, 0),
    (-1, 0, 1), (-1, 1, 0), (0, 1, -1), (1, 1, 0), (1, 0, 1),
    (0, 0, 2),
)


def stuck_ball(radius2: int = 10) -> list[Vec]:
    """FCC nodes within squared distance ``radius2`` of the origin."""
    r = int(radius2 ** 0.5) + 1
    return sorted(
        (x, y, z)
        for x in range(-r, r + 1)
        for y in range(-r, r + 1)
        for z in range(-r, r + 1)
        if (x + y + z) % 2 == 0 and x * x + y * y + z * z <= radius2
    )


@dataclass
class CounterexampleReport:
    safety_before: tuple
    safety_after: tuple
    safety_rule_holds: bool
    ball_size: int
    ball_contractible: bool
    ball_erodable: int
    ball_min_degree: int

    @property
    def safety_broken(self) -> bool:
        return self.safety_before == (1, 0, 0) and self.safety_after[1] > 0 and self.safety_rule_holds

    @property
    def progress_broken(self) -> bool:
        return self.ball_contractible and self.ball_erodable == 0


def check_counterexamples() -> CounterexampleReport:
    s = list(SAFETY_COUNTEREXAMPLE)
    before = topology.betti(topology.build_dual_complex(s, DIM3)).as_tuple()
    after = topology.betti(topology.build_dual_complex(s[1:], DIM3)).as_tuple()
    rule = 0 in erodable(s, DIM3)
    ball = stuck_ball()
    occupied = set(ball)
    degree = min(sum(geo.add(p, d) in occupied for d in REFERENCE_OFFSETS) for p in ball)
    contractible = topology.is_connected(ball, DIM3) and topology.is_contractible(ball, DIM3)
    return CounterexampleReport(before, after, rule, len(ball), contractible, len(erodable(ball, DIM3)), degree)


def expected_subset_count(sizes) -> int:
    return sum(comb(12, k) for k in sizes)
