"""Random and structured connected, contractible configurations."""

from __future__ import annotations

import math
import random

from . import geometry as geo
from .engine import connected_masks
from .geometry import DIM2, DIM3, Vec
from .scheduler import Configuration
from .topology import EulerCounter, attach_keeps_contractible

SHAPES = ("blob", "line", "plane-disk", "sphere-ish", "square-gadget", "growth")


class GenerationError(RuntimeError):
    pass


class _Frontier:
    """Empty nodes adjacent to a growing set, with O(1) random choice."""

    def __init__(self, dim: int):
        self.dim = dim
        self.items: list[Vec] = []
        self.pos: dict[Vec, int] = {}

    def add(self, q: Vec) -> None:
        if q not in self.pos:
            self.pos[q] = len(self.items)
            self.items.append(q)

    def discard(self, q: Vec) -> None:
        k = self.pos.pop(q, None)
        if k is None:
            return
        last = self.items.pop()
        if k < len(self.items):
            self.items[k] = last
            self.pos[last] = k

    def grow(self, p: Vec, occupied) -> None:
        self.discard(p)
        for d in geo.offsets_for(self.dim):
            q = geo.add(p, d)
            if q not in occupied:
                self.add(q)


def satisfies_rule(p: Vec, occupied, dim: int) -> bool:
    """Does p satisfy an erosion rule w.r.t. ``occupied`` (p itself excluded)?"""
    offs = geo.offsets_for(dim)
    mask = 0
    present = []
    for k, d in enumerate(offs):
        if geo.add(p, d) in occupied:
            mask |= 1 << k
            present.append(d)
    count = len(present)
    if count == 1:
        return True
    if 2 <= count <= 5 and connected_masks(dim)[mask]:
        return True
    if count == 2 and geo.is_square_pair(*present):
        return geo.add(geo.add(p, present[0]), present[1]) in occupied
    return False


def _accrete(size: int, rng: random.Random, dim: int, need_rule: bool, budget: int) -> list[Vec]:
    start: Vec = (0, 0, 0)
    nodes = [start]
    counter = EulerCounter(dim, nodes)
    frontier = _Frontier(dim)
    frontier.grow(start, counter.nodes)
    attempts = 0
    while len(nodes) < size:
        if attempts > budget or not frontier.items:
            raise GenerationError(f"stuck at {len(nodes)} of {size} nodes")
        attempts += 1
        q = frontier.items[rng.randrange(len(frontier.items))]
        if need_rule and not satisfies_rule(q, counter.nodes, dim):
            continue
        if not attach_keeps_contractible(counter, q):
            continue
        counter.add(q)
        nodes.append(q)
        frontier.grow(q, counter.nodes)
    return nodes


def blob(size: int, rng: random.Random, dim: int) -> list[Vec]:
    # inverse erosion: each new node satisfies a rule with respect to the grown set
    return _accrete(size, rng, dim, True, 200 * size + 1000)


def growth(size: int, rng: random.Random, dim: int) -> list[Vec]:
    return _accrete(size, rng, dim, False, 200 * size + 1000)


def line(size: int, rng: random.Random, dim: int) -> list[Vec]:
    return [(i, -i, 0) for i in range(size)]


def plane_disk(size: int, rng: random.Random, dim: int) -> list[Vec]:
    """Hexagonal spiral in the plane x+y+z=0."""
    dirs = geo.PLANE_OFFSETS
    out: list[Vec] = [(0, 0, 0)]
    k = 1
    while len(out) < size:
        p = tuple(k * c for c in dirs[4])
        for d in dirs:
            for _ in range(k):
                out.append(p)
                p = geo.add(p, d)
        k += 1
    return out[:size]


def sphere_ish(size: int, rng: random.Random, dim: int) -> list[Vec]:
    """Nodes added in order of distance from the origin, ties broken randomly."""
    r = 1
    while True:
        pool = [
            (x, y, z)
            for x in range(-r, r + 1)
            for y in range(-r, r + 1)
            for z in range(-r, r + 1)
            if (x + y + z) % 2 == 0 and (dim == DIM3 or x + y + z == 0)
        ]
        if len(pool) >= 2 * size:
            break
        r += 1
    keys = {p: (p[0] ** 2 + p[1] ** 2 + p[2] ** 2, rng.random()) for p in pool}
    pool.sort(key=keys.__getitem__)
    start = pool[0]
    counter = EulerCounter(dim, [start])
    nodes = [start]
    rest = pool[1:]
    while len(nodes) < size:
        progressed = False
        skipped = []
        for q in rest:
            if len(nodes) < size and attach_keeps_contractible(counter, q):
                counter.add(q)
                nodes.append(q)
                progressed = True
            else:
                skipped.append(q)
        if not progressed:
            raise GenerationError(f"sphere-ish stuck at {len(nodes)} of {size}")
        rest = skipped
    return nodes


def square_gadget(size: int, rng: random.Random, dim: int) -> list[Vec]:
    """Square spiral in the layer z=0, whose first four nodes form a square."""
    if dim != DIM3:
        raise GenerationError("square gadgets exist only in 3D")
    out = []
    u = v = 0
    step, heading = 1, 0
    moves = ((1, 0), (0, 1), (-1, 0), (0, -1))
    out.append((u, v))
    while len(out) < size:
        for _ in range(2):
            du, dv = moves[heading % 4]
            for _ in range(step):
                u, v = u + du, v + dv
                out.append((u, v))
            heading += 1
        step += 1
    return [(a + b, a - b, 0) for a, b in out[:size]]


_BUILDERS = {
    "blob": blob,
    "growth": growth,
    "line": line,
    "plane-disk": plane_disk,
    "sphere-ish": sphere_ish,
    "square-gadget": square_gadget,
}


def generate(shape: str, size: int, seed: int = 0, dim: int = DIM3) -> Configuration:
    """A connected, contractible configuration with random orientations.

    The seed drives both the shape and the orientation assignment.
    """
    if size < 1:
        raise ValueError("size must be at least 1")
    if dim not in (DIM2, DIM3):
        raise ValueError(f"dim must be 2 or 3, not {dim}")
    try:
        builder = _BUILDERS[shape]
    except KeyError:
        raise ValueError(f"unknown shape {shape!r}; choose from {', '.join(SHAPES)}") from None
    rng = random.Random(f"{shape}:{size}:{seed}:{dim}")
    nodes = builder(size, rng, dim)
    return Configuration(dim, nodes, None, seed)


def random_instance(rng: random.Random, dim: int, max_size: int, shapes=("blob", "growth", "sphere-ish", "plane-disk", "line")) -> Configuration:
    shape = rng.choice([s for s in shapes if dim == DIM3 or s != "square-gadget"])
    # sizes skewed towards small systems
    size = max(1, min(max_size, int(math.exp(rng.uniform(0, math.log(max_size + 1))))))
    return generate(shape, size, rng.randrange(2**32), dim)
