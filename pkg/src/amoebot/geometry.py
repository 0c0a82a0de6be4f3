"""Triangular and face-centered cubic lattice geometry.

FCC nodes are integer triples with an even coordinate sum; the 12 neighbor
offsets are the signed permutations of (1, 1, 0).  The 2D triangular lattice
is the plane x + y + z = 0 of the same coordinate system.

Orientations are signed permutation matrices mapping an amoebot's local frame
to the global one.  In 3D they are the 24 proper rotations of the cube; in 2D
they are the 12 symmetries of the home plane (6 directions x 2 chiralities).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Iterable, Sequence

Vec = tuple[int, int, int]

DIM2 = 2
DIM3 = 3

# Home-plane offsets of the (1,1,1) view in clockwise order seen from +(1,1,1),
# then the three "top" offsets, then the three "bottom" offsets, also clockwise.
REFERENCE_OFFSETS: tuple[Vec, ...] = (
    (1, -1, 0), (0, -1, 1), (-1, 0, 1), (-1, 1, 0), (0, 1, -1), (1, 0, -1),
    (1, 1, 0), (1, 0, 1), (0, 1, 1),
    (-1, -1, 0), (-1, 0, -1), (0, -1, -1),
)
PLANE_OFFSETS: tuple[Vec, ...] = REFERENCE_OFFSETS[:6]

_OFFSET_INDEX = {d: i for i, d in enumerate(REFERENCE_OFFSETS)}
OFFSET_SET = frozenset(REFERENCE_OFFSETS)

# Representatives of the four triangular-plane families (views).
VIEW_NORMALS: tuple[Vec, ...] = ((1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1))


class GeometryError(ValueError):
    """Malformed lattice input (parity, plane membership, unknown offset)."""


def add(a: Sequence[int], b: Sequence[int]) -> Vec:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def sub(a: Sequence[int], b: Sequence[int]) -> Vec:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def neg(a: Sequence[int]) -> Vec:
    return (-a[0], -a[1], -a[2])


def dot(a: Sequence[int], b: Sequence[int]) -> int:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross(a: Sequence[int], b: Sequence[int]) -> Vec:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def is_offset(d: Sequence[int]) -> bool:
    return tuple(d) in OFFSET_SET


def offset_index(d: Sequence[int]) -> int:
    try:
        return _OFFSET_INDEX[tuple(d)]
    except KeyError:
        raise GeometryError(f"{tuple(d)} is not an FCC neighbor offset") from None


def offsets_adjacent(a: Sequence[int], b: Sequence[int]) -> bool:
    """Two neighbor offsets are adjacent iff the nodes they reach are neighbors."""
    return is_offset(sub(a, b))


def offsets_for(dim: int) -> tuple[Vec, ...]:
    if dim == DIM3:
        return REFERENCE_OFFSETS
    if dim == DIM2:
        return PLANE_OFFSETS
    raise GeometryError(f"unsupported dimension {dim!r}")


def check_node(p: Sequence[int], dim: int = DIM3) -> Vec:
    """Validate a lattice node and return it as a tuple."""
    if len(p) != 3:
        raise GeometryError(f"node {p!r} is not a coordinate triple")
    q = (int(p[0]), int(p[1]), int(p[2]))
    s = q[0] + q[1] + q[2]
    if s % 2:
        raise GeometryError(f"node {q} has odd coordinate sum")
    if dim == DIM2 and s != 0:
        raise GeometryError(f"node {q} is off the 2D home plane x+y+z=0")
    return q


def neighbors(p: Sequence[int], dim: int = DIM3) -> list[Vec]:
    p = check_node(p, dim)
    return [add(p, d) for d in offsets_for(dim)]


def offset_graph_edges(offsets: Iterable[Vec] = REFERENCE_OFFSETS) -> list[tuple[int, int]]:
    """Index pairs of adjacent offsets (the cuboctahedron graph for all 12)."""
    offs = list(offsets)
    return [(i, j) for i, j in combinations(range(len(offs)), 2) if offsets_adjacent(offs[i], offs[j])]


def offsets_connected(offsets: Sequence[Vec]) -> bool:
    """True iff the offsets induce a connected subgraph of the offset graph."""
    if not offsets:
        return False
    rest = list(offsets[1:])
    frontier = [offsets[0]]
    while frontier:
        d = frontier.pop()
        keep = []
        for e in rest:
            if offsets_adjacent(d, e):
                frontier.append(e)
            else:
                keep.append(e)
        rest = keep
    return not rest


def is_square_pair(a: Sequence[int], b: Sequence[int]) -> bool:
    """Perpendicular offsets spanning a chordless 4-cycle through the origin."""
    return dot(a, b) == 0 and not is_offset(add(a, b))


@dataclass(frozen=True)
class Square:
    a: Vec
    b: Vec
    catty: Vec


def squares_through(p: Sequence[int]) -> list[Square]:
    """All chordless squares having p as one diagonal corner.

    p + a and p + b are the two side corners, catty = p + a + b is the
    corner diagonally opposite p.
    """
    p = check_node(p)
    out = []
    for a, b in combinations(REFERENCE_OFFSETS, 2):
        if is_square_pair(a, b):
            out.append(Square(a, b, add(p, add(a, b))))
    return out


# ---------------------------------------------------------------------------
# Orientations


@dataclass(frozen=True)
class Orientation:
    """Signed permutation matrix; ``cols[j]`` is the global image of local axis j."""

    cols: tuple[Vec, Vec, Vec]

    def apply(self, v: Sequence[int]) -> Vec:
        c0, c1, c2 = self.cols
        return (
            v[0] * c0[0] + v[1] * c1[0] + v[2] * c2[0],
            v[0] * c0[1] + v[1] * c1[1] + v[2] * c2[1],
            v[0] * c0[2] + v[1] * c1[2] + v[2] * c2[2],
        )

    def apply_inverse(self, v: Sequence[int]) -> Vec:
        # orthogonal matrix: inverse is the transpose
        return (dot(self.cols[0], v), dot(self.cols[1], v), dot(self.cols[2], v))

    def compose(self, other: Orientation) -> Orientation:
        """self after other."""
        return Orientation(tuple(self.apply(c) for c in other.cols))  # type: ignore[arg-type]

    def inverse(self) -> Orientation:
        rows = tuple(
            (self.cols[0][i], self.cols[1][i], self.cols[2][i]) for i in range(3)
        )
        return Orientation(rows)  # type: ignore[arg-type]

    @property
    def det(self) -> int:
        return dot(self.cols[0], cross(self.cols[1], self.cols[2]))

    @property
    def name(self) -> str:
        parts = []
        for c in self.cols:
            axis = next(i for i in range(3) if c[i])
            parts.append(("+" if c[axis] > 0 else "-") + "xyz"[axis])
        return "".join(parts)

    @classmethod
    def from_name(cls, name: str) -> Orientation:
        if len(name) != 6:
            raise GeometryError(f"bad orientation name {name!r}")
        cols = []
        for k in range(3):
            sign, axis = name[2 * k], name[2 * k + 1]
            if sign not in "+-" or axis not in "xyz":
                raise GeometryError(f"bad orientation name {name!r}")
            c = [0, 0, 0]
            c["xyz".index(axis)] = 1 if sign == "+" else -1
            cols.append(tuple(c))
        o = cls(tuple(cols))  # type: ignore[arg-type]
        if sorted(next(i for i in range(3) if c[i]) for c in o.cols) != [0, 1, 2]:
            raise GeometryError(f"orientation {name!r} is not a permutation")
        return o

    def __repr__(self) -> str:
        return f"Orientation({self.name})"


IDENTITY = Orientation(((1, 0, 0), (0, 1, 0), (0, 0, 1)))


def _signed_permutations() -> list[Orientation]:
    out = []
    for perm in permutations(range(3)):
        for signs in product((1, -1), repeat=3):
            cols = []
            for j in range(3):
                c = [0, 0, 0]
                c[perm[j]] = signs[j]
                cols.append(tuple(c))
            out.append(Orientation(tuple(cols)))  # type: ignore[arg-type]
    return out


def _canonical_order(os: list[Orientation]) -> tuple[Orientation, ...]:
    # identity first, the rest by name for a stable, documented numbering
    rest = sorted((o for o in os if o != IDENTITY), key=lambda o: o.name)
    return (IDENTITY, *rest)


ORIENTATIONS_3D: tuple[Orientation, ...] = _canonical_order(
    [o for o in _signed_permutations() if o.det == 1]
)
ORIENTATIONS_2D: tuple[Orientation, ...] = _canonical_order(
    [o for o in _signed_permutations() if o.apply((1, 1, 1)) in ((1, 1, 1), (-1, -1, -1))]
)


def orientations_for(dim: int) -> tuple[Orientation, ...]:
    if dim == DIM3:
        return ORIENTATIONS_3D
    if dim == DIM2:
        return ORIENTATIONS_2D
    raise GeometryError(f"unsupported dimension {dim!r}")


def port_count(dim: int) -> int:
    return len(offsets_for(dim))


@lru_cache(maxsize=None)
def _port_table(o: Orientation, dim: int) -> dict[Vec, int]:
    offs = offsets_for(dim)
    index = {d: i for i, d in enumerate(offs)}
    table = {}
    for d in offs:
        g = o.apply(d)
        table[g] = index[d]
    if len(table) != len(offs):
        raise GeometryError(f"{o} does not preserve the {dim}D offset set")
    return table


def port_of(o: Orientation, d: Sequence[int], dim: int = DIM3) -> int:
    """Port label that an amoebot with orientation ``o`` uses for global offset d."""
    try:
        return _port_table(o, dim)[tuple(d)]  # type: ignore[index]
    except KeyError:
        raise GeometryError(f"{tuple(d)} is not a {dim}D neighbor offset") from None


def offset_of(o: Orientation, port: int, dim: int = DIM3) -> Vec:
    """Global offset reached through ``port`` of an amoebot with orientation o."""
    return o.apply(offsets_for(dim)[port])


def translate_port(my_o: Orientation, nbr_o: Orientation, my_port: int, dim: int = DIM3) -> int:
    """Re-express my label for a direction as the neighbor's label for it."""
    return port_of(nbr_o, offset_of(my_o, my_port, dim), dim)


def back_port(my_o: Orientation, nbr_o: Orientation, my_port: int, dim: int = DIM3) -> int:
    """The neighbor's port that connects back to me through ``my_port``."""
    return port_of(nbr_o, neg(offset_of(my_o, my_port, dim)), dim)


# ---------------------------------------------------------------------------
# view / spin / rotation


@dataclass(frozen=True)
class ViewSpinRotation:
    view: int  # 0..3, index into VIEW_NORMALS
    spin: int  # 0: normal agrees with the representative, 1: opposite
    rotation: int  # 0..2, which "top" offset the local (1,1,0) maps to


def _top_offsets(normal: Vec) -> list[Vec]:
    return sorted((d for d in REFERENCE_OFFSETS if dot(d, normal) == 2), reverse=True)


def decompose(o: Orientation) -> ViewSpinRotation:
    if o.det != 1:
        raise GeometryError(f"{o} is not a proper rotation")
    n = o.apply((1, 1, 1))
    for view, rep in enumerate(VIEW_NORMALS):
        if n == rep:
            spin = 0
            break
        if n == neg(rep):
            spin = 1
            break
    else:  # pragma: no cover - rotations map diagonals to diagonals
        raise GeometryError(f"{o} maps (1,1,1) off the diagonals")
    rotation = _top_offsets(n).index(o.apply((1, 1, 0)))
    return ViewSpinRotation(view, spin, rotation)


_VSR_INDEX = {decompose(o): o for o in ORIENTATIONS_3D}


def compose_vsr(v: ViewSpinRotation) -> Orientation:
    try:
        return _VSR_INDEX[v]
    except KeyError:
        raise GeometryError(f"no orientation with {v}") from None
