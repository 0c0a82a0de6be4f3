"""Connectivity and contractibility of amoebot configurations.

A configuration's lattice dual is the union of the Voronoi cells of its
nodes: rhombic dodecahedra in 3D, regular hexagons in 2D.  Cells are glued
along shared faces.  Four cells around a chordless square also meet in one
dual vertex; by default such a vertex is split into one copy per fan of
face-connected cells, so cells that touch only at a point stay apart and b0
matches lattice connectivity.  ``glue_pinches=True`` keeps the plain closed
union instead.

Holes are nontrivial reduced homology over GF(2).  Dual vertices use scaled
integer coordinates: doubled in 3D (tetrahedral-hole vertices sit at
half-integers), tripled in 2D (hexagon corners are triangle centroids).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .geometry import (
    DIM2,
    DIM3,
    OFFSET_SET,
    PLANE_OFFSETS,
    REFERENCE_OFFSETS,
    Vec,
    add,
    check_node,
    offsets_for,
    sub,
)

Key = Hashable

# nodes whose closed 3D cells touch only at one octahedral-hole vertex
AXIS2_OFFSETS: tuple[Vec, ...] = (
    (2, 0, 0), (-2, 0, 0), (0, 2, 0), (0, -2, 0), (0, 0, 2), (0, 0, -2),
)


class TopologyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# cell templates at the origin


def _rd_template():
    """Rhombic dodecahedron faces around the origin, doubled coordinates.

    Each face is (neighbor offset, [(octahedral vertex, tetrahedral vertex), ...]).
    """
    faces = []
    for d in REFERENCE_OFFSETS:
        k = next(i for i in range(3) if d[i] == 0)
        octa = []
        for i in range(3):
            if d[i]:
                v = [0, 0, 0]
                v[i] = 2 * d[i]
                octa.append(tuple(v))
        tetra = []
        for s in (1, -1):
            v = list(d)
            v[k] = s
            tetra.append(tuple(v))
        faces.append((d, [(o, t) for o in octa for t in tetra]))
    return faces


def _hex_template():
    """Hexagon sides around the origin, tripled coordinates."""
    sides = []
    k = len(PLANE_OFFSETS)
    for i, d in enumerate(PLANE_OFFSETS):
        before = add(PLANE_OFFSETS[i - 1], d)
        after = add(d, PLANE_OFFSETS[(i + 1) % k])
        sides.append((d, (before, after)))
    return sides


_RD_FACES = _rd_template()
_HEX_SIDES = _hex_template()


def _scale_add(p: Vec, s: int, v: Vec) -> Vec:
    return (s * p[0] + v[0], s * p[1] + v[1], s * p[2] + v[2])


def _pair(a: Vec, b: Vec) -> tuple[Vec, Vec]:
    return (a, b) if a <= b else (b, a)


def cell_closure(p: Vec, dim: int) -> dict[int, dict[Key, tuple]]:
    """Closed cell of node p: ``{k: {key: boundary keys}}``; vertices map to ()."""
    levels: dict[int, dict[Key, tuple]] = {0: {}, 1: {}, 2: {}}
    if dim == DIM3:
        face_keys = []
        for d, edges in _RD_FACES:
            ekeys = []
            for o, t in edges:
                ov, tv = _scale_add(p, 2, o), _scale_add(p, 2, t)
                levels[0][ov] = ()
                levels[0][tv] = ()
                levels[1][(ov, tv)] = (ov, tv)
                ekeys.append((ov, tv))
            fkey = _pair(p, add(p, d))
            levels[2][fkey] = tuple(ekeys)
            face_keys.append(fkey)
        levels[3] = {p: tuple(face_keys)}
    elif dim == DIM2:
        ekeys = []
        for d, (a, b) in _HEX_SIDES:
            av, bv = _scale_add(p, 3, a), _scale_add(p, 3, b)
            levels[0][av] = ()
            levels[0][bv] = ()
            ekey = _pair(p, add(p, d))
            levels[1][ekey] = (av, bv)
            ekeys.append(ekey)
        levels[2] = {p: tuple(ekeys)}
    else:
        raise TopologyError(f"unsupported dimension {dim!r}")
    return levels


def _vertex_template(dim: int) -> list[Vec]:
    return list(cell_closure((0, 0, 0), dim)[0])


_VERTICES = {DIM2: _vertex_template(DIM2), DIM3: _vertex_template(DIM3)}


def vertex_owners(v: Vec, dim: int) -> list[Vec]:
    """Lattice nodes whose closed cells contain dual vertex v."""
    scale = 2 if dim == DIM3 else 3
    out = []
    for t in _VERTICES[dim]:
        q = (v[0] - t[0], v[1] - t[1], v[2] - t[2])
        if q[0] % scale == 0 and q[1] % scale == 0 and q[2] % scale == 0:
            out.append((q[0] // scale, q[1] // scale, q[2] // scale))
    return out


def fans(cells: Sequence[Vec]) -> list[list[Vec]]:
    """Group cells around a common dual vertex into face-connected fans."""
    groups: list[list[Vec]] = []
    for c in cells:
        touching = [g for g in groups if any(sub(c, o) in OFFSET_SET for o in g)]
        merged = [c]
        for g in touching:
            merged.extend(g)
            groups.remove(g)
        groups.append(merged)
    return groups


# ---------------------------------------------------------------------------
# complexes and homology


@dataclass
class DualComplex:
    dim: int
    levels: dict[int, dict[Key, tuple]] = field(default_factory=dict)

    @property
    def nodes(self) -> set:
        return set(self.levels[self.dim])

    def f_vector(self) -> tuple[int, ...]:
        return tuple(len(self.levels[k]) for k in range(self.dim + 1))

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.f_vector()))


def _validated(occupied: Iterable[Sequence[int]], dim: int) -> set[Vec]:
    return {check_node(p, dim) for p in occupied}


def build_dual_complex(
    occupied: Iterable[Sequence[int]], dim: int = DIM3, *, glue_pinches: bool = False
) -> DualComplex:
    nodes = _validated(occupied, dim)
    if not nodes:
        raise TopologyError("empty configuration has no dual complex")
    cx = DualComplex(dim, {k: {} for k in range(dim + 1)})
    edge_owner: dict[Key, Vec] = {}
    for p in nodes:
        for k, cells in cell_closure(p, dim).items():
            cx.levels[k].update(cells)
        if not glue_pinches:
            for e in cell_closure(p, dim)[1]:
                edge_owner.setdefault(e, p)
    if glue_pinches:
        return cx

    # replace each vertex by one copy per fan of occupied cells around it
    copy_of: dict[tuple[Vec, Vec], Key] = {}
    verts: dict[Key, tuple] = {}
    for v in cx.levels[0]:
        owners = [q for q in vertex_owners(v, dim) if q in nodes]
        for fan in fans(owners):
            rep = (v, min(fan))
            verts[rep] = ()
            for q in fan:
                copy_of[(v, q)] = rep
    cx.levels[0] = verts
    cx.levels[1] = {
        e: (copy_of[(a, edge_owner[e])], copy_of[(b, edge_owner[e])])
        for e, (a, b) in cx.levels[1].items()
    }
    return cx


def gf2_rank(rows: Iterable[int]) -> int:
    """Rank over GF(2) of a matrix whose rows are given as int bitmasks."""
    pivots: dict[int, int] = {}
    for row in rows:
        while row:
            lead = row.bit_length() - 1
            piv = pivots.get(lead)
            if piv is None:
                pivots[lead] = row
                break
            row ^= piv
    return len(pivots)


def boundary_rank(cx: DualComplex, k: int) -> int:
    """GF(2) rank of the boundary map from k-cells to (k-1)-cells."""
    if k <= 0 or k > cx.dim:
        return 0
    index = {key: i for i, key in enumerate(cx.levels[k - 1])}
    rows = []
    for bnd in cx.levels[k].values():
        r = 0
        for b in bnd:
            r ^= 1 << index[b]
        rows.append(r)
    return gf2_rank(rows)


@dataclass(frozen=True)
class BettiNumbers:
    b0: int
    b1: int
    b2: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.b0, self.b1, self.b2)

    @property
    def acyclic(self) -> bool:
        return self.as_tuple() == (1, 0, 0)


def betti(cx: DualComplex) -> BettiNumbers:
    ranks = [boundary_rank(cx, k) for k in range(cx.dim + 2)]
    counts = cx.f_vector()
    bs = [counts[k] - ranks[k] - ranks[k + 1] for k in range(cx.dim + 1)]
    if bs[cx.dim] != 0:
        raise TopologyError(f"solid union has top Betti number {bs[cx.dim]}")
    return BettiNumbers(bs[0], bs[1], bs[2] if cx.dim == DIM3 else 0)


# ---------------------------------------------------------------------------
# connectivity


def _components(nodes: set[Vec], offsets: Sequence[Vec]) -> int:
    seen: set[Vec] = set()
    count = 0
    for start in nodes:
        if start in seen:
            continue
        count += 1
        seen.add(start)
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for d in offsets:
                q = (p[0] + d[0], p[1] + d[1], p[2] + d[2])
                if q in nodes and q not in seen:
                    seen.add(q)
                    queue.append(q)
    return count


def lattice_components(occupied: Iterable[Sequence[int]], dim: int = DIM3) -> int:
    return _components(_validated(occupied, dim), offsets_for(dim))


def is_connected(occupied: Iterable[Sequence[int]], dim: int = DIM3) -> bool:
    nodes = _validated(occupied, dim)
    return bool(nodes) and _components(nodes, offsets_for(dim)) == 1


def contact_offsets(dim: int) -> tuple[Vec, ...]:
    """Offsets between nodes whose closed dual cells intersect."""
    if dim == DIM3:
        return REFERENCE_OFFSETS + AXIS2_OFFSETS
    return PLANE_OFFSETS


def is_contractible(occupied: Iterable[Sequence[int]], dim: int = DIM3) -> bool:
    nodes = _validated(occupied, dim)
    if not nodes:
        raise TopologyError("empty configuration")
    if _components(nodes, offsets_for(dim)) != 1:
        raise TopologyError("contractibility is only defined for connected configurations")
    return betti(build_dual_complex(nodes, dim)).acyclic


# ---------------------------------------------------------------------------
# Euler characteristic + complement route


def _bounding_box(nodes: Iterable[Vec], pad: int):
    xs, ys, zs = zip(*nodes)
    return (
        (min(xs) - pad, max(xs) + pad),
        (min(ys) - pad, max(ys) + pad),
        (min(zs) - pad, max(zs) + pad),
    )


def bounded_complement_components(occupied: set[Vec], dim: int = DIM3) -> int:
    """Bounded components of the complement of the dual union.

    Empty cells are linked through shared faces only.  Around a pinch vertex
    the empty cells are always face-connected, so no extra links are needed.
    """
    if not occupied:
        return 0
    offsets = offsets_for(dim)
    (x0, x1), (y0, y1), (z0, z1) = _bounding_box(occupied, 1)
    seen: set[Vec] = set()
    bounded = 0
    for p in occupied:
        for d0 in offsets:
            start = add(p, d0)
            if start in occupied or start in seen:
                continue
            seen.add(start)
            queue = deque([start])
            escaped = False
            while queue:
                q = queue.popleft()
                if not (x0 <= q[0] <= x1 and y0 <= q[1] <= y1 and z0 <= q[2] <= z1):
                    escaped = True
                    continue
                for d in offsets:
                    r = (q[0] + d[0], q[1] + d[1], q[2] + d[2])
                    if r not in occupied and r not in seen:
                        seen.add(r)
                        queue.append(r)
            if not escaped:
                bounded += 1
    return bounded


class EulerCounter:
    """Euler characteristic of the face-glued dual union under add/remove."""

    def __init__(self, dim: int = DIM3, occupied: Iterable[Sequence[int]] = ()):
        self.dim = dim
        self.nodes: set[Vec] = set()
        self.edges: dict[Key, int] = {}
        self.faces: dict[Key, int] = {}
        self.vertex_cells: dict[Vec, list[Vec]] = {}
        self.vertex_copies = 0
        for p in occupied:
            self.add(check_node(p, dim))

    def _touch(self, p: Vec, delta: int) -> None:
        closure = cell_closure(p, self.dim)
        stores = [(1, self.edges)]
        if self.dim == DIM3:
            stores.append((2, self.faces))
        for k, store in stores:
            for key in closure[k]:
                n = store.get(key, 0) + delta
                if n:
                    store[key] = n
                else:
                    del store[key]
        for v in closure[0]:
            cells = self.vertex_cells.get(v, [])
            self.vertex_copies -= len(fans(cells)) if cells else 0
            if delta > 0:
                cells = cells + [p]
            else:
                cells = [c for c in cells if c != p]
            if cells:
                self.vertex_cells[v] = cells
                self.vertex_copies += len(fans(cells))
            else:
                self.vertex_cells.pop(v, None)

    def add(self, p: Vec) -> None:
        if p in self.nodes:
            raise TopologyError(f"{p} already occupied")
        self.nodes.add(p)
        self._touch(p, +1)

    def remove(self, p: Vec) -> None:
        if p not in self.nodes:
            raise TopologyError(f"{p} is not occupied")
        self.nodes.remove(p)
        self._touch(p, -1)

    @property
    def euler(self) -> int:
        if self.dim == DIM3:
            return self.vertex_copies - len(self.edges) + len(self.faces) - len(self.nodes)
        return self.vertex_copies - len(self.edges) + len(self.nodes)


def euler_characteristic(occupied: Iterable[Sequence[int]], dim: int = DIM3) -> int:
    return build_dual_complex(occupied, dim).euler_characteristic()


def betti_by_duality(occupied: Iterable[Sequence[int]], dim: int = DIM3) -> BettiNumbers:
    """Betti numbers without boundary-matrix ranks.

    b0 from lattice adjacency, the top hole count from bounded complement
    components, and the middle one from the Euler characteristic.
    """
    nodes = _validated(occupied, dim)
    b0 = _components(nodes, offsets_for(dim))
    chi = euler_characteristic(nodes, dim)
    enclosed = bounded_complement_components(nodes, dim)
    if dim == DIM3:
        return BettiNumbers(b0, b0 + enclosed - chi, enclosed)
    return BettiNumbers(b0, b0 - chi, 0)


# ---------------------------------------------------------------------------
# boundary surface genus


def boundary_genus(cx: DualComplex) -> list[int]:
    """Genus of each boundary surface component (3D only), largest first.

    Boundary faces are faces of exactly one occupied cell.  Vertices where
    several surface sheets touch are split into one copy per fan of boundary
    faces around them before components are counted.
    """
    if cx.dim != DIM3:
        raise TopologyError("boundary genus is defined for 3D configurations only")
    nodes = cx.levels[3]
    faces = {
        f: edges
        for f, edges in cx.levels[2].items()
        if (f[0] in nodes) != (f[1] in nodes)
    }
    edge_faces: dict[Key, list] = {}
    for f, edges in faces.items():
        for e in edges:
            edge_faces.setdefault(e, []).append(f)
    for e, fs in edge_faces.items():
        if len(fs) != 2:
            raise TopologyError(f"boundary edge {e} lies on {len(fs)} boundary faces")

    parent = {f: f for f in faces}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for f, g in edge_faces.values():
        rf, rg = find(f), find(g)
        if rf != rg:
            parent[rf] = rg

    edge_ends = cx.levels[1]
    vertex_faces: dict[Key, list] = {}
    for f, edges in faces.items():
        for v in {x for e in edges for x in edge_ends[e]}:
            vertex_faces.setdefault(v, []).append(f)
    copies: dict[Key, int] = {}
    for v, fs in vertex_faces.items():
        local = {f: f for f in fs}

        def lfind(x):
            while local[x] != x:
                x = local[x]
            return x

        for f in fs:
            for e in faces[f]:
                if v in edge_ends[e]:
                    for g in edge_faces[e]:
                        a, b = lfind(f), lfind(g)
                        if a != b:
                            local[a] = b
        for root in {lfind(f) for f in fs}:
            c = find(root)
            copies[c] = copies.get(c, 0) + 1

    comp_faces: dict[Key, int] = {}
    comp_edges: dict[Key, int] = {}
    for f in faces:
        c = find(f)
        comp_faces[c] = comp_faces.get(c, 0) + 1
    for fs in edge_faces.values():
        c = find(fs[0])
        comp_edges[c] = comp_edges.get(c, 0) + 1
    genera = []
    for c in sorted(comp_faces, key=lambda k: -comp_faces[k]):
        chi = copies[c] - comp_edges[c] + comp_faces[c]
        if chi % 2:
            raise TopologyError(f"boundary component with odd Euler characteristic {chi}")
        genera.append((2 - chi) // 2)
    return genera


# ---------------------------------------------------------------------------
# incremental tracking


class RemovalTracker:
    """Exact Betti numbers of a shrinking configuration.

    The Euler characteristic is kept incrementally and the complement only
    grows, so enclosed regions are tracked with a union-find.  Each removal
    costs O(1) plus a linear connectivity scan when Betti numbers are read.
    """

    OUTSIDE = ("outside",)

    def __init__(self, occupied: Iterable[Sequence[int]], dim: int = DIM3):
        self.dim = dim
        self.counter = EulerCounter(dim, occupied)
        if not self.nodes:
            raise TopologyError("empty configuration")
        self._box = _bounding_box(self.nodes, 1)
        self._parent: dict = {self.OUTSIDE: self.OUTSIDE}
        self._roots = 1
        self._init_complement()

    @property
    def nodes(self) -> set[Vec]:
        return self.counter.nodes

    def _find(self, x):
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def _union(self, a, b) -> None:
        ra, rb = self._find(a), self._find(b)
        if ra == rb:
            return
        if ra == self.OUTSIDE:
            ra, rb = rb, ra
        self._parent[ra] = rb
        self._roots -= 1

    def _outside(self, q: Vec) -> bool:
        (x0, x1), (y0, y1), (z0, z1) = self._box
        return not (x0 <= q[0] <= x1 and y0 <= q[1] <= y1 and z0 <= q[2] <= z1)

    def _register(self, q: Vec) -> None:
        self._parent[q] = q
        self._roots += 1

    def _link(self, p: Vec) -> None:
        for d in offsets_for(self.dim):
            q = add(p, d)
            if q in self.nodes:
                continue
            if self._outside(q):
                self._union(p, self.OUTSIDE)
            elif q in self._parent:
                self._union(p, q)

    def _init_complement(self) -> None:
        (x0, x1), (y0, y1), (z0, z1) = self._box
        for x in range(x0, x1 + 1):
            for y in range(y0, y1 + 1):
                for z in range(z0, z1 + 1):
                    q = (x, y, z)
                    if (x + y + z) % 2 or q in self.nodes:
                        continue
                    if self.dim == DIM2 and x + y + z:
                        continue
                    self._register(q)
        for q in [k for k in self._parent if k != self.OUTSIDE]:
            self._link(q)

    def remove(self, p: Sequence[int]) -> None:
        p = tuple(p)
        self.counter.remove(p)  # type: ignore[arg-type]
        self._register(p)  # type: ignore[arg-type]
        self._link(p)  # type: ignore[arg-type]

    @property
    def euler(self) -> int:
        return self.counter.euler

    def betti(self) -> BettiNumbers:
        if not self.nodes:
            return BettiNumbers(0, 0, 0)
        b0 = _components(self.nodes, offsets_for(self.dim))
        enclosed = self._roots - 1
        if self.dim == DIM3:
            return BettiNumbers(b0, b0 + enclosed - self.euler, enclosed)
        return BettiNumbers(b0, b0 - self.euler, 0)

    def connected(self) -> bool:
        return bool(self.nodes) and _components(self.nodes, offsets_for(self.dim)) == 1

    def contractible(self) -> bool:
        return self.connected() and self.betti().acyclic


def attach_keeps_contractible(counter: EulerCounter, p: Vec) -> bool:
    """Whether adding p to a connected, contractible configuration keeps it so.

    ``counter`` holds the current configuration and is left unchanged.
    Connected + no enclosed region + Euler characteristic 1 is equivalent to
    acyclic once b1 = b0 + b2 - chi holds.
    """
    dim = counter.dim
    nodes = counter.nodes
    if p in nodes or not any(add(p, d) in nodes for d in offsets_for(dim)):
        return False
    counter.add(p)
    try:
        if counter.euler != 1:
            return False
        return not _encloses(nodes, p, dim)
    finally:
        counter.remove(p)


def _encloses(nodes: set[Vec], p: Vec, dim: int, local_radius: int = 2) -> bool:
    """Did occupying p (already in ``nodes``) cut off a bounded empty region?

    The complement was connected before.  If all empty contact-neighbors of p
    still reach each other inside a small window around p the answer is no;
    otherwise fall back to a global search.
    """
    offsets = offsets_for(dim)
    empty = [add(p, d) for d in offsets if add(p, d) not in nodes]
    if not empty:
        return True
    window = local_radius * 2

    def near(q):
        return max(abs(q[0] - p[0]), abs(q[1] - p[1]), abs(q[2] - p[2])) <= window

    seen = {empty[0]}
    queue = deque([empty[0]])
    targets = set(empty[1:])
    while queue and targets:
        q = queue.popleft()
        for d in offsets:
            r = (q[0] + d[0], q[1] + d[1], q[2] + d[2])
            if r in nodes or r in seen or not near(r):
                continue
            if dim == DIM2 and r[0] + r[1] + r[2]:
                continue
            seen.add(r)
            targets.discard(r)
            queue.append(r)
    if not targets:
        return False
    return bounded_complement_components(nodes, dim) > 0
