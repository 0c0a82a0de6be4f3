import itertools

import pytest
from hypothesis import given, strategies as st

from amoebot import geometry as geo
from amoebot.geometry import DIM2, DIM3, REFERENCE_OFFSETS


def test_offsets_are_the_twelve_fcc_neighbors():
    assert len(set(REFERENCE_OFFSETS)) == 12
    for d in REFERENCE_OFFSETS:
        assert sorted(map(abs, d)) == [0, 1, 1]
    assert len(geo.PLANE_OFFSETS) == 6
    assert all(sum(d) == 0 for d in geo.PLANE_OFFSETS)


def test_plane_offsets_are_cyclic():
    # consecutive plane directions are adjacent: a hexagon
    ring = geo.PLANE_OFFSETS
    for a, b in zip(ring, ring[1:] + ring[:1]):
        assert geo.offsets_adjacent(a, b)


def test_cuboctahedron_has_24_edges():
    edges = geo.offset_graph_edges()
    assert len(edges) == 24
    degree = [0] * 12
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    assert degree == [4] * 12


def test_twelve_squares_through_a_node():
    p = (2, 0, 0)
    squares = geo.squares_through(p)
    assert len(squares) == 12
    for sq in squares:
        assert geo.dot(sq.a, sq.b) == 0
        assert sq.catty == geo.add(geo.add(p, sq.a), sq.b)
        assert not geo.is_offset(geo.sub(sq.catty, p))


def test_no_squares_in_the_plane():
    plane = geo.PLANE_OFFSETS
    assert not any(geo.is_square_pair(a, b) for a, b in itertools.permutations(plane, 2))


@pytest.mark.parametrize("p", [(1, 0, 0), (1, 1, 1), (0, 0, 1)])
def test_odd_parity_rejected(p):
    with pytest.raises(geo.GeometryError):
        geo.check_node(p)


def test_plane_check_in_2d():
    geo.check_node((2, 0, 0), DIM3)
    with pytest.raises(geo.GeometryError):
        geo.check_node((2, 0, 0), DIM2)
    assert geo.check_node((1, -1, 0), DIM2) == (1, -1, 0)


def test_orientation_group_sizes():
    assert len(geo.ORIENTATIONS_3D) == 24
    assert len(geo.ORIENTATIONS_2D) == 12
    assert all(o.det == 1 for o in geo.ORIENTATIONS_3D)
    assert geo.ORIENTATIONS_3D[0] == geo.IDENTITY == geo.ORIENTATIONS_2D[0]
    for o in geo.ORIENTATIONS_2D:
        assert {o.apply(d) for d in geo.PLANE_OFFSETS} == set(geo.PLANE_OFFSETS)


def test_orientations_label_ports_differently():
    tables = {tuple(geo.offset_of(o, k) for k in range(12)) for o in geo.ORIENTATIONS_3D}
    assert len(tables) == 24
    tables2 = {tuple(geo.offset_of(o, k, DIM2) for k in range(6)) for o in geo.ORIENTATIONS_2D}
    assert len(tables2) == 12


def test_orientation_names_roundtrip():
    for o in geo.ORIENTATIONS_3D + geo.ORIENTATIONS_2D:
        assert geo.Orientation.from_name(o.name) == o


def test_view_spin_rotation_is_a_bijection():
    seen = set()
    for o in geo.ORIENTATIONS_3D:
        v = geo.decompose(o)
        assert 0 <= v.view < 4 and v.spin in (0, 1) and 0 <= v.rotation < 3
        assert geo.compose_vsr(v) == o
        seen.add(v)
    assert len(seen) == 24


@pytest.mark.parametrize("dim", [DIM2, DIM3])
def test_translate_port_exhaustive(dim):
    group = geo.orientations_for(dim)
    k = geo.port_count(dim)
    for a in group:
        for b in group:
            for p in range(k):
                q = geo.translate_port(a, b, p, dim)
                assert geo.offset_of(b, q, dim) == geo.offset_of(a, p, dim)
                back = geo.back_port(a, b, p, dim)
                assert geo.offset_of(b, back, dim) == geo.neg(geo.offset_of(a, p, dim))


@given(st.sampled_from(geo.ORIENTATIONS_3D), st.sampled_from(geo.ORIENTATIONS_3D))
def test_adjacency_is_orientation_invariant(a, b):
    for i, j in itertools.combinations(range(12), 2):
        same = geo.offsets_adjacent(REFERENCE_OFFSETS[i], REFERENCE_OFFSETS[j])
        assert geo.offsets_adjacent(a.apply(REFERENCE_OFFSETS[i]), a.apply(REFERENCE_OFFSETS[j])) == same
        assert geo.is_square_pair(b.apply(REFERENCE_OFFSETS[i]), b.apply(REFERENCE_OFFSETS[j])) == geo.is_square_pair(
            REFERENCE_OFFSETS[i], REFERENCE_OFFSETS[j]
        )


@given(st.sampled_from(geo.ORIENTATIONS_3D), st.sampled_from(geo.ORIENTATIONS_3D))
def test_composition_and_inverse(a, b):
    assert a.compose(a.inverse()) == geo.IDENTITY
    v = (1, 0, -1)
    assert a.compose(b).apply(v) == a.apply(b.apply(v))
