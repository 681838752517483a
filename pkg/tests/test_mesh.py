import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from primdecomp.mesh import (
    IndexedMesh,
    MeshStructureError,
    ObjParseError,
    deduplicate_vertices,
    face_attributes,
    parse_obj,
    write_obj,
)

import meshgen


def test_parse_minimal_triangle():
    m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3")
    assert m.n_vertices == 3
    assert m.faces == [(0, 1, 2)]


def test_parse_two_index_face_is_rejected():
    with pytest.raises(ObjParseError) as exc:
        parse_obj("v 0 0 0\nv 1 0 0\nf 1 2")
    assert exc.value.line == 3


def test_quad_is_kept_whole():
    m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    assert m.faces == [(0, 1, 2, 3)]


def test_slash_syntax_and_negative_indices():
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf -3/1/1 -2/1/1 -1/1/1\n"
    assert parse_obj(text).faces == [(0, 1, 2)]


def test_comments_and_other_records_ignored():
    text = "# header\no thing\nv 0 0 0 # trailing\nv 1 0 0\nv 0 1 0\ns off\nusemtl x\nf 1 2 3\n"
    assert parse_obj(text).n_faces == 1


@pytest.mark.parametrize("text", ["v 0 0\n", "v a b c\n", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 x\n", "v 0 0 0\nf 0 1 2\n"])
def test_malformed_records(text):
    with pytest.raises(ObjParseError):
        parse_obj(text)


def test_out_of_range_index():
    with pytest.raises(MeshStructureError):
        parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n")


def test_repeated_index_in_face():
    with pytest.raises(MeshStructureError):
        IndexedMesh(np.zeros((3, 3)), [(0, 1, 1)])


def test_round_trip_is_bit_exact():
    rng = np.random.default_rng(1)
    V = rng.normal(size=(40, 3)) * 10.0 ** rng.integers(-8, 8, size=(40, 1))
    faces = [tuple(rng.choice(40, size=k, replace=False)) for k in rng.integers(3, 7, size=25)]
    m = IndexedMesh(V, faces)
    m2 = parse_obj(write_obj(m))
    assert np.array_equal(m2.vertices, m.vertices)
    assert m2.faces == m.faces


def test_dedup_connects_coincident_cubes():
    a = meshgen.box((0, 0, 0), (1, 1, 1))
    b = meshgen.box((1, 0, 0), (2, 1, 1))
    m = meshgen.merge(a, b)
    assert all(f < 6 for f in set().union(*m.adjacency[:6]))
    d = deduplicate_vertices(m, 0.0)
    assert d.n_vertices == 12
    assert any(g >= 6 for f in range(6) for g in d.adjacency[f])


def test_dedup_identity_without_duplicates():
    m = meshgen.wedge()
    d = deduplicate_vertices(m)
    assert np.array_equal(d.vertices, m.vertices)
    assert d.faces == m.faces


def test_dedup_epsilon_welds_and_drops_degenerate():
    V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1e-7, 0, 0], [0, 0, 1]], float)
    m = IndexedMesh(V, [(0, 1, 2), (0, 3, 4), (1, 2, 4)])
    d = deduplicate_vertices(m, 1e-5)
    assert d.n_vertices == 4
    assert d.n_faces == 2


def test_adjacency_is_edge_based():
    # two triangles sharing only a vertex are not adjacent
    V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], float)
    m = IndexedMesh(V, [(0, 1, 2), (0, 3, 4)])
    assert m.adjacency == [frozenset(), frozenset()]
    m2 = IndexedMesh(V, [(0, 1, 2), (0, 2, 3)])
    assert m2.adjacency == [frozenset({1}), frozenset({0})]


def test_unit_square_attributes():
    m = IndexedMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [(0, 1, 2, 3)])
    a = face_attributes(m)
    assert np.allclose(a.normal[0], [0, 0, 1])
    assert np.allclose(a.tangent[0], [0, -2, 0])
    assert a.area[0] == pytest.approx(1.0)


def test_right_triangle_attributes():
    m = IndexedMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [(0, 1, 2)])
    a = face_attributes(m)
    assert a.area[0] == pytest.approx(0.5)
    assert np.linalg.norm(a.normal[0]) == pytest.approx(1.0, abs=1e-12)


def test_triangle_tangent_is_half_regular_quad_diagonal():
    # right isosceles triangle: the tangent runs along the hypotenuse's
    # perpendicular diagonal of the square it halves
    m = IndexedMesh([[0, 0, 0], [2, 0, 0], [0, 2, 0]], [(0, 1, 2)])
    t = face_attributes(m).tangent[0]
    assert abs(t[2]) < 1e-12
    assert np.linalg.norm(t) > 0


def test_polygon_gets_fan_records():
    m = meshgen.ngon_prism(8)
    a = face_attributes(m)
    # 8 quads plus two octagons with 6 fan triangles each
    assert len(a) == 8 + 2 * 6
    assert np.array_equal(np.bincount(a.face), [1] * 8 + [6, 6])
    assert a.area[a.face == 8].sum() == pytest.approx(0.5 * 8 * np.sin(2 * np.pi / 8))


def test_zero_area_face():
    m = IndexedMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [(0, 1, 2)])
    a = face_attributes(m)
    assert a.area[0] == 0
    assert np.all(a.normal[0] == 0)


quad_coords = st.lists(st.floats(-5, 5, allow_nan=False, width=32), min_size=12, max_size=12)


@settings(max_examples=200, deadline=None)
@given(quad_coords)
def test_nonplanar_quad_normal_agrees_with_fan(coords):
    V = np.array(coords, float).reshape(4, 3)
    m = IndexedMesh(V, [(0, 1, 2, 3)])
    a = face_attributes(m)
    c = np.cross(V[0] - V[2], V[1] - V[3])
    if np.linalg.norm(c) < 1e-6:
        return
    assert np.allclose(a.normal[0], c / np.linalg.norm(c))
    # both the diagonal cross product and the fan sum are twice the vector area
    fan = np.cross(V[1] - V[0], V[2] - V[0]) + np.cross(V[2] - V[0], V[3] - V[0])
    assert np.dot(fan, c) > 0
    assert np.allclose(fan, c, atol=1e-9 * np.abs(V).max() ** 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 0.3))
def test_dedup_idempotent_and_adjacency_symmetric(seed, eps):
    rng = np.random.default_rng(seed)
    V = np.round(rng.uniform(0, 1, (30, 3)), 1)
    faces = [tuple(rng.choice(30, size=3, replace=False)) for _ in range(20)]
    m = IndexedMesh(V, faces)
    d1 = deduplicate_vertices(m, eps)
    d2 = deduplicate_vertices(d1, eps)
    assert d2.n_vertices == d1.n_vertices
    for mm in (m, d1):
        adj = mm.adjacency
        for a, nbrs in enumerate(adj):
            for b in nbrs:
                assert a in adj[b]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_normals_unit_when_area_positive(seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(12, 3))
    faces = [tuple(rng.choice(12, size=int(k), replace=False)) for k in rng.integers(3, 7, size=10)]
    a = face_attributes(IndexedMesh(V, faces))
    big = a.area > 1e-12
    assert np.allclose(np.linalg.norm(a.normal[big], axis=1), 1.0, atol=1e-9)
    assert np.all(a.area >= 0)
