import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsimp import shapes
from rsimp.errors import EmptyMeshError, MeshStructureError
from rsimp.mesh import bounding_box, build_mesh, connected_components, validate


def test_unit_right_triangle():
    m = build_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    np.testing.assert_allclose(m.face_normal[0], [0, 0, 1])
    assert m.face_area[0] == 0.5
    np.testing.assert_allclose(m.face_midpoint[0], [1 / 3, 1 / 3, 0])
    assert not m.degenerate[0]


def test_shared_edge_adjacency():
    m = build_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], [[0, 1, 2], [1, 3, 2]])
    for v in (1, 2):
        assert list(m.incident_faces(v)) == [0, 1]
    # each undirected neighbor appears once even though the edge is shared
    assert sorted(m.neighbors(1).tolist()) == [0, 2, 3]
    assert sorted(m.neighbors(2).tolist()) == [0, 1, 3]
    assert sorted(m.neighbors(0).tolist()) == [1, 2]


def test_degenerate_face_flagged():
    m = build_mesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    assert m.degenerate[0]
    assert m.face_area[0] == 0
    np.testing.assert_array_equal(m.face_normal[0], 0)


@pytest.mark.parametrize("verts, faces, error", [
    (np.zeros((0, 3)), np.zeros((0, 3), int), EmptyMeshError),
    ([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]], MeshStructureError),
    ([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, -1]], MeshStructureError),
    ([[0, 0], [1, 0]], [[0, 1, 0]], MeshStructureError),
])
def test_build_mesh_errors(verts, faces, error):
    with pytest.raises(error):
        build_mesh(verts, faces)


def test_arrays_read_only():
    m = shapes.cube()
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5


def test_bounding_box_examples():
    assert bounding_box(shapes.cube()).diagonal == pytest.approx(np.sqrt(3))
    tri = build_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    box = bounding_box(tri)
    np.testing.assert_array_equal(box.min, [0, 0, 0])
    np.testing.assert_array_equal(box.max, [1, 1, 0])
    assert box.diagonal == pytest.approx(np.sqrt(2))


def test_bounding_box_translation():
    m = shapes.cube()
    t = np.array([3.0, -2.0, 7.5])
    moved = build_mesh(m.vertices + t, m.faces)
    a, b = bounding_box(m), bounding_box(moved)
    assert b.diagonal == pytest.approx(a.diagonal)
    np.testing.assert_allclose(b.center, a.center + t)


def test_cube_is_closed_and_outward():
    m = shapes.cube(centered=True)
    assert m.n_faces == 12
    v, f = m.vertices, m.faces
    volume = np.einsum("ij,ij->i", v[f[:, 0]], np.cross(v[f[:, 1]], v[f[:, 2]])).sum() / 6
    assert volume == pytest.approx(1.0)
    report = validate(m)
    assert report.ok and report.components == 1 and report.degenerate_faces == 0


def test_validate_two_cubes_and_isolated_vertex():
    a = shapes.cube()
    b = build_mesh(a.vertices + 5, a.faces)
    two = shapes.merge(a, b)
    assert validate(two).components == 2
    with_extra = build_mesh(np.vstack([a.vertices, [[9, 9, 9]]]), a.faces)
    report = validate(with_extra)
    assert report.unreferenced_vertices == 1
    assert report.components == 1


def test_validate_reports_duplicates_and_repeated_indices():
    class Raw:
        vertices = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float)
        faces = np.array([[0, 1, 2], [1, 2, 0], [0, 0, 1]])
    report = validate(Raw())
    assert report.duplicate_faces == 1
    assert report.repeated_index_faces == 1
    assert not report.ok


def union_find_components(n, faces):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x
    for a, b, c in faces:
        for u, w in ((a, b), (b, c)):
            ru, rw = find(u), find(w)
            if ru != rw:
                parent[max(ru, rw)] = min(ru, rw)
    return len({find(x) for x in set(np.ravel(faces).tolist())})


def test_connected_components_matches_union_find():
    m = shapes.merge(shapes.cube(), shapes.uv_sphere(4, 8, center=(5, 0, 0)),
                     shapes.grid(3, 0.1))
    count, labels = connected_components(m, np.arange(m.n_vertices))
    assert count == union_find_components(m.n_vertices, m.faces) == 3
    # numbered by first appearance, and the scratch array is left clean
    assert labels[0] == 0 and list(np.unique(labels, return_index=True)[1]) == sorted(
        np.unique(labels, return_index=True)[1])
    assert not m._scratch.any()
    sub_count, _ = connected_components(m, np.array([0, 1, 2, 3]))
    assert sub_count == 1


rotations = st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))


def rotation_matrix(angles):
    a, b, c = angles
    rx = np.array([[1, 0, 0], [0, np.cos(a), -np.sin(a)], [0, np.sin(a), np.cos(a)]])
    ry = np.array([[np.cos(b), 0, np.sin(b)], [0, 1, 0], [-np.sin(b), 0, np.cos(b)]])
    rz = np.array([[np.cos(c), -np.sin(c), 0], [np.sin(c), np.cos(c), 0], [0, 0, 1]])
    return rz @ ry @ rx


@settings(max_examples=30, deadline=None)
@given(rotations, st.tuples(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10)))
def test_area_invariant_under_rigid_motion(angles, shift):
    m = shapes.uv_sphere(6, 10)
    moved = build_mesh(m.vertices @ rotation_matrix(angles).T + np.array(shift), m.faces)
    assert moved.total_area == pytest.approx(m.total_area, rel=1e-12)
    np.testing.assert_allclose(moved.face_area, m.face_area, rtol=1e-9, atol=1e-15)


@pytest.mark.parametrize("make", [shapes.cube, lambda: shapes.grid(5), lambda: shapes.torus(8, 6),
                                  lambda: shapes.uv_sphere(5, 9)])
def test_structural_invariants(make):
    m = make()
    ok = ~m.degenerate
    # normals are unit length and orthogonal to edges
    np.testing.assert_allclose(np.linalg.norm(m.face_normal[ok], axis=1), 1, atol=1e-12)
    v, f = m.vertices, m.faces
    for a, b in ((0, 1), (1, 2), (2, 0)):
        edge = v[f[ok, b]] - v[f[ok, a]]
        assert np.abs(np.einsum("ij,ij->i", edge, m.face_normal[ok])).max() < 1e-9
    # adjacency is symmetric
    for u in range(m.n_vertices):
        for w in m.neighbors(u):
            assert u in m.neighbors(int(w))
    # every face appears in the incidence list of each of its vertices exactly once
    for fi, tri in enumerate(f):
        for x in set(tri.tolist()):
            assert list(m.incident_faces(x)).count(fi) == 1
    # rebuilding from the same arrays is idempotent
    again = build_mesh(m.vertices, m.faces)
    assert again.digest == m.digest
    np.testing.assert_array_equal(again.face_normal, m.face_normal)
    assert again.total_area == m.total_area
