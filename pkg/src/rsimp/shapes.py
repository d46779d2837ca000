"""Procedural test meshes (grids, tori, spheres, cylinders, cubes)."""
from __future__ import annotations

import math

import numpy as np

from .mesh import Mesh, build_mesh


def _quad_faces(rows: int, cols: int, wrap_rows: bool, wrap_cols: bool) -> np.ndarray:
    """Two triangles per cell of a (rows x cols) vertex lattice."""
    r_cells = rows if wrap_rows else rows - 1
    c_cells = cols if wrap_cols else cols - 1
    i, j = np.meshgrid(np.arange(r_cells), np.arange(c_cells), indexing="ij")
    i, j = i.ravel(), j.ravel()
    i1 = (i + 1) % rows
    j1 = (j + 1) % cols
    a = i * cols + j
    b = i1 * cols + j
    c = i1 * cols + j1
    d = i * cols + j1
    return np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])


def grid(n: int = 20, spacing: float = 1.0) -> Mesh:
    """Flat n x n grid of unit squares in the z=0 plane (2n^2 triangles)."""
    xs = np.arange(n + 1) * spacing
    x, y = np.meshgrid(xs, xs, indexing="ij")
    verts = np.stack([x.ravel(), y.ravel(), np.zeros(x.size)], 1)
    return build_mesh(verts, _quad_faces(n + 1, n + 1, False, False))


def torus(n_major: int = 100, n_minor: int = 100, major_radius: float = 1.0,
          minor_radius: float = 0.4) -> Mesh:
    u = 2 * np.pi * np.arange(n_major) / n_major
    v = 2 * np.pi * np.arange(n_minor) / n_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major_radius + minor_radius * np.cos(vv)
    verts = np.stack([ring * np.cos(uu), ring * np.sin(uu), minor_radius * np.sin(vv)], 2)
    return build_mesh(verts.reshape(-1, 3), _quad_faces(n_major, n_minor, True, True))


def torus_with_faces(n_faces: int, **kwargs) -> Mesh:
    """Torus with approximately ``n_faces`` triangles, major ring twice as dense."""
    quads = max(9, n_faces // 2)
    n_minor = max(3, int(round(math.sqrt(quads / 2))))
    n_major = max(3, int(round(quads / n_minor)))
    return torus(n_major, n_minor, **kwargs)


def uv_sphere(n_lat: int = 16, n_lon: int = 32, radius: float = 1.0, center=(0.0, 0.0, 0.0),
              max_polar: float = math.pi) -> Mesh:
    """Latitude/longitude sphere; ``max_polar < pi`` gives an open cap around +z."""
    center = np.asarray(center, dtype=np.float64)
    theta = max_polar * np.arange(1, n_lat + (0 if max_polar >= math.pi else 1)) / n_lat
    phi = 2 * np.pi * np.arange(n_lon) / n_lon
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    ring = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], 2).reshape(-1, 3)
    rows = len(theta)
    verts = [np.array([[0.0, 0.0, 1.0]]), ring]
    faces = [_quad_faces(rows, n_lon, False, True) + 1]
    j = np.arange(n_lon)
    faces.append(np.stack([np.zeros(n_lon, dtype=np.int64), 1 + j, 1 + (j + 1) % n_lon], 1))
    if max_polar >= math.pi:
        south = 1 + rows * n_lon
        last = 1 + (rows - 1) * n_lon
        verts.append(np.array([[0.0, 0.0, -1.0]]))
        faces.append(np.stack([np.full(n_lon, south), last + (j + 1) % n_lon, last + j], 1))
    verts = np.concatenate(verts) * radius + center
    return build_mesh(verts, np.concatenate(faces))


def cylinder(n_around: int = 32, n_along: int = 8, radius: float = 1.0, height: float = 1.0) -> Mesh:
    """Open cylindrical band around the z axis."""
    phi = 2 * np.pi * np.arange(n_around) / n_around
    z = height * np.arange(n_along + 1) / n_along
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    verts = np.stack([radius * np.cos(pp), radius * np.sin(pp), zz], 2).reshape(-1, 3)
    return build_mesh(verts, _quad_faces(n_along + 1, n_around, False, True))


def cube(size: float = 1.0, centered: bool = False) -> Mesh:
    v = np.array([[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)], dtype=np.float64)
    f = np.array([
        [0, 2, 3], [0, 3, 1],  # z = 0
        [4, 5, 7], [4, 7, 6],  # z = 1
        [0, 1, 5], [0, 5, 4],  # y = 0
        [2, 6, 7], [2, 7, 3],  # y = 1
        [0, 4, 6], [0, 6, 2],  # x = 0
        [1, 3, 7], [1, 7, 5],  # x = 1
    ])
    if centered:
        v -= 0.5
    return build_mesh(v * size, f)


def merge(*meshes: Mesh) -> Mesh:
    verts, faces, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += m.n_vertices
    return build_mesh(np.concatenate(verts), np.concatenate(faces))
