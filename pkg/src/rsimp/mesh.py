"""Indexed triangle mesh with per-face derived data and vertex adjacency."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import hashlib

import numpy as np
from numba import njit

from .errors import EmptyMeshError, MeshStructureError

# A face is treated as degenerate when its doubled area is below this
# fraction of its longest squared edge (collinear or repeated vertices).
DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.max - self.min))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min


class Mesh:
    """Immutable triangle mesh.

    Holds the global vertex and face lists together with the per-face unit
    normal, area and midpoint, and CSR-style vertex-vertex and vertex-face
    adjacency. Degenerate faces keep their slot in ``faces`` but carry a zero
    normal and zero area.
    """

    def __init__(self, vertices: np.ndarray, faces: np.ndarray):
        self.vertices = vertices
        self.faces = faces
        v0, v1, v2 = (vertices[faces[:, k]] for k in range(3))
        cross = np.cross(v1 - v0, v2 - v0)
        cross_len = np.linalg.norm(cross, axis=1)
        longest_sq = np.max(
            [((v1 - v0) ** 2).sum(1), ((v2 - v1) ** 2).sum(1), ((v0 - v2) ** 2).sum(1)],
            axis=0,
        )
        degenerate = cross_len <= DEGENERATE_RTOL * longest_sq
        safe_len = np.where(degenerate, 1.0, cross_len)
        self.face_normal = np.where(degenerate[:, None], 0.0, cross / safe_len[:, None])
        self.face_area = np.where(degenerate, 0.0, 0.5 * cross_len)
        self.face_midpoint = (v0 + v1 + v2) / 3.0
        self.degenerate = degenerate
        self._build_adjacency()
        for arr in (self.vertices, self.faces, self.face_normal, self.face_area,
                    self.face_midpoint, self.degenerate):
            arr.setflags(write=False)

    def _build_adjacency(self):
        n = len(self.vertices)
        f = self.faces
        # vertex -> incident faces
        vf_owner = f.ravel()
        vf_face = np.repeat(np.arange(len(f)), 3)
        order = np.lexsort((vf_face, vf_owner))
        self.vf_indptr = np.concatenate(([0], np.cumsum(np.bincount(vf_owner, minlength=n))))
        self.vf_indices = vf_face[order]
        # vertex -> neighbouring vertices, one entry per undirected edge end
        a = f[:, [0, 1, 2, 1, 2, 0]].reshape(-1, 2)
        a = a[a[:, 0] != a[:, 1]]
        pairs = np.concatenate([a, a[:, ::-1]])
        pairs = np.unique(pairs, axis=0) if len(pairs) else pairs.reshape(0, 2)
        self.vv_indptr = np.concatenate(([0], np.cumsum(np.bincount(pairs[:, 0], minlength=n))))
        self.vv_indices = pairs[:, 1].copy()

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def total_area(self) -> float:
        return float(self.face_area.sum())

    @cached_property
    def _scratch(self) -> np.ndarray:
        # zeroed work array for component searches; always restored after use
        return np.zeros(self.n_vertices, dtype=np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        return self.vv_indices[self.vv_indptr[v]:self.vv_indptr[v + 1]]

    def incident_faces(self, v: int) -> np.ndarray:
        return self.vf_indices[self.vf_indptr[v]:self.vf_indptr[v + 1]]

    @cached_property
    def digest(self) -> bytes:
        """SHA-256 over the little-endian vertex and face arrays."""
        h = hashlib.sha256()
        h.update(np.array([self.n_vertices, self.n_faces], dtype="<u8").tobytes())
        h.update(np.ascontiguousarray(self.vertices, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.faces, dtype="<i8").tobytes())
        return h.digest()

    def __repr__(self):
        return f"Mesh(n_vertices={self.n_vertices}, n_faces={self.n_faces})"


def build_mesh(positions, face_indices) -> Mesh:
    vertices = np.array(positions, dtype=np.float64)
    if vertices.size == 0:
        vertices = vertices.reshape(0, 3)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise MeshStructureError(f"vertices must be xyz triples, got shape {vertices.shape}")
    faces = np.array(face_indices, dtype=np.int64)
    if faces.size == 0:
        raise EmptyMeshError("mesh has no faces")
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise MeshStructureError(f"faces must be index triples, got shape {faces.shape}")
    if faces.min() < 0 or faces.max() >= len(vertices):
        raise MeshStructureError(
            f"face index out of range [0, {len(vertices)}): "
            f"min={faces.min()}, max={faces.max()}"
        )
    if not np.all(np.isfinite(vertices)):
        raise MeshStructureError("vertex coordinates must be finite")
    return Mesh(vertices, faces)


def bounding_box(mesh) -> Aabb:
    if len(mesh.vertices) == 0:
        raise EmptyMeshError("mesh has no vertices")
    return Aabb(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))


@njit(cache=True)
def _component_labels(indptr, indices, seeds, slot):
    n = len(seeds)
    labels = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        slot[seeds[i]] = i + 1
    queue = np.empty(n, dtype=np.int64)
    count = 0
    for i in range(n):
        if labels[i] != -1:
            continue
        labels[i] = count
        queue[0] = seeds[i]
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                j = slot[indices[k]] - 1
                if j >= 0 and labels[j] == -1:
                    labels[j] = count
                    queue[tail] = indices[k]
                    tail += 1
        count += 1
    for i in range(n):
        slot[seeds[i]] = 0
    return count, labels


def connected_components(mesh: Mesh, seeds) -> tuple[int, np.ndarray]:
    """Label the components of the subgraph induced by the vertices ``seeds``.

    Returns ``(count, labels)`` with ``labels[i]`` the component of
    ``seeds[i]``; components are numbered in order of first appearance.
    """
    seeds = np.ascontiguousarray(seeds, dtype=np.int64)
    return _component_labels(mesh.vv_indptr, mesh.vv_indices, seeds, mesh._scratch)


@dataclass
class ValidationReport:
    n_vertices: int
    n_faces: int
    degenerate_faces: int
    duplicate_faces: int
    repeated_index_faces: int
    unreferenced_vertices: int
    components: int
    finite: bool

    @property
    def ok(self) -> bool:
        """True when the mesh can be rendered as-is."""
        return self.finite and self.repeated_index_faces == 0

    def lines(self) -> list[str]:
        return [f"{k}={v}" for k, v in self.__dict__.items()] + [f"ok={self.ok}"]


def validate(mesh) -> ValidationReport:
    """Summarize structural problems without touching the mesh.

    Accepts anything exposing ``vertices`` and ``faces`` arrays, so simplified
    outputs with no faces can be checked too. Components are counted over
    vertices referenced by at least one face.
    """
    vertices = np.asarray(mesh.vertices, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(mesh.faces, dtype=np.int64).reshape(-1, 3)
    n = len(vertices)
    repeated = (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
    if len(faces):
        v0, v1, v2 = (vertices[faces[:, k]] for k in range(3))
        cross_len = np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)
        longest_sq = np.max(
            [((v1 - v0) ** 2).sum(1), ((v2 - v1) ** 2).sum(1), ((v0 - v2) ** 2).sum(1)], axis=0
        )
        degenerate = int(np.count_nonzero(cross_len <= DEGENERATE_RTOL * longest_sq))
        duplicates = len(faces) - len(np.unique(np.sort(faces, axis=1), axis=0))
    else:
        degenerate = duplicates = 0
    referenced = np.zeros(n, dtype=bool)
    referenced[faces.ravel()] = True

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b, c in faces.tolist():
        ra, rb, rc = find(a), find(b), find(c)
        parent[rb] = ra
        parent[find(rc)] = ra
    roots = {find(v) for v in np.flatnonzero(referenced).tolist()}

    return ValidationReport(
        n_vertices=n,
        n_faces=len(faces),
        degenerate_faces=degenerate,
        duplicate_faces=int(duplicates),
        repeated_index_faces=int(np.count_nonzero(repeated)),
        unreferenced_vertices=int(n - np.count_nonzero(referenced)),
        components=len(roots),
        finite=bool(np.all(np.isfinite(vertices))),
    )
