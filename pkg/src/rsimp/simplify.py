"""Coarse-to-fine mesh simplification by splitting clusters of faces.

The mesh starts as (up to) eight octant clusters. The cluster whose face
normals vary the most is repeatedly split along the principal directions of
its normal covariance until enough clusters exist; each surviving cluster
then becomes one output vertex placed at the minimizer of its face-plane
quadric, and original faces spanning three different clusters are kept.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import heapq
import logging
import math
import time
from typing import Callable, Optional

import numpy as np

from .errors import AnalysisError, CheckpointError, EmptyMeshError
from .linalg import EigenDecomposition, jacobi_eigen, solve_min_quadric
from .mesh import Mesh, bounding_box, connected_components

log = logging.getLogger(__name__)

# Half-width of the angular band used to position partitioning planes.
PLANE_BAND_DEGREES = 2.5
_COS_BAND = math.cos(math.radians(PLANE_BAND_DEGREES))


@dataclass(eq=False)
class Cluster:
    vl: np.ndarray                       # sorted vertex indices
    fl: np.ndarray                       # sorted face indices touching vl
    mean_normal: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mean_vertex: np.ndarray = field(default_factory=lambda: np.zeros(3))
    nv: float = 0.0
    area: float = 0.0
    id: int = -1

    @property
    def cp(self) -> float:
        if self.area <= 0.0:
            return 0.0
        return min(1.0, float(np.linalg.norm(self.mean_normal)) / self.area)

    def __repr__(self):
        return (f"Cluster(id={self.id}, vertices={len(self.vl)}, faces={len(self.fl)}, "
                f"nv={self.nv:.3g})")


@dataclass
class RunStats:
    init_seconds: float = 0.0
    loop_seconds: float = 0.0
    post_seconds: float = 0.0
    splits: int = 0
    max_split_seconds: float = 0.0
    stopped_by: str = ""


@dataclass
class SimplifiedMesh:
    svl: np.ndarray   # (k, 3) representative positions
    sfl: np.ndarray   # (m, 3) indices into svl
    rvp: np.ndarray   # (n,) original vertex -> svl index
    fallbacks: int = 0

    @property
    def vertices(self):
        return self.svl

    @property
    def faces(self):
        return self.sfl

    @property
    def n_vertices(self) -> int:
        return len(self.svl)

    @property
    def n_faces(self) -> int:
        return len(self.sfl)


class SimplificationState:
    """Live clusters, the variation-ordered queue and the split history.

    Clusters that can no longer be split are parked: they stay live (and
    become output vertices) but leave the queue.
    """

    def __init__(self, mesh_digest: bytes, topology_check: bool = True,
                 mesh_shape: tuple[int, int] = (0, 0)):
        self.mesh_digest = mesh_digest
        self.mesh_shape = mesh_shape          # (n_vertices, n_faces)
        self.topology_check = topology_check
        self.clusters: dict[int, Cluster] = {}
        self.parked: set[int] = set()
        self.split_log: list[tuple[int, tuple[int, ...]]] = []
        self.clusters_created = 0
        self.splits = 0
        self._heap: list[tuple[float, int]] = []
        self.last_run = RunStats()

    @property
    def live_count(self) -> int:
        return len(self.clusters)

    @property
    def queue_size(self) -> int:
        return len(self._heap)

    def add(self, cluster: Cluster, splittable: bool) -> Cluster:
        cluster.id = self.clusters_created
        self.clusters_created += 1
        self.clusters[cluster.id] = cluster
        if splittable:
            heapq.heappush(self._heap, (-cluster.nv, cluster.id))
        else:
            self.parked.add(cluster.id)
        return cluster

    def restore(self, clusters, queue_order):
        """Reinstall clusters with pre-assigned ids (checkpoint loading)."""
        self.clusters = {c.id: c for c in clusters}
        queued = set(queue_order)
        self.parked = set(self.clusters) - queued
        self._heap = [(-self.clusters[i].nv, i) for i in queue_order]
        heapq.heapify(self._heap)

    def pop(self) -> Cluster:
        _, cid = heapq.heappop(self._heap)
        return self.clusters[cid]

    def park(self, cluster: Cluster):
        self.parked.add(cluster.id)

    def queue_order(self) -> list[int]:
        """Ids of queued clusters in the order they would be popped."""
        return [cid for _, cid in sorted(self._heap)]

    def live_clusters(self) -> list[Cluster]:
        return [self.clusters[i] for i in sorted(self.clusters)]


# ---------------------------------------------------------------------------
# cluster statistics and analysis

def compute_cluster_stats(cluster: Cluster, mesh: Mesh) -> Cluster:
    fl = cluster.fl
    area = mesh.face_area[fl]
    cluster.area = float(area.sum())
    cluster.mean_normal = (mesh.face_normal[fl] * area[:, None]).sum(axis=0)
    cluster.mean_vertex = mesh.vertices[cluster.vl].mean(axis=0)
    if cluster.area > 0.0 and mesh.total_area > 0.0:
        cluster.nv = cluster.area / mesh.total_area * (1.0 - cluster.cp)
    else:
        cluster.nv = 0.0
        cluster.mean_normal = np.zeros(3)
    return cluster


def _is_splittable(cluster: Cluster, mesh: Mesh) -> bool:
    return len(cluster.vl) > 1 and bool(np.any(~mesh.degenerate[cluster.fl]))


def analyze_variation(cluster: Cluster, mesh: Mesh) -> EigenDecomposition:
    """Eigen-decompose the (unweighted) sum of face-normal outer products."""
    fl = cluster.fl[~mesh.degenerate[cluster.fl]]
    if len(fl) == 0:
        raise AnalysisError(f"cluster {cluster.id} has only degenerate faces")
    normals = mesh.face_normal[fl]
    return jacobi_eigen(normals.T @ normals)


def choose_split(eigen: EigenDecomposition, mean_normal) -> list[np.ndarray]:
    """Normals of the 1-3 partitioning planes for a cluster.

    Eigenvalues of similar size give an 8-way split; otherwise a ratio of the
    two minor eigenvalues up to 4 means curvature in both directions (4-way)
    and anything larger means one dominant direction (2-way).
    """
    c_mn, c_M, c_m = (max(0.0, float(x)) for x in eigen.values)
    dir_M = eigen.vectors[:, 1]
    dir_m = eigen.vectors[:, 2]
    if c_M < 2.0 * c_m and c_mn < 2.0 * c_M:
        normals = [dir_M, dir_m]
        length = float(np.linalg.norm(mean_normal))
        if length > 0.0:
            normals.append(np.asarray(mean_normal) / length)
        return normals
    if c_m > 0.0 and c_M / c_m <= 4.0:
        return [dir_M, dir_m]
    return [dir_M]


def position_planes(cluster: Cluster, mesh: Mesh, eigen: EigenDecomposition) -> np.ndarray:
    """Point through which the partitioning planes pass.

    Face midpoints are projected onto the plane through the mean vertex with
    the mean normal; those lying within the angular band around the projected
    major-curvature direction (either sign) are averaged.
    """
    mv = cluster.mean_vertex
    length = float(np.linalg.norm(cluster.mean_normal))
    if length == 0.0:
        return mv.copy()
    n = cluster.mean_normal / length
    c = eigen.vectors[:, 1]
    c_perp = c - (c @ n) * n
    c_len = float(np.linalg.norm(c_perp))
    if c_len < 1e-12:
        return mv.copy()
    c_perp /= c_len
    mids = mesh.face_midpoint[cluster.fl]
    projected = mids - np.outer((mids - mv) @ n, n)
    offsets = projected - mv
    dist = np.linalg.norm(offsets, axis=1)
    along = offsets @ c_perp
    in_band = (dist > 0.0) & (np.abs(along) >= _COS_BAND * dist)
    if not np.any(in_band):
        return mv.copy()
    return projected[in_band].mean(axis=0)


# ---------------------------------------------------------------------------
# partitioning

def _faces_by_group(mesh: Mesh, fl: np.ndarray, vl: np.ndarray, groups: np.ndarray, n_groups: int):
    """For each vertex group, the faces of ``fl`` with at least one vertex in it.

    ``groups[i]`` is the group of ``vl[i]``; ``vl`` is sorted.
    """
    tri = mesh.faces[fl]
    pos = np.searchsorted(vl, tri)
    pos_c = np.minimum(pos, len(vl) - 1)
    member = vl[pos_c] == tri
    labels = np.where(member, groups[pos_c], -1)
    return [fl[(labels == g).any(axis=1)] for g in range(n_groups)]


def topology_split(cluster: Cluster, mesh: Mesh) -> list[Cluster]:
    """Split a cluster into its vertex-connected components."""
    vl = cluster.vl
    count, groups = connected_components(mesh, vl)
    if count == 1:
        return [cluster]
    comp_vls = [vl[groups == g] for g in range(count)]
    fls = _faces_by_group(mesh, cluster.fl, vl, groups, count)
    return [Cluster(cvl, cfl) for cvl, cfl in zip(comp_vls, fls)]


def _split_groups(cluster: Cluster, mesh: Mesh, groups: np.ndarray, topology_check: bool):
    labels, groups = np.unique(groups, return_inverse=True)
    fls = _faces_by_group(mesh, cluster.fl, cluster.vl, groups, len(labels))
    children = []
    for g, cfl in enumerate(fls):
        child = Cluster(cluster.vl[groups == g], cfl)
        children.extend(topology_split(child, mesh) if topology_check else [child])
    for child in children:
        compute_cluster_stats(child, mesh)
    return children


def partition_cluster(cluster: Cluster, mesh: Mesh, plane_normals, anchor,
                      topology_check: bool = True) -> list[Cluster]:
    """Divide a cluster's vertices by the side of each plane they fall on.

    Faces follow their vertices, so a face straddling a plane belongs to every
    child holding one of its vertices. If the planes leave every vertex on the
    same side, vertices are split at the median of their projections onto the
    first plane normal instead. Returns an empty list if the cluster cannot be
    divided at all.
    """
    vl = cluster.vl
    if len(vl) < 2:
        return []
    offsets = mesh.vertices[vl] - np.asarray(anchor)
    codes = np.zeros(len(vl), dtype=np.int64)
    for k, normal in enumerate(plane_normals):
        codes |= (offsets @ normal >= 0.0).astype(np.int64) << k
    if np.all(codes == codes[0]):
        proj = offsets @ plane_normals[0]
        order = np.lexsort((vl, proj))
        codes = np.ones(len(vl), dtype=np.int64)
        codes[order[: (len(vl) + 1) // 2]] = 0
    return _split_groups(cluster, mesh, codes, topology_check)


def split_cluster(cluster: Cluster, mesh: Mesh, topology_check: bool = True) -> list[Cluster]:
    if not _is_splittable(cluster, mesh):
        return []
    eigen = analyze_variation(cluster, mesh)
    normals = choose_split(eigen, cluster.mean_normal)
    anchor = position_planes(cluster, mesh, eigen)
    return partition_cluster(cluster, mesh, normals, anchor, topology_check)


def init_clusters(mesh: Mesh, topology_check: bool = True) -> SimplificationState:
    """Octant split about the bounding-box centre, then queue the pieces."""
    if mesh.n_faces == 0:
        raise EmptyMeshError("mesh has no faces")
    state = SimplificationState(mesh.digest, topology_check, (mesh.n_vertices, mesh.n_faces))
    center = bounding_box(mesh).center
    side = mesh.vertices >= center
    codes = side[:, 0] + 2 * side[:, 1].astype(np.int64) + 4 * side[:, 2].astype(np.int64)
    root = Cluster(np.arange(mesh.n_vertices), np.arange(mesh.n_faces))
    for child in _split_groups(root, mesh, codes, topology_check):
        state.add(child, _is_splittable(child, mesh))
    return state


# ---------------------------------------------------------------------------
# post processing

def representative_vertex(cluster: Cluster, mesh: Mesh) -> tuple[np.ndarray, bool]:
    """Point minimizing summed squared distances to the cluster's face planes.

    Falls back to the mean vertex when the plane quadric is singular; the
    flag reports whether that happened.
    """
    fl = cluster.fl[~mesh.degenerate[cluster.fl]]
    if len(fl) == 0:
        return cluster.mean_vertex.copy(), True
    normals = mesh.face_normal[fl]
    d = -np.einsum("ij,ij->i", normals, mesh.vertices[mesh.faces[fl, 0]])
    A = normals.T @ normals
    B = normals.T @ d
    return solve_min_quadric(A, B, cluster.mean_vertex)


def retriangulate(mesh: Mesh, live_clusters, representatives) -> SimplifiedMesh:
    """Keep the original faces whose vertices land in three distinct clusters."""
    rvp = np.full(mesh.n_vertices, -1, dtype=np.int64)
    for i, cluster in enumerate(live_clusters):
        rvp[cluster.vl] = i
    return _retriangulate_map(mesh.faces, rvp, np.asarray(representatives, dtype=np.float64).reshape(-1, 3))


def _retriangulate_map(faces: np.ndarray, rvp: np.ndarray, svl: np.ndarray) -> SimplifiedMesh:
    mapped = rvp[faces]
    keep = ((mapped[:, 0] != mapped[:, 1]) & (mapped[:, 1] != mapped[:, 2])
            & (mapped[:, 0] != mapped[:, 2]))
    return SimplifiedMesh(svl, mapped[keep], rvp)


def extract(state: SimplificationState, mesh: Mesh) -> SimplifiedMesh:
    clusters = state.live_clusters()
    reps = np.empty((len(clusters), 3))
    fallbacks = 0
    for i, cluster in enumerate(clusters):
        reps[i], used = representative_vertex(cluster, mesh)
        fallbacks += used
    out = retriangulate(mesh, clusters, reps)
    out.fallbacks = fallbacks
    return out


# ---------------------------------------------------------------------------
# driver

def _clamp_target(mesh: Mesh, target: int) -> int:
    if target < 1:
        raise ValueError(f"target vertex count must be >= 1, got {target}")
    if target > mesh.n_vertices:
        log.warning("target %d exceeds input vertex count %d; clamping", target, mesh.n_vertices)
        return mesh.n_vertices
    return target


def _run(state: SimplificationState, mesh: Mesh, target: int, start: float,
         time_budget: Optional[float], clock: Callable[[], float]) -> SimplifiedMesh:
    stats = state.last_run
    deadline = None if time_budget is None else start + time_budget
    loop_start = clock()
    stopped_by = "target"
    while state.live_count < target:
        if not state.queue_size:
            stopped_by = "exhausted"
            break
        t0 = clock()
        if deadline is not None and t0 >= deadline:
            stopped_by = "time"
            break
        cluster = state.pop()
        children = split_cluster(cluster, mesh, state.topology_check)
        if len(children) < 2:
            state.park(cluster)
        else:
            del state.clusters[cluster.id]
            ids = tuple(state.add(child, _is_splittable(child, mesh)).id for child in children)
            state.split_log.append((cluster.id, ids))
            state.splits += 1
            stats.splits += 1
        stats.max_split_seconds = max(stats.max_split_seconds, clock() - t0)
    t1 = clock()
    stats.loop_seconds = t1 - loop_start
    stats.stopped_by = stopped_by
    out = extract(state, mesh)
    stats.post_seconds = clock() - t1
    return out


def simplify(mesh: Mesh, target_vertices: int, time_budget: Optional[float] = None, *,
             topology_check: bool = True,
             clock: Callable[[], float] = time.perf_counter):
    """Simplify ``mesh`` to about ``target_vertices`` vertices.

    ``time_budget`` is in seconds and counts from the call; it is checked
    before each split, so the loop may overrun by one split. Returns the
    resumable state and the simplified mesh.
    """
    target = _clamp_target(mesh, target_vertices)
    start = clock()
    state = init_clusters(mesh, topology_check)
    state.last_run = RunStats(init_seconds=clock() - start)
    return state, _run(state, mesh, target, start, time_budget, clock)


def refine(state: SimplificationState, mesh: Mesh, new_target: int,
           time_budget: Optional[float] = None, *,
           clock: Callable[[], float] = time.perf_counter):
    """Continue splitting a previous run's state up to ``new_target`` vertices.

    The result is identical to a single uninterrupted run to the same target.
    """
    if state.mesh_digest != mesh.digest:
        raise CheckpointError("simplification state does not belong to this mesh")
    target = _clamp_target(mesh, new_target)
    if target < state.live_count:
        log.warning("target %d is below the current %d clusters; nothing to refine",
                    target, state.live_count)
    start = clock()
    state.last_run = RunStats()
    return state, _run(state, mesh, target, start, time_budget, clock)


def simplify_to_faces(mesh: Mesh, target_faces: int, time_budget: Optional[float] = None, *,
                      topology_check: bool = True,
                      clock: Callable[[], float] = time.perf_counter):
    """Drive the vertex-count loop until the output has ``target_faces`` faces.

    The first vertex target comes from Euler's formula for closed triangle
    meshes (V = F/2 + 2); each further round asks for half the face deficit in
    extra vertices. Returns ``(state, simplified, rounds)``.
    """
    if target_faces < 1:
        raise ValueError(f"target face count must be >= 1, got {target_faces}")
    start = clock()
    estimate = min(target_faces // 2 + 2, mesh.n_vertices)
    state, out = simplify(mesh, estimate, time_budget, topology_check=topology_check, clock=clock)
    return _grow_to_faces(state, out, mesh, target_faces, start, time_budget, clock)


def refine_to_faces(state: SimplificationState, mesh: Mesh, target_faces: int,
                    time_budget: Optional[float] = None, *,
                    clock: Callable[[], float] = time.perf_counter):
    """Face-count counterpart of :func:`refine`; returns ``(state, simplified, rounds)``."""
    start = clock()
    state, out = refine(state, mesh, state.live_count, time_budget, clock=clock)
    state, out, rounds = _grow_to_faces(state, out, mesh, target_faces, start, time_budget, clock)
    return state, out, rounds


def _grow_to_faces(state, out, mesh, target_faces, start, time_budget, clock):
    rounds = 1
    while out.n_faces < target_faces and state.queue_size and state.live_count < mesh.n_vertices:
        if state.last_run.stopped_by == "time":
            break
        remaining = None
        if time_budget is not None:
            remaining = time_budget - (clock() - start)
            if remaining <= 0:
                break
        estimate = min(state.live_count + max(1, math.ceil((target_faces - out.n_faces) / 2)),
                       mesh.n_vertices)
        state, out = refine(state, mesh, estimate, remaining, clock=clock)
        rounds += 1
    return state, out, rounds
