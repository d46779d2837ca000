"""Sampled surface-to-surface error between an original and a simplified mesh.

Distances are measured from area-uniform surface samples to the nearest point
of the other surface, using a bounding-volume hierarchy with a compiled
nearest-first traversal. Results are reported as a percentage of the original
mesh's bounding-box diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass
import json

import numpy as np
from numba import njit

from .errors import EmptyMeshError
from .mesh import DEGENERATE_RTOL

LEAF_SIZE = 8
DEFAULT_SEED = 42
MAX_DEFAULT_SAMPLES = 2_000_000


def _triangle_arrays(mesh):
    vertices = np.asarray(mesh.vertices, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(mesh.faces, dtype=np.int64).reshape(-1, 3)
    tri = vertices[faces]
    if len(tri) == 0:
        return tri, np.zeros(0)
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    area2 = np.linalg.norm(cross, axis=1)
    edges_sq = np.stack([((tri[:, (k + 1) % 3] - tri[:, k]) ** 2).sum(1) for k in range(3)])
    keep = area2 > DEGENERATE_RTOL * edges_sq.max(axis=0)
    return tri[keep], 0.5 * area2[keep]


@njit(cache=True)
def _point_triangle_sq(px, py, pz, t):
    """Squared distance from a point to triangle ``t`` (3x3, one vertex per row).

    Classifies the point into the vertex, edge or face Voronoi region of the
    triangle and measures against that feature.
    """
    ax, ay, az = t[0, 0], t[0, 1], t[0, 2]
    abx, aby, abz = t[1, 0] - ax, t[1, 1] - ay, t[1, 2] - az
    acx, acy, acz = t[2, 0] - ax, t[2, 1] - ay, t[2, 2] - az
    apx, apy, apz = px - ax, py - ay, pz - az
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return apx * apx + apy * apy + apz * apz
    bpx, bpy, bpz = px - t[1, 0], py - t[1, 1], pz - t[1, 2]
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bpx * bpx + bpy * bpy + bpz * bpz
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        s = d1 / (d1 - d3)
        qx, qy, qz = apx - s * abx, apy - s * aby, apz - s * abz
        return qx * qx + qy * qy + qz * qz
    cpx, cpy, cpz = px - t[2, 0], py - t[2, 1], pz - t[2, 2]
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cpx * cpx + cpy * cpy + cpz * cpz
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        s = d2 / (d2 - d6)
        qx, qy, qz = apx - s * acx, apy - s * acy, apz - s * acz
        return qx * qx + qy * qy + qz * qz
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        s = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        qx = bpx - s * (t[2, 0] - t[1, 0])
        qy = bpy - s * (t[2, 1] - t[1, 1])
        qz = bpz - s * (t[2, 2] - t[1, 2])
        return qx * qx + qy * qy + qz * qz
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    qx = apx - abx * v - acx * w
    qy = apy - aby * v - acy * w
    qz = apz - abz * v - acz * w
    return qx * qx + qy * qy + qz * qz


@njit(cache=True)
def _brute_sq(points, triangles):
    out = np.empty(len(points))
    for i in range(len(points)):
        best = np.inf
        for j in range(len(triangles)):
            d = _point_triangle_sq(points[i, 0], points[i, 1], points[i, 2], triangles[j])
            if d < best:
                best = d
        out[i] = best
    return out


@njit(cache=True)
def _box_sq(px, py, pz, lo, hi):
    dx = max(lo[0] - px, 0.0, px - hi[0])
    dy = max(lo[1] - py, 0.0, py - hi[1])
    dz = max(lo[2] - pz, 0.0, pz - hi[2])
    return dx * dx + dy * dy + dz * dz


@njit(cache=True)
def _bvh_query_sq(points, lo, hi, left, right, start, count, triangles):
    out = np.empty(len(points))
    stack = np.empty(256, dtype=np.int64)
    for i in range(len(points)):
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        best = np.inf
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            node = stack[top]
            if _box_sq(px, py, pz, lo[node], hi[node]) > best:
                continue
            if count[node] > 0:
                for j in range(start[node], start[node] + count[node]):
                    d = _point_triangle_sq(px, py, pz, triangles[j])
                    if d < best:
                        best = d
                continue
            l, r = left[node], right[node]
            dl = _box_sq(px, py, pz, lo[l], hi[l])
            dr = _box_sq(px, py, pz, lo[r], hi[r])
            # nearer child on top of the stack
            if dl <= dr:
                stack[top] = r
                stack[top + 1] = l
            else:
                stack[top] = l
                stack[top + 1] = r
            top += 2
        out[i] = best
    return out


def point_triangle_distance(point, triangle) -> float:
    """Exact Euclidean distance from one point to one triangle."""
    p = np.asarray(point, dtype=np.float64)
    return float(np.sqrt(_point_triangle_sq(p[0], p[1], p[2], np.asarray(triangle, dtype=np.float64))))


class SpatialIndex:
    """Bounding-volume hierarchy over the non-degenerate triangles of a mesh.

    Nodes are stored in flat arrays. A leaf has ``count > 0`` and covers
    ``order[start:start + count]``; an internal node has children ``left``
    and ``right``.
    """

    def __init__(self, triangles: np.ndarray):
        self.triangles = triangles
        n = len(triangles)
        tmin = triangles.min(axis=1)
        tmax = triangles.max(axis=1)
        centroids = triangles.mean(axis=1)
        order = np.arange(n)
        lo, hi, left, right, start, count = [], [], [], [], [], []

        def new_node():
            for lst in (lo, hi):
                lst.append(None)
            for lst in (left, right, start, count):
                lst.append(-1)
            return len(lo) - 1

        root = new_node()
        stack = [(root, 0, n)]
        while stack:
            node, s, e = stack.pop()
            idx = order[s:e]
            lo[node] = tmin[idx].min(axis=0)
            hi[node] = tmax[idx].max(axis=0)
            if e - s <= LEAF_SIZE:
                start[node], count[node] = s, e - s
                continue
            cen = centroids[idx]
            axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
            mid = (e - s) // 2
            part = np.argpartition(cen[:, axis], mid, kind="introselect")
            order[s:e] = idx[part]
            l_node, r_node = new_node(), new_node()
            left[node], right[node] = l_node, r_node
            stack.append((l_node, s, s + mid))
            stack.append((r_node, s + mid, e))

        self.order = order
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        self.left = np.array(left)
        self.right = np.array(right)
        self.start = np.array(start)
        self.count = np.array(count)
        self._sorted = triangles[order]

    def query_sq(self, points) -> np.ndarray:
        points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
        return _bvh_query_sq(points, self.lo, self.hi, self.left, self.right,
                             self.start, self.count, self._sorted)

    def query(self, points) -> np.ndarray:
        """Exact distance from each point to the nearest indexed triangle."""
        return np.sqrt(self.query_sq(points))


def build_spatial_index(mesh) -> SpatialIndex:
    triangles, _ = _triangle_arrays(mesh)
    if len(triangles) == 0:
        raise EmptyMeshError("no non-degenerate triangles to index")
    return SpatialIndex(triangles)


def brute_force_distance(points, mesh) -> np.ndarray:
    """Distance to the nearest triangle by checking every triangle."""
    triangles, _ = _triangle_arrays(mesh)
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    return np.sqrt(_brute_sq(points, np.ascontiguousarray(triangles)))


def sample_surface(mesh, n: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """``n`` points distributed uniformly by area over the mesh surface."""
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    triangles, areas = _triangle_arrays(mesh)
    total = areas.sum() if len(areas) else 0.0
    if total <= 0.0:
        raise EmptyMeshError("mesh has zero surface area")
    return _sample(triangles, areas, n, np.random.default_rng(seed))


def _sample(triangles, areas, n, rng):
    cdf = np.cumsum(areas)
    face = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    face = np.minimum(face, len(triangles) - 1)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    t = triangles[face]
    return ((1 - r1)[:, None] * t[:, 0] + (r1 * (1 - r2))[:, None] * t[:, 1]
            + (r1 * r2)[:, None] * t[:, 2])


def _point_set_distance(points, targets) -> np.ndarray:
    out = np.empty(len(points))
    for s in range(0, len(points), 4096):
        diff = points[s:s + 4096, None, :] - targets[None, :, :]
        out[s:s + 4096] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff).min(axis=1))
    return out


@dataclass
class ErrorReport:
    mean_forward: float
    mean_backward: float
    mean_symmetric: float
    normalizer: float
    percent: float
    sample_count: int
    seed: int
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "mean_fwd": self.mean_forward,
            "mean_bwd": self.mean_backward,
            "mean_sym": self.mean_symmetric,
            "diag": self.normalizer,
            "percent": self.percent,
            "samples": self.sample_count,
            "seed": self.seed,
            "degenerate": self.degenerate,
        }

    def to_text(self) -> str:
        return "\n".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.as_dict().items())

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def default_samples(mesh) -> int:
    return int(min(MAX_DEFAULT_SAMPLES, 100 * len(mesh.faces)))


def mean_error(original, simplified, samples_per_side: int | None = None,
               seed: int = DEFAULT_SEED) -> ErrorReport:
    """Mean distance between two surfaces, both directions.

    The symmetric value is the larger of the two one-sided means. If the
    simplified surface has no usable faces its vertex set stands in for it
    and the report is flagged ``degenerate``.
    """
    if samples_per_side is None:
        samples_per_side = default_samples(original)
    verts = np.asarray(original.vertices, dtype=np.float64)
    diag = float(np.linalg.norm(verts.max(axis=0) - verts.min(axis=0)))

    seq = np.random.SeedSequence(seed)
    rng_fwd, rng_bwd = (np.random.default_rng(s) for s in seq.spawn(2))

    orig_tri, orig_area = _triangle_arrays(original)
    if orig_area.sum() <= 0.0:
        raise EmptyMeshError("original mesh has zero surface area")
    orig_index = SpatialIndex(orig_tri)
    fwd_pts = _sample(orig_tri, orig_area, samples_per_side, rng_fwd)

    simp_tri, simp_area = _triangle_arrays(simplified)
    degenerate = bool(len(simp_tri) == 0 or simp_area.sum() <= 0.0)
    if degenerate:
        targets = np.asarray(simplified.vertices, dtype=np.float64).reshape(-1, 3)
        if len(targets) == 0:
            raise EmptyMeshError("simplified mesh has no vertices")
        fwd = _point_set_distance(fwd_pts, targets)
        bwd = orig_index.query(targets)
    else:
        fwd = SpatialIndex(simp_tri).query(fwd_pts)
        bwd_pts = _sample(simp_tri, simp_area, samples_per_side, rng_bwd)
        bwd = orig_index.query(bwd_pts)

    mean_fwd = float(np.mean(fwd))
    mean_bwd = float(np.mean(bwd))
    sym = max(mean_fwd, mean_bwd)
    return ErrorReport(
        mean_forward=mean_fwd,
        mean_backward=mean_bwd,
        mean_symmetric=sym,
        normalizer=diag,
        percent=100.0 * sym / diag if diag > 0 else 0.0,
        sample_count=samples_per_side,
        seed=seed,
        degenerate=degenerate,
    )
