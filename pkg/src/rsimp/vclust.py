"""Uniform vertex clustering baseline.

Vertices are binned into a grid of cubic voxels spanning the bounding box;
each occupied voxel becomes one output vertex at the plain (unweighted) mean
of its members, and faces are kept when their corners land in three
different voxels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Aabb, Mesh, bounding_box
from .simplify import SimplifiedMesh, _retriangulate_map

MAX_RESOLUTION = 1 << 20


@dataclass
class VoxelGrid:
    resolution: int
    box: Aabb
    cell_size: float
    keys: np.ndarray      # (n_vertices,) linear voxel key per vertex

    def coords(self, points) -> np.ndarray:
        return voxel_coords(points, self.box.min, self.cell_size, self.resolution)


def voxel_coords(points, origin, cell_size, resolution) -> np.ndarray:
    if cell_size <= 0.0:
        return np.zeros((len(points), 3), dtype=np.int64)
    idx = np.floor((np.asarray(points) - origin) / cell_size).astype(np.int64)
    return np.clip(idx, 0, resolution - 1)


def voxelize(mesh: Mesh, resolution: int) -> VoxelGrid:
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    box = bounding_box(mesh)
    cell = float(box.extent.max()) / resolution
    c = voxel_coords(mesh.vertices, box.min, cell, resolution)
    keys = (c[:, 0] * resolution + c[:, 1]) * resolution + c[:, 2]
    return VoxelGrid(resolution, box, cell, keys)


def occupancy(mesh: Mesh, resolution: int) -> int:
    return len(np.unique(voxelize(mesh, resolution).keys))


def cluster_simplify(mesh: Mesh, resolution: int) -> SimplifiedMesh:
    grid = voxelize(mesh, resolution)
    _, rvp = np.unique(grid.keys, return_inverse=True)
    rvp = rvp.ravel()
    counts = np.bincount(rvp)
    svl = np.stack([np.bincount(rvp, weights=mesh.vertices[:, k]) for k in range(3)], 1)
    svl /= counts[:, None]
    return _retriangulate_map(mesh.faces, rvp, svl)


def resolution_for_target(mesh: Mesh, target_vertices: int) -> int:
    """Smallest grid resolution whose occupied-voxel count reaches the target.

    Occupancy is not monotone in resolution, so the result comes from an
    exponential-then-binary search that re-counts occupancy at every probe:
    the returned resolution reaches the target but a smaller one might too.
    If no resolution reaches it (too few distinct positions), the search
    stops at the first resolution separating every distinct position.
    """
    if target_vertices < 1:
        raise ValueError(f"target must be >= 1, got {target_vertices}")
    distinct = len(np.unique(mesh.vertices, axis=0))
    goal = min(target_vertices, distinct)
    if goal <= 1:
        return 1
    lo, hi = 1, 2
    while occupancy(mesh, hi) < goal:
        lo, hi = hi, hi * 2
        if hi > MAX_RESOLUTION:
            return MAX_RESOLUTION
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if occupancy(mesh, mid) >= goal:
            hi = mid
        else:
            lo = mid
    return hi
