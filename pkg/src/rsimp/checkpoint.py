"""Binary checkpoints of a simplification state.

Layout (all little-endian)::

    magic      4s   b"RSMP"
    version    u32
    digest     32s  SHA-256 of the input mesh
    n_vertices u32, n_faces u32
    flags      u32  bit 0: topology check enabled
    created    u64  clusters created so far (next cluster id)
    splits     u64
    n_live     u32, n_queue u32, n_log u32
    n_live x cluster:
        id u64, nv f64, area f64, mean_normal 3f64, mean_vertex 3f64,
        n_vl u32, n_fl u32, vl n_vl*i32, fl n_fl*i32
    n_queue x u64   queued cluster ids in pop order
    n_log x (parent u64, n_children u32, children n_children*u64)
    crc32      u32  over every preceding byte
    trailer    4s   b"END!"

Cluster statistics are stored bit-exactly so a restored run continues exactly
as the uninterrupted one would have.
"""
from __future__ import annotations

from pathlib import Path
import struct
import zlib

import numpy as np

from .errors import CheckpointError
from .meshio import _atomic_write
from .simplify import Cluster, SimplificationState

MAGIC = b"RSMP"
TRAILER = b"END!"
FORMAT_VERSION = 1
EXTENSION = ".rsimp-ckpt"

_HEADER = struct.Struct("<4sI32sIIIQQIII")
_CLUSTER = struct.Struct("<Q8dII")


def encode_checkpoint(state: SimplificationState) -> bytes:
    n_vertices, n_faces = state.mesh_shape
    clusters = state.live_clusters()
    queue = state.queue_order()
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, state.mesh_digest, n_vertices, n_faces,
                          int(state.topology_check), state.clusters_created, state.splits,
                          len(clusters), len(queue), len(state.split_log))]
    for c in clusters:
        parts.append(_CLUSTER.pack(c.id, c.nv, c.area, *c.mean_normal, *c.mean_vertex,
                                   len(c.vl), len(c.fl)))
        parts.append(np.asarray(c.vl, dtype="<i4").tobytes())
        parts.append(np.asarray(c.fl, dtype="<i4").tobytes())
    parts.append(np.asarray(queue, dtype="<u8").tobytes())
    for parent, children in state.split_log:
        parts.append(struct.pack("<QI", parent, len(children)))
        parts.append(np.asarray(children, dtype="<u8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body)) + TRAILER


def save_checkpoint(state: SimplificationState, path) -> None:
    """Write ``state`` to ``path`` atomically."""
    _atomic_write(path, encode_checkpoint(state))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def unpack(self, fmt: struct.Struct):
        if self.pos + fmt.size > len(self.data):
            raise CheckpointError(f"checkpoint truncated at byte {self.pos}")
        out = fmt.unpack_from(self.data, self.pos)
        self.pos += fmt.size
        return out

    def array(self, dtype, count):
        dt = np.dtype(dtype)
        end = self.pos + dt.itemsize * count
        if end > len(self.data):
            raise CheckpointError(f"checkpoint truncated at byte {self.pos}")
        out = np.frombuffer(self.data, dtype=dt, count=count, offset=self.pos)
        self.pos = end
        return out


def decode_checkpoint(data: bytes, mesh) -> SimplificationState:
    if len(data) < _HEADER.size + 8 or data[:4] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic or too short)")
    if data[-4:] != TRAILER:
        raise CheckpointError("checkpoint truncated (missing trailer)")
    body, (crc,) = data[:-8], struct.unpack("<I", data[-8:-4])
    if zlib.crc32(body) != crc:
        raise CheckpointError("checkpoint corrupted (checksum mismatch)")

    r = _Reader(body)
    (_, version, digest, n_vertices, n_faces, flags, created, splits,
     n_live, n_queue, n_log) = r.unpack(_HEADER)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})")
    if digest != mesh.digest or n_vertices != mesh.n_vertices or n_faces != mesh.n_faces:
        raise CheckpointError("checkpoint was made for a different mesh (digest mismatch)")

    clusters = []
    for _ in range(n_live):
        cid, nv, area, *vals, n_vl, n_fl = r.unpack(_CLUSTER)
        vl = r.array("<i4", n_vl).astype(np.int64)
        fl = r.array("<i4", n_fl).astype(np.int64)
        clusters.append(Cluster(vl, fl, np.array(vals[:3]), np.array(vals[3:]), nv, area, cid))
    queue = r.array("<u8", n_queue).astype(np.int64).tolist()
    split_log = []
    pair = struct.Struct("<QI")
    for _ in range(n_log):
        parent, k = r.unpack(pair)
        split_log.append((parent, tuple(r.array("<u8", k).astype(np.int64).tolist())))
    if r.pos != len(body):
        raise CheckpointError(f"unexpected trailing data at byte {r.pos}")

    _check_consistency(clusters, queue, mesh)
    state = SimplificationState(digest, bool(flags & 1), (n_vertices, n_faces))
    state.restore(clusters, queue)
    state.clusters_created = created
    state.splits = splits
    state.split_log = split_log
    return state


def _check_consistency(clusters, queue, mesh):
    ids = {c.id for c in clusters}
    if len(ids) != len(clusters):
        raise CheckpointError("duplicate cluster ids")
    if len(set(queue)) != len(queue) or not set(queue) <= ids:
        raise CheckpointError("queue order is not a set of live cluster ids")
    seen = np.zeros(mesh.n_vertices, dtype=np.int64)
    for c in clusters:
        if len(c.vl) and (c.vl.min() < 0 or c.vl.max() >= mesh.n_vertices):
            raise CheckpointError(f"cluster {c.id} references missing vertices")
        if len(c.fl) and (c.fl.min() < 0 or c.fl.max() >= mesh.n_faces):
            raise CheckpointError(f"cluster {c.id} references missing faces")
        np.add.at(seen, c.vl, 1)
    if not np.all(seen == 1):
        raise CheckpointError("clusters do not partition the mesh vertices")


def load_checkpoint(path, mesh) -> SimplificationState:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc}") from exc
    return decode_checkpoint(data, mesh)
