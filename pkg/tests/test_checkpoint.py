import struct

import numpy as np
import pytest

from rsimp import shapes
from rsimp.checkpoint import (
    FORMAT_VERSION,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from rsimp.errors import CheckpointError
from rsimp.simplify import refine, simplify


@pytest.fixture(scope="module")
def mesh():
    return shapes.torus(30, 24)


def same_output(a, b):
    np.testing.assert_array_equal(a.svl, b.svl)
    np.testing.assert_array_equal(a.sfl, b.sfl)
    np.testing.assert_array_equal(a.rvp, b.rvp)


def test_round_trip_preserves_state(mesh, tmp_path):
    state, _ = simplify(mesh, 60)
    path = tmp_path / "s.rsimp-ckpt"
    save_checkpoint(state, path)
    loaded = load_checkpoint(path, mesh)
    assert loaded.queue_order() == state.queue_order()
    assert loaded.parked == state.parked
    assert loaded.splits == state.splits
    assert loaded.clusters_created == state.clusters_created
    assert loaded.split_log == state.split_log
    for a, b in zip(state.live_clusters(), loaded.live_clusters()):
        assert a.id == b.id and a.nv == b.nv and a.area == b.area
        np.testing.assert_array_equal(a.vl, b.vl)
        np.testing.assert_array_equal(a.fl, b.fl)
        np.testing.assert_array_equal(a.mean_normal, b.mean_normal)
        np.testing.assert_array_equal(a.mean_vertex, b.mean_vertex)
    assert encode_checkpoint(loaded) == encode_checkpoint(state)


def test_resume_equals_uninterrupted(mesh, tmp_path):
    state, _ = simplify(mesh, 1)
    path = tmp_path / "init.rsimp-ckpt"
    save_checkpoint(state, path)
    _, resumed = refine(load_checkpoint(path, mesh), mesh, 150)
    _, direct = simplify(mesh, 150)
    same_output(resumed, direct)


def test_different_mesh_rejected(mesh):
    state, _ = simplify(mesh, 40)
    with pytest.raises(CheckpointError, match="different mesh"):
        decode_checkpoint(encode_checkpoint(state), shapes.torus(30, 25))


def test_truncated_and_corrupted(mesh):
    state, _ = simplify(mesh, 40)
    data = encode_checkpoint(state)
    with pytest.raises(CheckpointError):
        decode_checkpoint(data[: len(data) // 2], mesh)
    flipped = bytearray(data)
    flipped[100] ^= 0xFF
    with pytest.raises(CheckpointError, match="checksum"):
        decode_checkpoint(bytes(flipped), mesh)
    with pytest.raises(CheckpointError):
        decode_checkpoint(b"nope" + data[4:], mesh)


def test_version_mismatch(mesh):
    import zlib
    state, _ = simplify(mesh, 40)
    body = bytearray(encode_checkpoint(state)[:-8])
    struct.pack_into("<I", body, 4, FORMAT_VERSION + 1)
    data = bytes(body) + struct.pack("<I", zlib.crc32(body)) + b"END!"
    with pytest.raises(CheckpointError, match="version"):
        decode_checkpoint(data, mesh)


def test_missing_file(mesh, tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent", mesh)
