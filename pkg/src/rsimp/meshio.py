"""OBJ and PLY reading and writing.

Only positions and triangle connectivity are kept; polygons are fan
triangulated on import and normals are always recomputed from geometry.
"""
from __future__ import annotations

import io
import logging
import os
from pathlib import Path
import tempfile

import numpy as np

from .errors import MeshFormatError
from .mesh import Mesh, build_mesh

log = logging.getLogger(__name__)

PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}
FACE_LIST_NAMES = ("vertex_indices", "vertex_index")


def _infer_format(path, fmt):
    if fmt:
        fmt = fmt.lower()
        if fmt not in ("obj", "ply"):
            raise ValueError(f"unsupported mesh format {fmt!r}")
        return fmt
    if path is not None:
        ext = Path(path).suffix.lower().lstrip(".")
        if ext in ("obj", "ply"):
            return ext
    return None


def _fan(poly):
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]


# ---------------------------------------------------------------------------
# reading

def read_arrays(source, format: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Parse a mesh file into ``(vertices (n,3) float64, faces (m,3) int64)``.

    ``source`` is a path or a binary stream. No structural validation is done
    here; see :func:`read_mesh`.
    """
    if isinstance(source, (str, os.PathLike)):
        path = source
        data = Path(source).read_bytes()
    else:
        path = getattr(source, "name", None)
        data = source.read()
        if isinstance(data, str):
            data = data.encode()
    fmt = _infer_format(path if isinstance(path, (str, os.PathLike)) else None, format)
    if fmt is None:
        fmt = "ply" if data[:3] == b"ply" else "obj"
    if fmt == "ply":
        return _read_ply(data)
    return _read_obj(data)


def read_mesh(source, format: str | None = None) -> Mesh:
    vertices, faces = read_arrays(source, format)
    return build_mesh(vertices, faces)


def _read_obj(data: bytes):
    verts = []
    faces = []
    for lineno, raw in enumerate(data.decode("utf-8", errors="replace").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "v":
                if len(parts) < 4:
                    raise ValueError("vertex needs three coordinates")
                verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
            elif tag == "f":
                poly = []
                for tok in parts[1:]:
                    idx = int(tok.split("/", 1)[0])
                    if idx == 0:
                        raise ValueError("OBJ indices are 1-based; got 0")
                    poly.append(idx - 1 if idx > 0 else len(verts) + idx)
                if len(poly) < 3:
                    raise ValueError("face needs at least three vertices")
                faces.extend(_fan(poly))
        except ValueError as exc:
            raise MeshFormatError(f"bad OBJ record {tag!r}: {exc}", f"line {lineno}") from None
    return (np.array(verts, dtype=np.float64).reshape(-1, 3),
            np.array(faces, dtype=np.int64).reshape(-1, 3))


class _PlyElement:
    def __init__(self, name, count):
        self.name = name
        self.count = count
        self.props = []   # (name, dtype) or (name, (count_dtype, item_dtype))

    @property
    def has_list(self):
        return any(isinstance(t, tuple) for _, t in self.props)


def _parse_ply_header(data: bytes):
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise MeshFormatError("missing PLY header", "byte 0")
    nl = data.find(b"\n", end)
    body_start = len(data) if nl < 0 else nl + 1
    lines = data[:end].decode("ascii", errors="replace").splitlines()
    fmt = None
    elements = []
    for lineno, line in enumerate(lines, 1):
        parts = line.split()
        if not parts or parts[0] in ("ply", "comment", "obj_info"):
            continue
        try:
            if parts[0] == "format":
                fmt = parts[1]
                if fmt not in ("ascii", "binary_little_endian", "binary_big_endian"):
                    raise ValueError(f"unknown format {fmt!r}")
            elif parts[0] == "element":
                elements.append(_PlyElement(parts[1], int(parts[2])))
            elif parts[0] == "property":
                if not elements:
                    raise ValueError("property before any element")
                if parts[1] == "list":
                    elements[-1].props.append((parts[4], (PLY_TYPES[parts[2]], PLY_TYPES[parts[3]])))
                else:
                    elements[-1].props.append((parts[2], PLY_TYPES[parts[1]]))
            else:
                raise ValueError(f"unknown header keyword {parts[0]!r}")
        except (ValueError, IndexError, KeyError) as exc:
            raise MeshFormatError(f"bad PLY header: {exc}", f"line {lineno}") from None
    if fmt is None:
        raise MeshFormatError("PLY header has no format line", "byte 0")
    return fmt, elements, body_start


def _warn_ignored(element, wanted):
    extra = [name for name, _ in element.props if name not in wanted]
    if extra:
        log.warning("ignoring PLY %s properties: %s", element.name, ", ".join(extra))


def _read_ply(data: bytes):
    fmt, elements, offset = _parse_ply_header(data)
    vertices = np.zeros((0, 3))
    faces = np.zeros((0, 3), dtype=np.int64)
    if fmt == "ascii":
        tokens_iter = _AsciiTokens(data, offset)
    endian = "<" if fmt == "binary_little_endian" else ">"
    for element in elements:
        if fmt == "ascii":
            columns = _read_ascii_element(element, tokens_iter)
        else:
            columns, offset = _read_binary_element(element, data, offset, endian)
        if element.name == "vertex":
            names = [n for n, _ in element.props]
            if not all(axis in names for axis in "xyz"):
                raise MeshFormatError("vertex element lacks x/y/z properties", "header")
            _warn_ignored(element, "xyz")
            vertices = np.stack([np.asarray(columns[a], dtype=np.float64) for a in "xyz"], 1)
        elif element.name == "face":
            list_name = next((n for n in FACE_LIST_NAMES if n in columns), None)
            if list_name is None:
                raise MeshFormatError("face element lacks a vertex_indices list", "header")
            _warn_ignored(element, (list_name,))
            faces = _triangulate_lists(columns[list_name])
        elif element.count:
            log.warning("ignoring PLY element %r", element.name)
    return vertices.reshape(-1, 3), faces


def _triangulate_lists(lists):
    if isinstance(lists, np.ndarray) and lists.ndim == 2:
        if lists.shape[1] == 3:
            return lists.astype(np.int64)
        k = lists.shape[1]
        tris = [np.stack([lists[:, 0], lists[:, i], lists[:, i + 1]], 1) for i in range(1, k - 1)]
        return np.stack(tris, 1).reshape(-1, 3).astype(np.int64)
    tris = []
    for poly in lists:
        tris.extend(_fan(list(poly)))
    return np.array(tris, dtype=np.int64).reshape(-1, 3)


class _AsciiTokens:
    def __init__(self, data, offset):
        self.lines = data[offset:].decode("ascii", errors="replace").splitlines()
        self.header_lines = data[:offset].count(b"\n")
        self.pos = 0

    def next_line(self):
        while self.pos < len(self.lines):
            line = self.lines[self.pos].split()
            self.pos += 1
            if line:
                return line
        raise MeshFormatError("unexpected end of PLY data", f"line {self.header_lines + self.pos}")

    @property
    def location(self):
        return f"line {self.header_lines + self.pos}"


def _read_ascii_element(element, tokens):
    columns = {name: [] for name, _ in element.props}
    for _ in range(element.count):
        line = tokens.next_line()
        i = 0
        try:
            for name, typ in element.props:
                if isinstance(typ, tuple):
                    n = int(line[i])
                    columns[name].append([int(x) for x in line[i + 1:i + 1 + n]])
                    if len(columns[name][-1]) != n:
                        raise ValueError("short list")
                    i += 1 + n
                else:
                    columns[name].append(float(line[i]))
                    i += 1
        except (ValueError, IndexError) as exc:
            raise MeshFormatError(f"bad PLY {element.name} record: {exc}", tokens.location) from None
    return columns


def _read_binary_element(element, data, offset, endian):
    if not element.has_list:
        dtype = np.dtype([(name, endian + typ) for name, typ in element.props])
        size = dtype.itemsize * element.count
        if offset + size > len(data):
            raise MeshFormatError(f"truncated PLY {element.name} data", f"byte {len(data)}")
        arr = np.frombuffer(data, dtype=dtype, count=element.count, offset=offset)
        return {name: arr[name] for name, _ in element.props}, offset + size

    # fast path: a single list property where every list has the same length
    if len(element.props) == 1 and element.count:
        name, (ctype, itype) = element.props[0]
        cdt = np.dtype(endian + ctype)
        if offset + cdt.itemsize > len(data):
            raise MeshFormatError(f"truncated PLY {element.name} data", f"byte {offset}")
        k = int(np.frombuffer(data, dtype=cdt, count=1, offset=offset)[0])
        dtype = np.dtype([("n", cdt), ("i", endian + itype, (k,))])
        size = dtype.itemsize * element.count
        if offset + size <= len(data):
            arr = np.frombuffer(data, dtype=dtype, count=element.count, offset=offset)
            if np.all(arr["n"] == k):
                return {name: arr["i"]}, offset + size

    columns = {name: [] for name, _ in element.props}
    for _ in range(element.count):
        for name, typ in element.props:
            try:
                if isinstance(typ, tuple):
                    cdt, idt = np.dtype(endian + typ[0]), np.dtype(endian + typ[1])
                    n = int(np.frombuffer(data, dtype=cdt, count=1, offset=offset)[0])
                    offset += cdt.itemsize
                    columns[name].append(np.frombuffer(data, dtype=idt, count=n, offset=offset).tolist())
                    offset += idt.itemsize * n
                else:
                    dt = np.dtype(endian + typ)
                    columns[name].append(np.frombuffer(data, dtype=dt, count=1, offset=offset)[0])
                    offset += dt.itemsize
            except ValueError:
                raise MeshFormatError(f"truncated PLY {element.name} data", f"byte {offset}") from None
    return columns, offset


# ---------------------------------------------------------------------------
# writing

def _atomic_write(path, payload: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def encode_mesh(mesh, format: str, binary: bool = True) -> bytes:
    vertices = np.asarray(mesh.vertices, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(mesh.faces, dtype=np.int64).reshape(-1, 3)
    if format == "obj":
        out = io.StringIO()
        for x, y, z in vertices.tolist():
            out.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in (faces + 1).tolist():
            out.write(f"f {a} {b} {c}\n")
        return out.getvalue().encode()
    if format != "ply":
        raise ValueError(f"unsupported mesh format {format!r}")
    kind = "binary_little_endian" if binary else "ascii"
    header = (
        f"ply\nformat {kind} 1.0\n"
        f"element vertex {len(vertices)}\n"
        "property double x\nproperty double y\nproperty double z\n"
        f"element face {len(faces)}\n"
        "property list uchar int vertex_indices\nend_header\n"
    ).encode("ascii")
    if binary:
        rec = np.empty(len(faces), dtype=[("n", "u1"), ("i", "<i4", (3,))])
        rec["n"] = 3
        rec["i"] = faces
        return header + vertices.astype("<f8").tobytes() + rec.tobytes()
    out = io.StringIO()
    for x, y, z in vertices.tolist():
        out.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
    for a, b, c in faces.tolist():
        out.write(f"3 {a} {b} {c}\n")
    return header + out.getvalue().encode()


def write_mesh(mesh, path, format: str | None = None, binary: bool = True) -> None:
    """Write a mesh (or simplified mesh) atomically; vertex order is kept."""
    fmt = _infer_format(path, format)
    if fmt is None:
        raise ValueError(f"cannot infer mesh format from {path!r}; pass format=")
    if fmt == "ply" and len(mesh.faces) and np.asarray(mesh.faces).max() > np.iinfo(np.int32).max:
        raise ValueError("vertex index exceeds PLY int range")
    _atomic_write(path, encode_mesh(mesh, fmt, binary))
