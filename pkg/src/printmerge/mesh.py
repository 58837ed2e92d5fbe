"""Triangle meshes: STL reading and bounding-extent derivation.

Only the vertex cloud matters here; the extents feed an order's spatial
requirement. Both ASCII and binary STL are supported.
"""

from __future__ import annotations

import math
import re
import struct
from pathlib import Path

from .errors import DegenerateMeshError, EmptyMeshError, NonFiniteError
from .model import OrderSpatial

Vertex = tuple[float, float, float]
Triangle = tuple[Vertex, Vertex, Vertex]

_ASCII_VERTEX_RE = re.compile(
    rb"vertex\s+([^\s]+)\s+([^\s]+)\s+([^\s]+)", re.IGNORECASE
)


def derive_spatial_from_mesh(mesh: list[Triangle]) -> OrderSpatial:
    """Per-axis (max - min) extents over all vertices of the mesh.

    Invariant under vertex permutation and translation. A zero extent on any
    axis (flat mesh) is rejected: such a part has no printable volume.
    """
    if not mesh:
        raise EmptyMeshError("mesh has no triangles")
    lo = [math.inf, math.inf, math.inf]
    hi = [-math.inf, -math.inf, -math.inf]
    for tri in mesh:
        for vertex in tri:
            for axis in range(3):
                c = float(vertex[axis])
                if not math.isfinite(c):
                    raise NonFiniteError(f"non-finite coordinate {vertex!r}")
                if c < lo[axis]:
                    lo[axis] = c
                if c > hi[axis]:
                    hi[axis] = c
    extents = tuple(hi[a] - lo[a] for a in range(3))
    if any(e <= 0 for e in extents):
        raise DegenerateMeshError(f"zero extent on at least one axis: {extents}")
    return OrderSpatial(*extents)


def read_stl(path: str | Path) -> list[Triangle]:
    """Read an STL file (ASCII or binary) into a triangle list."""
    data = Path(path).read_bytes()
    if _looks_ascii(data):
        return _read_ascii(data)
    return _read_binary(data)


def spatial_from_stl(path: str | Path) -> OrderSpatial:
    return derive_spatial_from_mesh(read_stl(path))


def _looks_ascii(data: bytes) -> bool:
    head = data[:512].lstrip()
    return head.startswith(b"solid") and b"facet" in data[:1024]


def _read_ascii(data: bytes) -> list[Triangle]:
    vertices = [
        (float(m.group(1)), float(m.group(2)), float(m.group(3)))
        for m in _ASCII_VERTEX_RE.finditer(data)
    ]
    if len(vertices) % 3 != 0:
        raise ValueError(f"ASCII STL vertex count {len(vertices)} is not a multiple of 3")
    return [tuple(vertices[i : i + 3]) for i in range(0, len(vertices), 3)]


def _read_binary(data: bytes) -> list[Triangle]:
    if len(data) < 84:
        raise ValueError("binary STL shorter than its 84-byte header")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + count * 50
    if len(data) < expected:
        raise ValueError(f"binary STL truncated: {len(data)} bytes, need {expected}")
    triangles: list[Triangle] = []
    offset = 84
    for _ in range(count):
        values = struct.unpack_from("<12f", data, offset)
        triangles.append(
            (
                (values[3], values[4], values[5]),
                (values[6], values[7], values[8]),
                (values[9], values[10], values[11]),
            )
        )
        offset += 50
    return triangles
