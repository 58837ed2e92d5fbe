from __future__ import annotations

import math
import struct

import pytest

from printmerge.errors import DegenerateMeshError, EmptyMeshError, NonFiniteError
from printmerge.mesh import derive_spatial_from_mesh, read_stl, spatial_from_stl

UNIT_CUBE = [
    ((0, 0, 0), (1, 0, 0), (1, 1, 0)),
    ((0, 0, 0), (1, 1, 0), (0, 1, 0)),
    ((0, 0, 1), (1, 0, 1), (1, 1, 1)),
    ((0, 0, 1), (1, 1, 1), (0, 1, 1)),
    ((0, 0, 0), (0, 1, 0), (0, 1, 1)),
    ((1, 0, 0), (1, 1, 0), (1, 1, 1)),
]


def test_unit_cube_extents():
    spatial = derive_spatial_from_mesh(UNIT_CUBE)
    assert spatial.dims == (1, 1, 1)


def test_empty_mesh_rejected():
    with pytest.raises(EmptyMeshError):
        derive_spatial_from_mesh([])


def test_flat_triangle_is_degenerate():
    with pytest.raises(DegenerateMeshError):
        derive_spatial_from_mesh([((0, 0, 0), (2, 0, 0), (0, 3, 0))])


def test_non_finite_rejected():
    with pytest.raises(NonFiniteError):
        derive_spatial_from_mesh([((0, 0, 0), (1, 0, 0), (0, float("nan"), 1))])


def test_invariance_under_permutation_and_translation():
    base = derive_spatial_from_mesh(UNIT_CUBE)
    shuffled = list(reversed(UNIT_CUBE))
    translated = [
        tuple((x + 7.5, y - 3.25, z + 100.0) for x, y, z in tri) for tri in shuffled
    ]
    assert derive_spatial_from_mesh(translated) == base


def _gear_outline(teeth: int = 16, r_outer: float = 12.0, r_inner: float = 10.5):
    """Spur-gear-ish polygon with alternating tooth radii."""
    points = []
    steps = teeth * 2
    for i in range(steps):
        r = r_outer if i % 2 == 0 else r_inner
        a = 2 * math.pi * i / steps
        points.append((r * math.cos(a), r * math.sin(a)))
    return points


def make_gear_triangles(lx: float = 24.0, ly: float = 23.99, h: float = 10.0):
    """Extruded gear scaled so the bounding extents are exactly lx*ly*h."""
    outline = _gear_outline()
    xs = [p[0] for p in outline]
    ys = [p[1] for p in outline]
    sx = lx / (max(xs) - min(xs))
    sy = ly / (max(ys) - min(ys))
    scaled = [(x * sx, y * sy) for x, y in outline]
    triangles = []
    for i in range(len(scaled)):
        (x0, y0), (x1, y1) = scaled[i], scaled[(i + 1) % len(scaled)]
        # side wall quad as two triangles
        triangles.append(((x0, y0, 0.0), (x1, y1, 0.0), (x1, y1, h)))
        triangles.append(((x0, y0, 0.0), (x1, y1, h), (x0, y0, h)))
        # top and bottom fans around the axis
        triangles.append(((0.0, 0.0, 0.0), (x1, y1, 0.0), (x0, y0, 0.0)))
        triangles.append(((0.0, 0.0, h), (x0, y0, h), (x1, y1, h)))
    return triangles


def write_binary_stl(path, triangles):
    with open(path, "wb") as fh:
        fh.write(b"\0" * 80)
        fh.write(struct.pack("<I", len(triangles)))
        for tri in triangles:
            fh.write(struct.pack("<3f", 0.0, 0.0, 0.0))
            for vx, vy, vz in tri:
                fh.write(struct.pack("<3f", vx, vy, vz))
            fh.write(struct.pack("<H", 0))


def write_ascii_stl(path, triangles):
    lines = ["solid part"]
    for tri in triangles:
        lines.append("  facet normal 0 0 0")
        lines.append("    outer loop")
        for vx, vy, vz in tri:
            lines.append(f"      vertex {vx} {vy} {vz}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid part")
    path.write_text("\n".join(lines))


def _oracle_extents_binary(path):
    """Independent vertex min/max scan over the raw binary records."""
    data = path.read_bytes()
    (count,) = struct.unpack_from("<I", data, 80)
    lo = [math.inf] * 3
    hi = [-math.inf] * 3
    for i in range(count):
        values = struct.unpack_from("<12f", data, 84 + i * 50)
        for v in range(3):
            for axis in range(3):
                c = values[3 + v * 3 + axis]
                lo[axis] = min(lo[axis], c)
                hi[axis] = max(hi[axis], c)
    return tuple(hi[a] - lo[a] for a in range(3))


def test_gear_stl_extents(tmp_path):
    path = tmp_path / "gear.stl"
    write_binary_stl(path, make_gear_triangles())
    spatial = spatial_from_stl(path)
    oracle = _oracle_extents_binary(path)
    for got, via_oracle, expected in zip(spatial.dims, oracle, (24.0, 23.99, 10.0)):
        assert got == pytest.approx(via_oracle, abs=1e-9)
        assert abs(got - expected) < 0.1


def test_ascii_and_binary_stl_agree(tmp_path):
    triangles = make_gear_triangles()
    bin_path = tmp_path / "gear_bin.stl"
    asc_path = tmp_path / "gear_asc.stl"
    write_binary_stl(bin_path, triangles)
    write_ascii_stl(asc_path, triangles)
    got_bin = spatial_from_stl(bin_path)
    got_asc = spatial_from_stl(asc_path)
    # binary STL stores float32, so allow that rounding between the variants
    for a, b in zip(got_bin.dims, got_asc.dims):
        assert a == pytest.approx(b, abs=1e-3)
    assert len(read_stl(bin_path)) == len(triangles)


def test_truncated_binary_stl_rejected(tmp_path):
    path = tmp_path / "bad.stl"
    path.write_bytes(b"\0" * 83)
    with pytest.raises(ValueError):
        read_stl(path)
