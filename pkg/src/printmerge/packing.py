"""Deterministic shelf placement of parts on the build plate.

All parts rest on the bed (z = h/2); the planner loop only ever moves parts
in x and y, so stacking is never produced here either. Parts are placed
into rows along x, biggest footprint first, with the configured clearance
kept between boxes. Walls may be touched.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import DEFAULT_CLEARANCE_MM, Layout, Placement
from .model import BuildVolume

Part = tuple[str, tuple[float, float, float]]

# pad added on top of the clearance when advancing the cursor, so float
# rounding can never push an emitted layout below the strict-contact rule
_EPS_PAD = 1e-9


@dataclass(frozen=True)
class PackRequest:
    parts: tuple[Part, ...]
    volume: BuildVolume
    clearance_mm: float = DEFAULT_CLEARANCE_MM

    def __post_init__(self):
        object.__setattr__(
            self,
            "parts",
            tuple((str(pid), tuple(float(d) for d in dims)) for pid, dims in self.parts),
        )
        if not self.parts:
            raise ValueError("parts must be non-empty")


@dataclass(frozen=True)
class PackOutcome:
    placed: Layout
    rejected: tuple[str, ...]


class _Row:
    __slots__ = ("y_start", "x_cursor", "max_w", "open")

    def __init__(self, y_start: float):
        self.y_start = y_start
        self.x_cursor = 0.0
        self.max_w = 0.0
        self.open = True


def shelf_pack(req: PackRequest) -> PackOutcome:
    """Pack parts into rows on the bed; parts that fit nowhere are rejected.

    Placement is first-fit over rows after sorting parts by footprint area
    descending (ties by id ascending). A closed row's depth is fixed; only
    the last row may still grow in depth. Emitted placements are in request
    order, and the emitted layout is interference-free by construction.
    """
    vol = req.volume
    gap = req.clearance_mm + _EPS_PAD
    order = sorted(req.parts, key=lambda p: (-(p[1][0] * p[1][1]), p[0]))

    rows: list[_Row] = []
    corner_pos: dict[str, tuple[float, float]] = {}
    rejected: list[str] = []

    for pid, (l, w, h) in order:
        if h > vol.h_mm or l > vol.l_mm or w > vol.w_mm:
            rejected.append(pid)
            continue
        placed_at = None
        for row in rows:
            x = row.x_cursor + (gap if row.x_cursor > 0 else 0.0)
            if x + l > vol.l_mm:
                continue
            if row.open:
                if row.y_start + max(w, row.max_w) > vol.w_mm:
                    continue
            elif w > row.max_w:
                continue
            placed_at = (row, x)
            break
        if placed_at is None:
            y_start = 0.0
            if rows:
                last = rows[-1]
                last.open = False
                y_start = last.y_start + last.max_w + gap
            if y_start + w > vol.w_mm:
                rejected.append(pid)
                continue
            row = _Row(y_start)
            rows.append(row)
            placed_at = (row, 0.0)
        row, x = placed_at
        corner_pos[pid] = (x, row.y_start)
        row.x_cursor = x + l
        row.max_w = max(row.max_w, w)

    placements = []
    for pid, dims in req.parts:
        if pid not in corner_pos:
            continue
        x, y = corner_pos[pid]
        l, w, h = dims
        placements.append(
            Placement(
                order_id=pid,
                center=(x + l / 2.0 - vol.l_mm / 2.0, y + w / 2.0 - vol.w_mm / 2.0, h / 2.0),
                dims=dims,
            )
        )
    layout = Layout(device_id="", placements=tuple(placements), clearance_mm=req.clearance_mm)
    return PackOutcome(placed=layout, rejected=tuple(r for r, _ in req.parts if r in set(rejected)))


def initial_positions(req: PackRequest) -> Layout:
    """Starting layout for the iterative loop: every part at bed center."""
    placements = tuple(
        Placement(order_id=pid, center=(0.0, 0.0, dims[2] / 2.0), dims=dims)
        for pid, dims in req.parts
    )
    return Layout(device_id="", placements=placements, clearance_mm=req.clearance_mm)
