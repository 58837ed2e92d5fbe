"""Interference checking for axis-aligned part placements.

Coordinate frame: x and y measured from the center of the build plate,
z from the bed upward. A part resting on the bed therefore has its center
at z = h/2. Parts are axis-aligned boxes; no rotation.

Contact rule is strict: two boxes whose faces sit exactly at the required
clearance distance do NOT interfere, and a box touching the volume wall is
still contained.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import BuildVolume

DEFAULT_CLEARANCE_MM = 2.0

PART_PART = "PartPart"
OUT_OF_VOLUME = "OutOfVolume"


@dataclass(frozen=True)
class Placement:
    """One part's center position and bounding dimensions, device frame."""

    order_id: str
    center: tuple[float, float, float]
    dims: tuple[float, float, float]

    def __post_init__(self):
        if any(not d > 0 for d in self.dims):
            raise ValueError(f"dims must be strictly positive, got {self.dims}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "dims", tuple(float(d) for d in self.dims))


@dataclass(frozen=True)
class Layout:
    device_id: str
    placements: tuple[Placement, ...]
    clearance_mm: float = DEFAULT_CLEARANCE_MM

    def __post_init__(self):
        object.__setattr__(self, "placements", tuple(self.placements))
        ids = [p.order_id for p in self.placements]
        if len(set(ids)) != len(ids):
            raise ValueError(f"placement order_ids must be distinct, got {ids}")
        if self.clearance_mm < 0:
            raise ValueError("clearance_mm must be non-negative")

    def order_ids(self) -> list[str]:
        return [p.order_id for p in self.placements]


@dataclass(frozen=True)
class InterferenceFinding:
    kind: str
    subjects: tuple[str, ...]
    penetration_mm: float

    def __post_init__(self):
        if self.penetration_mm <= 0:
            raise ValueError("findings exist only for positive penetration")


@dataclass(frozen=True)
class InterferenceReport:
    findings: tuple[InterferenceFinding, ...]
    clear: bool
    text: str

    def to_dict(self) -> dict:
        return {
            "clear": self.clear,
            "findings": [
                {
                    "kind": f.kind,
                    "subjects": list(f.subjects),
                    "penetration_mm": f.penetration_mm,
                }
                for f in self.findings
            ],
            "text": self.text,
        }


def aabb_overlap(a: Placement, b: Placement, clearance_mm: float = 0.0) -> float | None:
    """Overlap depth between two clearance-inflated boxes, or None.

    Overlap exists iff on every axis |a.center - b.center| is strictly less
    than (a.dim + b.dim)/2 + clearance. The returned depth is the minimum
    over axes of the per-axis penetration, i.e. the smallest translation
    along a single axis that separates the pair.
    """
    depth = None
    for axis in range(3):
        gap = (a.dims[axis] + b.dims[axis]) / 2.0 + clearance_mm - abs(
            a.center[axis] - b.center[axis]
        )
        if gap <= 0:
            return None
        if depth is None or gap < depth:
            depth = gap
    return depth


def containment_check(p: Placement, vol: BuildVolume) -> float | None:
    """Largest amount by which the placement's box leaves the volume, or None.

    Bounds are x, y in [-L/2, L/2] x [-W/2, W/2] and z in [0, H]; touching a
    wall is allowed.
    """
    half = (vol.l_mm / 2.0, vol.w_mm / 2.0)
    excess = 0.0
    for axis, (lo, hi) in enumerate(((-half[0], half[0]), (-half[1], half[1]), (0.0, vol.h_mm))):
        pmin = p.center[axis] - p.dims[axis] / 2.0
        pmax = p.center[axis] + p.dims[axis] / 2.0
        excess = max(excess, pmax - hi, lo - pmin)
    return excess if excess > 0 else None


def render_report_text(findings: tuple[InterferenceFinding, ...]) -> str:
    if not findings:
        return "no interference detected"
    lines = []
    for f in findings:
        if f.kind == PART_PART:
            lines.append(
                f"{f.subjects[0]} and {f.subjects[1]} interfere; "
                f"overlap depth {f.penetration_mm:.2f} mm."
            )
        else:
            lines.append(
                f"{f.subjects[0]} exceeds build volume by {f.penetration_mm:.2f} mm."
            )
    return " ".join(lines)


def check_layout(layout: Layout, vol: BuildVolume) -> InterferenceReport:
    """One finding per violating pair plus one per out-of-volume part."""
    findings: list[InterferenceFinding] = []
    placements = layout.placements
    for i in range(len(placements)):
        for j in range(i + 1, len(placements)):
            depth = aabb_overlap(placements[i], placements[j], layout.clearance_mm)
            if depth is not None:
                subjects = tuple(sorted((placements[i].order_id, placements[j].order_id)))
                findings.append(InterferenceFinding(PART_PART, subjects, depth))
    for p in placements:
        excess = containment_check(p, vol)
        if excess is not None:
            findings.append(InterferenceFinding(OUT_OF_VOLUME, (p.order_id,), excess))
    findings.sort(key=lambda f: (f.subjects, f.kind))
    ordered = tuple(findings)
    return InterferenceReport(
        findings=ordered, clear=not ordered, text=render_report_text(ordered)
    )
