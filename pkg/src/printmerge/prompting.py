"""Planner prompt assembly and positions-answer parsing.

The system text comes from a version-stamped template file so that prompt
changes stay auditable; the template id travels with every bundle and is
recorded in run traces. Answers are expected as a ``positions = [...]``
block; the last such block in a reply wins, since models often restate the
requested format before answering.
"""

from __future__ import annotations

import base64
import io
import json
import math
import re
from dataclasses import dataclass
from importlib import resources

from PIL import Image, ImageDraw

from .errors import CountMismatchError, MismatchedLayoutError, NonFiniteError, ParseError
from .geometry import InterferenceReport, Layout
from .model import BuildVolume

DEFAULT_TEMPLATE_ID = "layout_v1"

# Placement-order part colors; the first three follow the red/green/blue
# convention of the rendered views, the rest cycle.
PALETTE: tuple[tuple[str, tuple[int, int, int]], ...] = (
    ("red", (227, 30, 36)),
    ("green", (34, 177, 76)),
    ("blue", (0, 102, 204)),
    ("orange", (255, 127, 39)),
    ("purple", (140, 60, 190)),
    ("cyan", (0, 162, 174)),
    ("magenta", (200, 30, 140)),
    ("olive", (128, 128, 32)),
)

VOLUME_EDGE_COLOR = (255, 0, 0)
CANVAS_PX = 512
MARGIN_FRACTION = 0.05

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_BLOCK_RE = re.compile(r"positions\s*=\s*\[([^\]]*)\]")
_TRIPLE_RE = re.compile(rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*\)")
_INNER_RE = re.compile(
    rf"^\s*(?:\(\s*{_NUM}\s*,\s*{_NUM}\s*,\s*{_NUM}\s*\)\s*(?:,\s*)?)*$"
)


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    images: tuple[tuple[str, str], ...]
    expected_part_count: int
    # machine-readable mirror of what the text encodes, so non-LLM planners
    # do not have to re-parse prose
    parts: tuple[tuple[str, tuple[float, float, float]], ...] = ()
    volume: BuildVolume | None = None
    clearance_mm: float = 0.0
    template_id: str = DEFAULT_TEMPLATE_ID


@dataclass(frozen=True)
class PositionsAnswer:
    positions: tuple[tuple[float, float, float], ...]


def load_template(template_id: str = DEFAULT_TEMPLATE_ID) -> str:
    return (
        resources.files("printmerge")
        .joinpath(f"templates/{template_id}.txt")
        .read_text(encoding="utf-8")
    )


def _fmt(v: float) -> str:
    return f"{v:g}"


def format_positions(positions) -> str:
    triples = ", ".join(f"({repr(float(x))}, {repr(float(y))}, {repr(float(z))})" for x, y, z in positions)
    return f"positions = [{triples}]"


def render_volume_bounds(vol: BuildVolume) -> str:
    return (
        f"(-{_fmt(vol.l_mm / 2)} to {_fmt(vol.l_mm / 2)} in x, "
        f"-{_fmt(vol.w_mm / 2)} to {_fmt(vol.w_mm / 2)} in y, "
        f"0 to {_fmt(vol.h_mm)} in z)"
    )


def _positions_literal(layout: Layout) -> str:
    return "[" + ", ".join(
        f"({repr(p.center[0])}, {repr(p.center[1])}, {repr(p.center[2])})"
        for p in layout.placements
    ) + "]"


def serialize_memory_examples(cases) -> str:
    """Compact JSON list of past layouts, most similar first."""
    examples = []
    for case in cases:
        examples.append(
            {
                "parts": [list(dims) for dims, _pos in case.final_positions],
                "positions": [list(pos) for _dims, pos in case.final_positions],
            }
        )
    return json.dumps(examples)


def build_prompt(
    layout: Layout,
    defaults: Layout,
    vol: BuildVolume,
    report: InterferenceReport,
    memory_examples=(),
    intervention: str | None = None,
    *,
    with_images: bool = True,
    template_id: str = DEFAULT_TEMPLATE_ID,
) -> PromptBundle:
    """Assemble the planner payload for one refinement step.

    ``layout`` is the current candidate, ``defaults`` the starting layout the
    fixed z values come from; both must cover the same parts in the same
    order. An operator intervention, when given, is appended verbatim as the
    final user paragraph.
    """
    current_ids = layout.order_ids()
    if current_ids != defaults.order_ids():
        raise MismatchedLayoutError(
            f"layout parts {current_ids} do not match defaults {defaults.order_ids()}"
        )
    parts = tuple((p.order_id, p.dims) for p in layout.placements)
    legend = ", ".join(
        f"{pid} ({PALETTE[i % len(PALETTE)][0]})" for i, (pid, _) in enumerate(parts)
    )
    parts_literal = "[" + ", ".join(
        f"({pid!r}, {_fmt(d[0])}, {_fmt(d[1])}, {_fmt(d[2])})" for pid, d in parts
    ) + "]"
    system_text = load_template(template_id).format(
        default_positions=_positions_literal(defaults),
        current_positions=_positions_literal(layout),
        parts=parts_literal,
        volume_bounds=render_volume_bounds(vol),
        color_legend=legend,
        clearance_mm=_fmt(layout.clearance_mm),
        memory_examples=serialize_memory_examples(memory_examples),
    )
    user_text = (
        f"Interference report: {report.text}\n"
        "Adjust the x and y positions to resolve the interference."
    )
    if intervention:
        user_text += f"\n\nOPERATOR INSTRUCTION: {intervention}"
    images = tuple(render_views(layout, vol)) if with_images else ()
    return PromptBundle(
        system_text=system_text,
        user_text=user_text,
        images=images,
        expected_part_count=len(parts),
        parts=parts,
        volume=vol,
        clearance_mm=layout.clearance_mm,
        template_id=template_id,
    )


def parse_positions(text: str, expected_count: int) -> PositionsAnswer:
    """Extract the last ``positions = [...]`` block and parse its triples."""
    matches = list(_BLOCK_RE.finditer(text))
    if not matches:
        raise ParseError("no 'positions = [...]' block found")
    inner = matches[-1].group(1)
    if not _INNER_RE.match(inner):
        raise ParseError(f"malformed positions block: {inner.strip()!r}")
    triples = _TRIPLE_RE.findall(inner)
    if len(triples) != expected_count:
        raise CountMismatchError(
            f"expected {expected_count} position triples, got {len(triples)}"
        )
    positions = []
    for sx, sy, sz in triples:
        triple = (float(sx), float(sy), float(sz))
        if not all(math.isfinite(v) for v in triple):
            raise NonFiniteError(f"non-finite coordinate in {triple!r}")
        positions.append(triple)
    return PositionsAnswer(positions=tuple(positions))


# --- orthographic view rendering ----------------------------------------------


def _render_projection(
    layout: Layout, vol: BuildVolume, horiz_axis: int, vert_axis: int
) -> bytes:
    spans = {0: vol.l_mm, 1: vol.w_mm, 2: vol.h_mm}
    lows = {0: -vol.l_mm / 2.0, 1: -vol.w_mm / 2.0, 2: 0.0}
    usable = CANVAS_PX * (1.0 - 2.0 * MARGIN_FRACTION)
    scale = min(usable / spans[horiz_axis], usable / spans[vert_axis])
    box_w = spans[horiz_axis] * scale
    box_h = spans[vert_axis] * scale
    ox = (CANVAS_PX - box_w) / 2.0
    oy = (CANVAS_PX - box_h) / 2.0

    def to_px(h: float, v: float) -> tuple[int, int]:
        col = ox + (h - lows[horiz_axis]) * scale
        row = CANVAS_PX - (oy + (v - lows[vert_axis]) * scale)
        return int(round(col)), int(round(row))

    img = Image.new("RGB", (CANVAS_PX, CANVAS_PX), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    x0, y0 = to_px(lows[horiz_axis], lows[vert_axis])
    x1, y1 = to_px(lows[horiz_axis] + spans[horiz_axis], lows[vert_axis] + spans[vert_axis])
    draw.rectangle([x0, y1, x1, y0], outline=VOLUME_EDGE_COLOR, width=2)
    for i, p in enumerate(layout.placements):
        h_lo = p.center[horiz_axis] - p.dims[horiz_axis] / 2.0
        h_hi = p.center[horiz_axis] + p.dims[horiz_axis] / 2.0
        v_lo = p.center[vert_axis] - p.dims[vert_axis] / 2.0
        v_hi = p.center[vert_axis] + p.dims[vert_axis] / 2.0
        c0, r1 = to_px(h_lo, v_lo)
        c1, r0 = to_px(h_hi, v_hi)
        draw.rectangle([c0, r0, c1, r1], fill=PALETTE[i % len(PALETTE)][1])
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def render_views(layout: Layout, vol: BuildVolume) -> list[tuple[str, str]]:
    """Top (x-y) and front (x-z) projections as base64 PNG, deterministic."""
    top = _render_projection(layout, vol, horiz_axis=0, vert_axis=1)
    front = _render_projection(layout, vol, horiz_axis=0, vert_axis=2)
    return [
        ("top", base64.b64encode(top).decode("ascii")),
        ("front", base64.b64encode(front).decode("ascii")),
    ]
