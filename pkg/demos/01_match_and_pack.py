"""Match the sample order book onto the sample fleet, then pack each batch.

Run from the repository root:

    python demos/01_match_and_pack.py
"""

import base64
from pathlib import Path

from printmerge import load_fleet, load_orders, match_orders, shelf_pack, check_layout
from printmerge.packing import PackRequest
from printmerge.prompting import render_views

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

fleet = load_fleet(FIXTURES.joinpath("fleet.json").read_bytes())
book = load_orders(FIXTURES.joinpath("orders.json").read_bytes())

result = match_orders(book, fleet)
print("assignments:")
for assignment in result.assignments:
    print(f"  {assignment.device_id}: {', '.join(assignment.order_ids)}")
for order_id, reason in result.unassigned:
    print(f"  unassigned {order_id}: {reason}")

by_id = {o.id: o for o in book.orders}
out_dir = Path(__file__).resolve().parent / "out"
out_dir.mkdir(exist_ok=True)

for assignment in result.assignments:
    device = fleet.get(assignment.device_id)
    parts = tuple((oid, by_id[oid].spatial.dims) for oid in assignment.order_ids)
    outcome = shelf_pack(PackRequest(parts=parts, volume=device.volume, clearance_mm=2.0))
    report = check_layout(outcome.placed, device.volume)
    print(f"\n{device.id} packed {len(outcome.placed.placements)} parts "
          f"(rejected: {list(outcome.rejected) or 'none'}) -> {report.text}")
    for placement in outcome.placed.placements:
        x, y, z = placement.center
        print(f"  {placement.order_id}: center ({x:.1f}, {y:.1f}, {z:.1f})")
    for label, b64 in render_views(outcome.placed, device.volume):
        path = out_dir / f"{device.id}_{label}.png"
        path.write_bytes(base64.b64decode(b64))
        print(f"  wrote {path}")
