"""Order-device compatibility and batch assignment.

A device can run an order when it offers the order's material, prints at
least as finely as required, and the part's bounding box fits the build
volume (optionally allowing a length/width swap). Pending orders are grouped
into one batch per chosen device; how many of them actually fit on the bed
is the packer's problem, not decided here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Device, Fleet, OrderBook, WorkOrder

DEVICE_PREFERENCES = ("SmallestFit", "FirstId")

# rejection reasons, ordered by how far the check progressed
_CLAUSES = ("offline", "m_type", "material", "accuracy", "size")


@dataclass(frozen=True)
class MatchPolicy:
    device_preference: str = "SmallestFit"
    allow_yaw_swap: bool = False

    def __post_init__(self):
        if self.device_preference not in DEVICE_PREFERENCES:
            raise ValueError(f"device_preference must be one of {DEVICE_PREFERENCES}")


@dataclass(frozen=True)
class Assignment:
    device_id: str
    order_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.order_ids:
            raise ValueError("assignment batch must be non-empty")
        if len(set(self.order_ids)) != len(self.order_ids):
            raise ValueError("assignment batch has duplicate order ids")
        object.__setattr__(self, "order_ids", tuple(self.order_ids))


@dataclass(frozen=True)
class MatchResult:
    assignments: tuple[Assignment, ...]
    unassigned: tuple[tuple[str, str], ...]

    def to_dict(self) -> dict:
        return {
            "assignments": [
                {"device_id": a.device_id, "order_ids": list(a.order_ids)}
                for a in self.assignments
            ],
            "unassigned": [
                {"order_id": oid, "reason": reason} for oid, reason in self.unassigned
            ],
        }


def _fits(order: WorkOrder, device: Device, allow_yaw_swap: bool) -> bool:
    o, v = order.spatial, device.volume
    if o.h_mm > v.h_mm:
        return False
    if o.l_mm <= v.l_mm and o.w_mm <= v.w_mm:
        return True
    return allow_yaw_swap and o.w_mm <= v.l_mm and o.l_mm <= v.w_mm


def compatible(order: WorkOrder, device: Device, policy: MatchPolicy = MatchPolicy()) -> tuple[bool, str]:
    """(True, "ok") or (False, first failing clause).

    Clause order: required technology (when the order states one), material,
    accuracy (device must print at least as finely as required), size.
    """
    if order.m_type_req is not None and order.m_type_req != device.functional.m_type:
        return False, "m_type"
    if order.material not in device.functional.materials:
        return False, "material"
    if device.performance.accuracy_mm > order.accuracy_req_mm:
        return False, "accuracy"
    if not _fits(order, device, policy.allow_yaw_swap):
        return False, "size"
    return True, "ok"


def match_orders(book: OrderBook, fleet: Fleet, policy: MatchPolicy = MatchPolicy()) -> MatchResult:
    """Assign every order to one compatible device, or explain why none took it.

    Offline devices never participate. Device choice follows the policy:
    SmallestFit picks the smallest build volume by product, FirstId the
    lexicographically first; ties break by id. Batches are sorted by
    expected time, then id. Unassigned orders carry the reason from their
    best-scoring rejection (the one that failed latest in the clause chain).
    """
    online = [d for d in fleet.devices if d.status != "Offline"]
    batches: dict[str, list[WorkOrder]] = {}
    unassigned: list[tuple[str, str]] = []

    for order in book.orders:
        candidates = []
        rejections = []  # (clause progression, device id, reason)
        for device in online:
            ok, reason = compatible(order, device, policy)
            if ok:
                candidates.append(device)
            else:
                rejections.append((_CLAUSES.index(reason), device.id, reason))
        if candidates:
            if policy.device_preference == "SmallestFit":
                chosen = min(candidates, key=lambda d: (d.volume.product, d.id))
            else:
                chosen = min(candidates, key=lambda d: d.id)
            batches.setdefault(chosen.id, []).append(order)
        elif rejections:
            rejections.sort(key=lambda r: (-r[0], r[1]))
            unassigned.append((order.id, rejections[0][2]))
        else:
            unassigned.append((order.id, "offline"))

    assignments = tuple(
        Assignment(
            device_id=device_id,
            order_ids=tuple(o.id for o in sorted(orders, key=lambda o: (o.expected_time, o.id))),
        )
        for device_id, orders in sorted(batches.items())
    )
    return MatchResult(assignments=assignments, unassigned=tuple(unassigned))
