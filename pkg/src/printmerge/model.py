"""Fleet and order-book domain types with strict JSON persistence.

Devices carry three feature blocks: functional (technology + materials),
performance (accuracy + speed) and structural (build volume). Work orders
carry the matching requirements: bounding dimensions, material, maximum
acceptable accuracy and a start/expected-delivery time window.

All types are immutable values validated at construction; the JSON loaders
reject unknown fields and report errors with a JSON path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, IO, Union

from .errors import DuplicateIdError, SchemaError

DEVICE_STATUSES = ("Idle", "Printing", "Offline")

JsonSource = Union[bytes, str, IO]


def canonical_material(raw: str) -> str:
    """Trim and collapse internal whitespace; matching is exact afterwards."""
    return " ".join(raw.split())


def _positive(value: float, name: str) -> float:
    v = float(value)
    if not v > 0:
        raise ValueError(f"{name} must be strictly positive, got {value!r}")
    return v


@dataclass(frozen=True)
class DeviceFunctional:
    """Printing technology plus the materials the device can process."""

    m_type: str
    materials: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "m_type", canonical_material(self.m_type))
        mats = tuple(canonical_material(m) for m in self.materials)
        if not mats:
            raise ValueError("materials list must be non-empty")
        if any(not m for m in mats):
            raise ValueError("material identifiers must be non-empty strings")
        object.__setattr__(self, "materials", mats)


@dataclass(frozen=True)
class DevicePerformance:
    accuracy_mm: float
    speed_mm_s: float

    def __post_init__(self):
        object.__setattr__(self, "accuracy_mm", _positive(self.accuracy_mm, "accuracy_mm"))
        object.__setattr__(self, "speed_mm_s", _positive(self.speed_mm_s, "speed_mm_s"))


@dataclass(frozen=True)
class BuildVolume:
    """Interior printable box of a device, millimeters."""

    l_mm: float
    w_mm: float
    h_mm: float

    def __post_init__(self):
        object.__setattr__(self, "l_mm", _positive(self.l_mm, "l_mm"))
        object.__setattr__(self, "w_mm", _positive(self.w_mm, "w_mm"))
        object.__setattr__(self, "h_mm", _positive(self.h_mm, "h_mm"))

    @property
    def dims(self) -> tuple[float, float, float]:
        return (self.l_mm, self.w_mm, self.h_mm)

    @property
    def product(self) -> float:
        return self.l_mm * self.w_mm * self.h_mm


@dataclass(frozen=True)
class Device:
    id: str
    functional: DeviceFunctional
    performance: DevicePerformance
    volume: BuildVolume
    status: str = "Idle"

    def __post_init__(self):
        if not self.id:
            raise ValueError("device id must be non-empty")
        if self.status not in DEVICE_STATUSES:
            raise ValueError(f"status must be one of {DEVICE_STATUSES}, got {self.status!r}")


@dataclass(frozen=True)
class Fleet:
    devices: tuple[Device, ...]

    def __post_init__(self):
        devices = tuple(self.devices)
        seen: set[str] = set()
        for d in devices:
            if d.id in seen:
                raise DuplicateIdError("devices", f"duplicate device id {d.id!r}")
            seen.add(d.id)
        object.__setattr__(self, "devices", devices)

    def get(self, device_id: str) -> Device:
        for d in self.devices:
            if d.id == device_id:
                return d
        raise KeyError(device_id)


@dataclass(frozen=True)
class OrderSpatial:
    """Axis-aligned bounding dimensions of the part, millimeters."""

    l_mm: float
    w_mm: float
    h_mm: float

    def __post_init__(self):
        object.__setattr__(self, "l_mm", _positive(self.l_mm, "l_mm"))
        object.__setattr__(self, "w_mm", _positive(self.w_mm, "w_mm"))
        object.__setattr__(self, "h_mm", _positive(self.h_mm, "h_mm"))

    @property
    def dims(self) -> tuple[float, float, float]:
        return (self.l_mm, self.w_mm, self.h_mm)


@dataclass(frozen=True)
class WorkOrder:
    id: str
    spatial: OrderSpatial
    material: str
    accuracy_req_mm: float
    start_time: datetime
    expected_time: datetime
    mesh_ref: str | None = None
    m_type_req: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("order id must be non-empty")
        object.__setattr__(self, "material", canonical_material(self.material))
        if not self.material:
            raise ValueError("material must be non-empty")
        object.__setattr__(self, "accuracy_req_mm", _positive(self.accuracy_req_mm, "accuracy_req_mm"))
        if self.expected_time < self.start_time:
            raise ValueError(
                f"expected_time {self.expected_time.isoformat()} precedes "
                f"start_time {self.start_time.isoformat()}"
            )


@dataclass(frozen=True)
class OrderBook:
    orders: tuple[WorkOrder, ...]

    def __post_init__(self):
        orders = tuple(self.orders)
        seen: set[str] = set()
        for o in orders:
            if o.id in seen:
                raise DuplicateIdError("orders", f"duplicate order id {o.id!r}")
            seen.add(o.id)
        object.__setattr__(self, "orders", orders)


# --- strict JSON parsing -----------------------------------------------------


def _read_source(source: JsonSource) -> Any:
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        return json.loads(source)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"not well-formed JSON: {e}") from e


def _expect_object(value: Any, path: str, allowed: set[str], required: set[str]) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected object, got {type(value).__name__}")
    unknown = set(value) - allowed
    if unknown:
        raise SchemaError(path, f"unknown field(s): {', '.join(sorted(unknown))}")
    missing = required - set(value)
    if missing:
        raise SchemaError(path, f"missing required field(s): {', '.join(sorted(missing))}")
    return value


def _expect_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected array, got {type(value).__name__}")
    return value


def _expect_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(path, f"expected string, got {type(value).__name__}")
    return value


def _expect_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected number, got {type(value).__name__}")
    return float(value)


def _expect_positive(value: Any, path: str) -> float:
    v = _expect_number(value, path)
    if not v > 0:
        raise SchemaError(path, f"must be strictly positive, got {value}")
    return v


def parse_timestamp(value: Any, path: str) -> datetime:
    raw = _expect_str(value, path)
    try:
        ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError as e:
        raise SchemaError(path, f"not an ISO 8601 timestamp: {raw!r}") from e
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def format_timestamp(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _parse_dims(value: Any, path: str) -> tuple[float, float, float]:
    obj = _expect_object(value, path, {"l_mm", "w_mm", "h_mm"}, {"l_mm", "w_mm", "h_mm"})
    return (
        _expect_positive(obj["l_mm"], f"{path}.l_mm"),
        _expect_positive(obj["w_mm"], f"{path}.w_mm"),
        _expect_positive(obj["h_mm"], f"{path}.h_mm"),
    )


def _parse_device(value: Any, path: str) -> Device:
    obj = _expect_object(
        value, path,
        {"id", "functional", "performance", "volume", "status"},
        {"id", "functional", "performance", "volume"},
    )
    fn = _expect_object(
        obj["functional"], f"{path}.functional", {"m_type", "materials"}, {"m_type", "materials"}
    )
    materials = _expect_list(fn["materials"], f"{path}.functional.materials")
    if not materials:
        raise SchemaError(f"{path}.functional.materials", "must be non-empty")
    mats = tuple(
        _expect_str(m, f"{path}.functional.materials[{i}]") for i, m in enumerate(materials)
    )
    perf = _expect_object(
        obj["performance"], f"{path}.performance",
        {"accuracy_mm", "speed_mm_s"}, {"accuracy_mm", "speed_mm_s"},
    )
    l, w, h = _parse_dims(obj["volume"], f"{path}.volume")
    status = "Idle"
    if "status" in obj:
        status = _expect_str(obj["status"], f"{path}.status")
        if status not in DEVICE_STATUSES:
            raise SchemaError(f"{path}.status", f"must be one of {DEVICE_STATUSES}")
    return Device(
        id=_expect_str(obj["id"], f"{path}.id"),
        functional=DeviceFunctional(
            m_type=_expect_str(fn["m_type"], f"{path}.functional.m_type"),
            materials=mats,
        ),
        performance=DevicePerformance(
            accuracy_mm=_expect_positive(perf["accuracy_mm"], f"{path}.performance.accuracy_mm"),
            speed_mm_s=_expect_positive(perf["speed_mm_s"], f"{path}.performance.speed_mm_s"),
        ),
        volume=BuildVolume(l, w, h),
        status=status,
    )


def parse_order(value: Any, path: str = "$") -> WorkOrder:
    obj = _expect_object(
        value, path,
        {"id", "spatial", "material", "accuracy_req_mm", "start_time", "expected_time",
         "mesh_ref", "m_type_req"},
        {"id", "spatial", "material", "accuracy_req_mm", "start_time", "expected_time"},
    )
    l, w, h = _parse_dims(obj["spatial"], f"{path}.spatial")
    start = parse_timestamp(obj["start_time"], f"{path}.start_time")
    expected = parse_timestamp(obj["expected_time"], f"{path}.expected_time")
    if expected < start:
        raise SchemaError(f"{path}.expected_time", "precedes start_time")
    mesh_ref = None
    if "mesh_ref" in obj and obj["mesh_ref"] is not None:
        mesh_ref = _expect_str(obj["mesh_ref"], f"{path}.mesh_ref")
    m_type_req = None
    if "m_type_req" in obj and obj["m_type_req"] is not None:
        m_type_req = _expect_str(obj["m_type_req"], f"{path}.m_type_req")
    return WorkOrder(
        id=_expect_str(obj["id"], f"{path}.id"),
        spatial=OrderSpatial(l, w, h),
        material=_expect_str(obj["material"], f"{path}.material"),
        accuracy_req_mm=_expect_positive(obj["accuracy_req_mm"], f"{path}.accuracy_req_mm"),
        start_time=start,
        expected_time=expected,
        mesh_ref=mesh_ref,
        m_type_req=m_type_req,
    )


def load_fleet(source: JsonSource) -> Fleet:
    """Parse and validate a fleet document; unknown fields are rejected."""
    doc = _read_source(source)
    obj = _expect_object(doc, "$", {"devices"}, {"devices"})
    items = _expect_list(obj["devices"], "$.devices")
    devices = []
    seen: set[str] = set()
    for i, item in enumerate(items):
        d = _parse_device(item, f"$.devices[{i}]")
        if d.id in seen:
            raise DuplicateIdError(f"$.devices[{i}].id", f"duplicate device id {d.id!r}")
        seen.add(d.id)
        devices.append(d)
    return Fleet(devices=tuple(devices))


def load_orders(source: JsonSource) -> OrderBook:
    """Parse and validate an order-book document; unknown fields are rejected."""
    doc = _read_source(source)
    obj = _expect_object(doc, "$", {"orders"}, {"orders"})
    items = _expect_list(obj["orders"], "$.orders")
    orders = []
    seen: set[str] = set()
    for i, item in enumerate(items):
        o = parse_order(item, f"$.orders[{i}]")
        if o.id in seen:
            raise DuplicateIdError(f"$.orders[{i}].id", f"duplicate order id {o.id!r}")
        seen.add(o.id)
        orders.append(o)
    return OrderBook(orders=tuple(orders))


# --- serialization ------------------------------------------------------------


def device_to_dict(device: Device) -> dict:
    return {
        "id": device.id,
        "functional": {
            "m_type": device.functional.m_type,
            "materials": list(device.functional.materials),
        },
        "performance": {
            "accuracy_mm": device.performance.accuracy_mm,
            "speed_mm_s": device.performance.speed_mm_s,
        },
        "volume": {
            "l_mm": device.volume.l_mm,
            "w_mm": device.volume.w_mm,
            "h_mm": device.volume.h_mm,
        },
        "status": device.status,
    }


def order_to_dict(order: WorkOrder) -> dict:
    doc = {
        "id": order.id,
        "spatial": {
            "l_mm": order.spatial.l_mm,
            "w_mm": order.spatial.w_mm,
            "h_mm": order.spatial.h_mm,
        },
        "material": order.material,
        "accuracy_req_mm": order.accuracy_req_mm,
        "start_time": format_timestamp(order.start_time),
        "expected_time": format_timestamp(order.expected_time),
    }
    if order.mesh_ref is not None:
        doc["mesh_ref"] = order.mesh_ref
    if order.m_type_req is not None:
        doc["m_type_req"] = order.m_type_req
    return doc


def save_fleet(fleet: Fleet) -> bytes:
    doc = {"devices": [device_to_dict(d) for d in fleet.devices]}
    return json.dumps(doc, indent=2).encode("utf-8")


def save_orders(book: OrderBook) -> bytes:
    doc = {"orders": [order_to_dict(o) for o in book.orders]}
    return json.dumps(doc, indent=2).encode("utf-8")
